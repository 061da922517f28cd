"""Command-line entry point: ``cosneuron <subcommand> ...``.

Exit status is 0 on success, 2 on a configuration or input error and 3 on
a numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
import warnings
from fractions import Fraction
from typing import List, Optional, TextIO

import numpy as np

from ._validation import ConfigError, CosNeuronError, as_delta
from .experiment import (
    SEED_ENV,
    ExperimentConfig,
    emit_report,
    landscape_markdown,
    load_config,
    parse_config_text,
    recovery_config_for,
    run_cell,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _default_seed() -> int:
    return ExperimentConfig(mode="recover-cosine").resolved_seed()


def _open_in(path: str) -> TextIO:
    return sys.stdin if path == "-" else open(path, encoding="utf-8")


def _open_out(path: Optional[str]) -> TextIO:
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8")


def _delta(text: str) -> Fraction:
    try:
        return as_delta(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"delta must be a rational such as 3/4 or 0.99, got {text!r}") from None


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    return "" if v is None else str(v)


def _write_csv(out: TextIO, header: List[str], rows) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


# -- sample ----------------------------------------------------------------

def cmd_sample(args) -> int:
    from .sampling import (NoiseModel, clwe_batch, cosine_batch, make_instance, null_batch,
                           phase_retrieval_batch, phaseless_clwe_batch, sample_hidden_direction, write_jsonl)

    rng = np.random.default_rng(args.seed)
    noise = NoiseModel(args.noise, args.beta) if args.noise != "none" else None
    prec = args.precision_bits
    if args.dist == "null":
        batch, w = null_batch(rng, args.d, args.m, seed=args.seed), None
    elif args.dist == "phase":
        w = sample_hidden_direction(rng, args.d) * args.norm
        batch = phase_retrieval_batch(w, args.beta, rng, args.m, noise, prec, seed=args.seed)
    else:
        inst = make_instance(args.d, args.gamma, args.beta, rng)
        w = inst.w
        if args.dist == "cosine":
            batch = cosine_batch(inst, rng, args.m, noise, prec, seed=args.seed)
        elif args.dist == "clwe":
            batch = clwe_batch(inst, rng, args.m, prec, seed=args.seed)
        else:
            batch = phaseless_clwe_batch(inst, rng, args.m, noise, prec, seed=args.seed)
    if args.reveal and w is not None:
        print(json.dumps({"w": [float(v) for v in w]}), file=sys.stderr)
    out = _open_out(args.output)
    try:
        write_jsonl(batch, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# -- lll ---------------------------------------------------------------------

def _read_ints(fh: TextIO) -> List[str]:
    return [tok for line in fh for tok in line.split("#", 1)[0].split()]


def read_basis(fh: TextIO) -> List[List[int]]:
    """'n m' followed by n rows of m integers; the columns are the basis vectors."""
    toks = _read_ints(fh)
    try:
        vals = [int(t, 0) for t in toks]
    except ValueError as exc:
        raise ConfigError(f"basis file: {exc}") from None
    if len(vals) < 2:
        raise ConfigError("basis file must start with 'n m'")
    n, m = vals[0], vals[1]
    if n < 1 or m < 1 or len(vals) != 2 + n * m:
        raise ConfigError(f"basis file: expected {n}x{m} = {n * m} entries, got {len(vals) - 2}")
    return [vals[2 + i * m : 2 + (i + 1) * m] for i in range(n)]


def cmd_lll(args) -> int:
    from .lattice import columns, from_columns, lll_reduce_columns

    with _open_in(args.input) as fh:
        rows = read_basis(fh)
    reduced = from_columns(lll_reduce_columns(columns(rows), _delta(args.delta)))
    print(len(reduced), len(reduced[0]))
    for row in reduced:
        print(" ".join(str(a) for a in row))
    return EXIT_OK


# -- intrel ------------------------------------------------------------------

def read_dyadic(fh: TextIO):
    """N followed by the numerators, in decimal or 0x-prefixed hex."""
    from .intrel import DyadicVector

    toks = _read_ints(fh)
    try:
        vals = [int(t, 0) for t in toks]
    except ValueError as exc:
        raise ConfigError(f"relation file: {exc}") from None
    if len(vals) < 2:
        raise ConfigError("relation file needs N and at least one numerator")
    return DyadicVector(vals[0], tuple(vals[1:]))


def cmd_intrel(args) -> int:
    from .intrel import detect_integer_relation

    with _open_in(args.input) as fh:
        b = read_dyadic(fh)
    rel = detect_integer_relation(b, args.M, _delta(args.delta))
    if rel is None:
        print("NOT FOUND")
    else:
        print(" ".join(str(t) for t in rel.t))
    return EXIT_OK


# -- recover / exhaustive ----------------------------------------------------

def cmd_recover(args) -> int:
    if args.input:
        return _recover_file(args)
    mode = {"cosine": "recover-cosine", "phase": "recover-phase", "clwe": "recover-clwe"}[args.dist]
    cell = {"mode": mode, "d": args.d, "beta": args.beta, "N": args.N, "M_exp": args.M_exp,
            "precision_bits": args.precision}
    if mode != "recover-clwe":
        cell["noise"] = args.noise
    if args.dist == "phase":
        cell.update(norm=args.norm, samples=args.d + 1)
    else:
        cell["gamma"] = args.gamma
    cfg = ExperimentConfig(mode=mode, grid={k: [v] for k, v in cell.items() if k != "mode"}, trials=args.trials,
                           seed=args.seed, preset=args.preset, tol=args.tol)
    cells = cfg.cells()
    recovery_config_for(cells[0], args.preset)  # raises ConfigError before any trial runs
    rec = run_cell(cells[0], cfg)
    for t in rec.trials:
        print(json.dumps({"status": t.status, "error": t.error, "success": t.success, "wall_ms": t.wall_ms,
                          "lll_ms": t.lll_ms, "relation_norm": t.relation_norm}))
    print(json.dumps({"aggregate": rec.aggregate, "timing": rec.timing}), file=sys.stderr)
    return EXIT_OK


def _recover_file(args) -> int:
    from .recovery import recover_clwe, recover_cosine, recover_phase_retrieval
    from .sampling import read_jsonl

    with _open_in(args.input) as fh:
        batch = read_jsonl(fh)
    d = batch.d
    if len(batch) < d + 1:
        raise ConfigError(f"need d+1 = {d + 1} samples, file has {len(batch)}")
    batch = batch[: d + 1]
    cfg = recovery_config_for({"d": d, "beta": args.beta, "N": args.N, "M_exp": args.M_exp,
                            "precision_bits": args.precision}, args.preset)
    fn = {"cosine": recover_cosine, "phase": recover_phase_retrieval, "clwe": recover_clwe}[args.dist]
    t0 = time.perf_counter()
    out = fn(batch, cfg)
    wall = (time.perf_counter() - t0) * 1e3
    print(json.dumps({"status": out.status, "error": None, "wall_ms": wall,
                      "relation_norm": out.diagnostics.get("relation_norm"),
                      "w_scaled": [float(v) for v in out.w_scaled]}))
    return EXIT_OK if out.success else EXIT_NUMERIC


def cmd_exhaustive(args) -> int:
    from .exhaustive import cosine_to_phaseless, default_sample_count, exhaustive_search, phase_noise
    from .sampling import NoiseModel, cosine_batch, make_instance, read_jsonl

    tau = phase_noise(args.beta)
    if args.input:
        with _open_in(args.input) as fh:
            batch = read_jsonl(fh)
        truth = None
        rng = np.random.default_rng(args.seed)
    else:
        rng = np.random.default_rng(args.seed)
        inst = make_instance(args.d, args.gamma, args.beta, rng)
        truth = inst.w
        m = args.m or default_sample_count(args.d, tau / args.gamma)
        batch = cosine_batch(inst, rng, m, NoiseModel.uniform(args.beta))
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = exhaustive_search(batch.X, cosine_to_phaseless(batch.labels_float()), args.gamma, tau, rng,
                                args.cover_cap, args.threshold)
    wall = (time.perf_counter() - t0) * 1e3
    out = {"direction": res.direction.tolist(), "score": res.score, "cover_size": res.cover_size,
           "threshold": res.threshold, "wall_ms": wall, "error": None}
    if truth is not None:
        v = res.direction
        out["error"] = float(min(np.sum((v - truth) ** 2), np.sum((v + truth) ** 2)))
        out["bound"] = 40000 * tau * tau / args.gamma ** 2
    print(json.dumps(out))
    return EXIT_OK


# -- analyze -----------------------------------------------------------------

def cmd_analyze(args) -> int:
    from . import analysis as an
    from .sampling import make_instance, phase_retrieval_batch, sample_hidden_direction

    out = _open_out(args.output)
    rng = np.random.default_rng(args.seed)
    try:
        if args.what == "loss":
            rows = []
            for g in args.gamma:
                for rho in args.rho:
                    row = [rho, g, an.population_loss_closed_form(rho, g), an.trivial_loss(g)]
                    if args.mc:
                        w = np.zeros(2)
                        w[0] = 1.0
                        wp = np.array([rho, math.sqrt(max(0.0, 1 - rho * rho))])
                        row += list(an.population_loss_monte_carlo(w, wp, g, args.mc, rng))
                    rows.append(row)
            head = ["rho", "gamma", "closed_form", "trivial_loss"] + (["mc_mean", "mc_se"] if args.mc else [])
            _write_csv(out, head, rows)
        elif args.what == "psi":
            rows = []
            for s in args.s:
                peak, dev = an.periodic_gaussian_bounds(s)
                dev_fixed = an.periodic_gaussian_bounds(s, corrected=True)[1]
                z = np.linspace(-0.5, 0.5, args.points, endpoint=False)
                for zi, v in zip(z, an.periodic_gaussian_density(s, z)):
                    rows.append([s, float(zi), float(v), peak, dev, dev_fixed])
            _write_csv(out, ["s", "z", "density", "peak_bound", "deviation_bound", "corrected_deviation_bound"],
                       rows)
        elif args.what == "relu":
            rows = []
            for g in args.gamma:
                net = an.relu_approximate_cosine(g, args.eps)
                z = np.linspace(-net.R - 1, net.R + 1, 100_001)
                sup = float(np.max(np.abs(an.relu_target(z, net.R) - net(z))))
                rows.append([g, args.eps, net.width, 3 * net.R * net.L / net.eta, net.R, net.eta, sup,
                             an.relu_squared_loss(net, g), float(np.max(np.abs(net.alphas)))])
            _write_csv(out, ["gamma", "eps", "width", "width_bound", "R", "eta", "sup_error", "squared_loss",
                             "max_abs_alpha"], rows)
        elif args.what == "feasible":
            d = args.d[0]
            w = sample_hidden_direction(rng, d) * args.norm
            batch = phase_retrieval_batch(w, 0.0, rng, d)
            y = batch.labels_float()
            sols = an.phase_retrieval_feasible_set(batch.X, y)
            rows = [[i, float(np.linalg.norm(s)), float(np.max(np.abs(np.abs(batch.X @ s) - y))),
                     float(min(np.linalg.norm(s - w), np.linalg.norm(s + w)))] for i, s in enumerate(sols)]
            _write_csv(out, ["pattern", "norm", "max_residual", "distance_to_truth"], rows)
        elif args.what == "probe":
            rows = []
            for d in args.d:
                r = an.spurious_norm_probe(d, args.trials, rng)
                rows.append([d, r.trials, r.hits, r.frequency, r.ci_low, r.ci_high, r.frequency * d * d])
            _write_csv(out, ["d", "trials", "hits", "frequency", "ci_low", "ci_high", "frequency_x_d2"], rows)
        elif args.what == "detect":
            d = args.d[0]
            g = args.gamma[0]
            rows = []
            for t in range(args.trials):
                trng = np.random.default_rng([args.seed, t])
                inst = make_instance(d, g, args.beta, trng)
                learner = {"recovery": lambda: an.recovery_learner(d, args.beta),
                           "constant": lambda: an.constant_learner(0.0),
                           "oracle": lambda: an.oracle_learner(inst.w, inst.gamma)}[args.learner]()
                src = an.clwe_source(inst, trng) if args.source == "clwe" else an.null_source(d, trng)
                r = an.clwe_detection_test(learner, src, an.null_source(d, trng), args.m, args.eps)
                rows.append([t, args.source, args.learner, r.decision, r.loss_unknown, r.loss_null,
                             r.learner_failed])
            _write_csv(out, ["trial", "source", "learner", "decision", "loss_unknown", "loss_null",
                             "learner_failed"], rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# -- experiment --------------------------------------------------------------

def cmd_experiment(args) -> int:
    from .experiment import run_experiment

    text = ""
    if args.config:
        with _open_in(args.config) as fh:
            text = fh.read()
    overrides = {"mode": args.mode, "trials": args.trials, "seed": args.seed, "output": args.output,
                 "preset": args.preset, "jobs": args.jobs, "format": args.format}
    for item in args.set or []:
        overrides.update(parse_config_text(item))
    config = load_config(text, overrides)
    config.validate()
    records = run_experiment(config)
    if not records:
        text = emit_report(records, "json", config.output)
    elif args.landscape:
        text = landscape_markdown(records, args.landscape_rows, args.landscape_cols)
        if config.output:
            emit_report(records, config.format, config.output, timing=not args.no_timing)
    else:
        text = emit_report(records, config.format, config.output, timing=not args.no_timing)
    if not config.output or args.landscape:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    seed_help = f"random seed (default: ${SEED_ENV} or a fixed constant)"
    p = _Parser(prog="cosneuron", description="Recover single cosine neurons with exact lattice reduction.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="draw labelled samples as JSON lines")
    s.add_argument("--dist", choices=["cosine", "clwe", "null", "phaseless", "phase"], default="cosine")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--m", type=int, default=None, help="sample count (default d+1)")
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--norm", type=float, default=1.0, help="|w| for phase retrieval")
    s.add_argument("--noise", choices=["none", "uniform", "constant", "gaussian"], default="none")
    s.add_argument("--precision-bits", type=int, default=53)
    s.add_argument("--seed", type=int, default=None, help=seed_help)
    s.add_argument("--reveal", action="store_true", help="print the hidden vector to stderr")
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("lll", help="LLL-reduce an integer basis ('n m' header, basis vectors are columns)")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--delta", default="3/4")
    s.set_defaults(func=cmd_lll)

    s = sub.add_parser("intrel", help="find an integer relation of N-bit dyadic numbers")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--M", type=int, default=None, help="embedding scale (default 2^(3n))")
    s.add_argument("--delta", default="3/4")
    s.set_defaults(func=cmd_intrel)

    s = sub.add_parser("recover", help="lattice recovery from d+1 samples")
    s.add_argument("--dist", choices=["cosine", "phase", "clwe"], default="cosine")
    s.add_argument("--input", default=None, help="JSON-lines samples instead of fresh draws")
    s.add_argument("--d", type=int, default=5)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--norm", type=float, default=1.0)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--noise", choices=["uniform", "constant"], default="uniform",
                   help="bounded label noise of size beta (CLWE always uses Gaussian noise)")
    s.add_argument("--N", type=int, default=None, help="truncation bits (default from the preset)")
    s.add_argument("--M-exp", type=int, default=None, help="embedding scale M = 2^M_EXP (default 3d)")
    s.add_argument("--precision", type=int, default=None, help="working precision in bits")
    s.add_argument("--preset", choices=["desk", "paper"], default="desk")
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--seed", type=int, default=None, help=seed_help)
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("exhaustive", help="cover-search recovery from cosine samples")
    s.add_argument("--input", default=None)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--gamma", type=float, default=4.0)
    s.add_argument("--beta", type=float, default=1e-3)
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--cover-cap", type=int, default=10 ** 6)
    s.add_argument("--threshold", type=float, default=None)
    s.add_argument("--seed", type=int, default=None, help=seed_help)
    s.set_defaults(func=cmd_exhaustive)

    s = sub.add_parser("analyze", help="loss, density, ReLU, ambiguity and detection tables as CSV")
    s.add_argument("what", choices=["loss", "psi", "relu", "feasible", "probe", "detect"])
    s.add_argument("--gamma", type=float, nargs="+", default=[1.0])
    s.add_argument("--rho", type=float, nargs="+", default=[0.0, 0.5, 0.9])
    s.add_argument("--mc", type=int, default=0, help="Monte Carlo draws for 'loss'")
    s.add_argument("--s", type=float, nargs="+", default=[0.3])
    s.add_argument("--points", type=int, default=1000)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--d", type=int, nargs="+", default=[3])
    s.add_argument("--norm", type=float, default=1.5)
    s.add_argument("--trials", type=int, default=10 ** 5)
    s.add_argument("--beta", type=float, default=1e-30)
    s.add_argument("--m", type=int, default=2000)
    s.add_argument("--source", choices=["clwe", "null"], default="clwe")
    s.add_argument("--learner", choices=["recovery", "constant", "oracle"], default="recovery")
    s.add_argument("--seed", type=int, default=None, help=seed_help)
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("experiment", help="run a seeded parameter sweep from a config file")
    s.add_argument("config", nargs="?", default=None)
    s.add_argument("--mode", default=None)
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--seed", type=int, default=None, help=seed_help)
    s.add_argument("--preset", default=None)
    s.add_argument("--jobs", type=int, default=None)
    s.add_argument("--format", choices=["json", "csv", "markdown"], default=None)
    s.add_argument("-o", "--output", default=None)
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config entry")
    s.add_argument("--no-timing", action="store_true", help="leave wall-clock fields out of the report")
    s.add_argument("--landscape", action="store_true", help="print a success-rate pivot table")
    s.add_argument("--landscape-rows", default="beta")
    s.add_argument("--landscape-cols", default="mode")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "seed", None) is None and args.command != "experiment":
            args.seed = _default_seed()
        if args.command == "sample" and args.m is None:
            args.m = args.d + 1
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CosNeuronError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
