"""End-to-end acceptance checks, one per criterion, each printing a PASS/FAIL line.

Every criterion is a function returning an ``Outcome``: whether it passed,
an aggregate of seed-determined values (no timings) and a one-line summary.
The determinism check reruns each criterion and compares aggregate JSON.

Run standalone with ``python3 -m tests.test_acceptance`` to get just the lines.
"""

import json
import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from cosneuron import analysis as an
from cosneuron.experiment import ExperimentConfig, run_experiment
from cosneuron.intrel import DyadicVector, detect_integer_relation
from cosneuron.lattice import columns, exact_determinant, is_lll_reduced, lll_reduce, shortest_vector_bruteforce
from cosneuron.sampling import make_instance, phase_retrieval_batch, sample_hidden_direction

SEED = 20240101

pytestmark = pytest.mark.slow


@dataclass
class Outcome:
    passed: bool
    aggregate: dict
    summary: str
    seconds: float = 0.0

    def line(self, number: int) -> str:
        return f"criterion {number:2d} {'PASS' if self.passed else 'FAIL'}: {self.summary} ({self.seconds:.1f} s)"


def _sq(v):
    return sum(a * a for a in v)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    out.seconds = time.perf_counter() - t0
    return out


# -- 1: LLL approximation contract -------------------------------------------

def lll_contract() -> Outcome:
    rnd = random.Random(SEED + 1)
    lll_seconds = 0.0
    worst = Fraction(0)
    reduced_ok = 0
    within = 0
    for i in range(200):
        n = 2 + i % 5
        while True:
            B = [[rnd.randint(-50, 50) for _ in range(n)] for _ in range(n)]
            if exact_determinant(B):
                break
        t0 = time.perf_counter()
        R = lll_reduce(B)
        lll_seconds += time.perf_counter() - t0
        reduced_ok += is_lll_reduced(R)
        ratio = Fraction(_sq(columns(R)[0]), _sq(shortest_vector_bruteforce(B)))
        # |b1| <= 2^((n-1)/2) lambda_1, compared squared and exactly
        within += ratio <= 2 ** (n - 1)
        worst = max(worst, ratio / 2 ** (n - 1))
    passed = reduced_ok == 200 and within == 200 and lll_seconds < 5
    agg = {"bases": 200, "reduced": reduced_ok, "within_bound": within, "worst_ratio_sq": str(worst)}
    return Outcome(passed, agg, f"{within}/200 within 2^((n-1)/2) lambda_1, {reduced_ok}/200 reduced, "
                                f"worst |b1|^2 / bound {float(worst):.3f}, LLL time {lll_seconds:.2f} s")


# -- 2: planted integer relations --------------------------------------------

def planted_relations() -> Outcome:
    rnd = random.Random(SEED + 2)
    N = 128
    exact = bounded = 0
    worst = 0.0
    t0 = time.perf_counter()
    for i in range(100):
        n = 3 + i % 18  # every length from 3 to 20
        m = [rnd.randint(-3, 3) for _ in range(n - 1)] + [1]
        nums = [1 << N] + [rnd.randint(-(1 << N), 1 << N) for _ in range(n - 2)]
        nums.append(-sum(a * b for a, b in zip(m, nums)))
        b = DyadicVector(N, tuple(nums))
        rel = detect_integer_relation(b)
        if rel is None or not any(rel.t) or b.dot_numerator(rel.t) != 0:
            continue
        exact += 1
        bound = 2 ** ((n + 1) / 2) * math.sqrt(_sq(m)) * b.norm()
        bounded += rel.norm <= bound
        worst = max(worst, rel.norm / bound)
    seconds = time.perf_counter() - t0
    passed = exact == 100 and bounded == 100 and seconds < 30
    agg = {"instances": 100, "exact": exact, "within_bound": bounded, "worst_ratio": worst}
    return Outcome(passed, agg, f"{exact}/100 exact relations, {bounded}/100 within norm bound "
                                f"(worst ratio {worst:.2e}), {seconds:.1f} s")


# -- 3, 4, 6: seeded sweeps ----------------------------------------------------

def _sweep(config: ExperimentConfig):
    records = run_experiment(config)
    agg = [{"parameters": r.parameters, "aggregate": r.aggregate} for r in records]
    return records, agg


def _cell_name(p: dict) -> str:
    keys = [k for k in ("d", "gamma", "norm", "beta") if k in p]
    return ",".join(f"{k}={p[k]:.4g}" if isinstance(p[k], float) else f"{k}={p[k]}" for k in keys)


def noiseless_cosine() -> Outcome:
    cfg = ExperimentConfig(mode="recover-cosine", grid={"d": [5, 10, 20], "gamma": [1, "sqrt(d)", "d"], "beta": [0.0]},
                           trials=100, seed=SEED + 3, preset="desk", tol=1e-9)
    records, agg = _sweep(cfg)
    rates = [r.aggregate["successes"] for r in records]
    slowest = max(t.wall_ms for r in records if r.parameters["d"] == 20 for t in r.trials) / 1e3
    passed = min(rates) >= 95 and slowest < 10
    worst = min(records, key=lambda r: r.aggregate["successes"])
    return Outcome(passed, {"cells": agg},
                   f"min successes {min(rates)}/100 at {_cell_name(worst.parameters)} over 9 cells, "
                   f"slowest d=20 trial {slowest:.2f} s")


def phase_retrieval() -> Outcome:
    cfg = ExperimentConfig(mode="recover-phase",
                           grid={"d": [5, 10], "norm": [1, 2.5, "d"], "beta": [0.0, 1e-25]},
                           trials=100, seed=SEED + 4, preset="desk")
    records, agg = _sweep(cfg)
    failing = [r for r in records if r.aggregate["successes"] < 95]
    detail = ", ".join(f"{_cell_name(r.parameters)}: {r.aggregate['successes']}/100" for r in failing)
    return Outcome(not failing, {"cells": agg},
                   f"{len(records) - len(failing)}/{len(records)} cells reach 95/100"
                   + (f"; short: {detail}" if failing else ""))


def exhaustive_recovery() -> Outcome:
    cfg = ExperimentConfig(mode="exhaustive", grid={"d": [2], "gamma": [4.0], "beta": [1e-3]}, trials=20,
                           seed=SEED + 6, cover_cap=10 ** 6)
    (rec,), agg = _sweep(cfg)
    slowest = max(t.wall_ms for t in rec.trials) / 1e3
    passed = rec.aggregate["successes"] >= 18 and slowest < 60
    return Outcome(passed, {"cells": agg},
                   f"{rec.aggregate['successes']}/20 within 40000 tau^2/gamma^2, "
                   f"max error {rec.aggregate['max_error']:.3g}, slowest trial {slowest:.1f} s")


# -- 5: d-sample ambiguity -----------------------------------------------------

def sign_ambiguity() -> Outcome:
    rng = np.random.default_rng(SEED + 5)
    counts = {}
    for d in range(1, 11):
        w = sample_hidden_direction(rng, d) * 1.5
        batch = phase_retrieval_batch(w, 0.0, rng, d)
        sols = an.phase_retrieval_feasible_set(batch.X, batch.labels_float(), check=True)
        distinct = len({tuple(np.round(s, 9)) for s in sols})
        counts[d] = distinct if distinct == len(sols) else -len(sols)
    feasible_ok = all(counts[d] == 2 ** d for d in counts)

    probes = {d: an.spurious_norm_probe(d, 10 ** 5, np.random.default_rng([SEED + 5, d])) for d in (2, 5, 10)}
    positive = all(p.ci_low > 0 for p in probes.values())
    # decay no faster than d^-2: scaled upper limit at larger d reaches the scaled lower limit at smaller d
    ds = sorted(probes)
    slow_decay = all(probes[b].ci_high * b * b >= probes[a].ci_low * a * a for a, b in zip(ds, ds[1:]))
    slope = float(np.polyfit(np.log(ds), np.log([probes[d].frequency for d in ds]), 1)[0])
    agg = {"feasible_counts": {str(d): c for d, c in counts.items()},
           "probe": {str(d): {"hits": p.hits, "trials": p.trials, "ci": [p.ci_low, p.ci_high]}
                     for d, p in probes.items()},
           "log_log_slope": slope}
    freq = ", ".join(f"d={d}: {p.frequency:.4f} [{p.ci_low:.4f}, {p.ci_high:.4f}]" for d, p in probes.items())
    return Outcome(feasible_ok and positive and slow_decay, agg,
                   f"2^d checked solutions for d=1..10: {feasible_ok}; probe {freq}; "
                   f"log-log slope {slope:.2f}, decay no faster than d^-2: {slow_decay}")


# -- 7: population loss ----------------------------------------------------------

def population_loss() -> Outcome:
    rng = np.random.default_rng(SEED + 7)
    worst = 0.0
    points = {}
    for gamma in (0.5, 1.0, 2.0):
        for rho in (0.0, 0.5, 0.9):
            w = np.array([1.0, 0.0])
            wp = np.array([rho, math.sqrt(1 - rho * rho)])
            closed = an.population_loss_closed_form(rho, gamma)
            mean, se = an.population_loss_monte_carlo(w, wp, gamma, 10 ** 6, rng)
            z = abs(mean - closed) / se
            worst = max(worst, z)
            points[f"rho={rho},gamma={gamma}"] = {"closed_form": closed, "mc_mean": mean, "mc_se": se}
    trivial = an.trivial_loss(3.0)
    passed = worst <= 3 and abs(trivial - 0.5) <= 1e-10
    return Outcome(passed, {"points": points, "trivial_loss_3": trivial},
                   f"max |MC - closed form| = {worst:.2f} SE over 9 points, trivial_loss(3) - 1/2 = {trivial - 0.5:.1e}")


# -- 8: periodic Gaussian --------------------------------------------------------

def periodic_gaussian() -> Outcome:
    z = np.linspace(-0.5, 0.5, 1000)
    rows = {}
    ok = True
    broken = []
    for s in (0.05, 0.1, 0.3, 1.0, 2.0):
        psi = an.periodic_gaussian_density(s, z)
        peak, dev = an.periodic_gaussian_bounds(s)
        _, dev_fixed = an.periodic_gaussian_bounds(s, corrected=True)
        total = quad(lambda t: an.periodic_gaussian_density(s, t), -0.5, 0.5, points=[0.0], limit=200,
                     epsabs=1e-13, epsrel=1e-13)[0]
        worst_dev = float(np.max(np.abs(psi - 1)))
        row = {"max_density": float(psi.max()), "peak_bound": peak, "max_deviation": worst_dev,
               "deviation_bound": dev, "corrected_deviation_bound": dev_fixed, "integral": total}
        rows[str(s)] = row
        peak_ok = row["max_density"] <= peak
        dev_ok = worst_dev <= dev
        norm_ok = abs(total - 1) <= 1e-10
        ok &= peak_ok and dev_ok and norm_ok
        if not (peak_ok and dev_ok and norm_ok):
            what = [name for name, good in (("peak", peak_ok), ("deviation", dev_ok), ("integral", norm_ok))
                    if not good]
            broken.append(f"s={s}: {'/'.join(what)} ({worst_dev:.3g} vs {dev:.3g}; corrected {dev_fixed:.3g})")
    summary = "peak, deviation and integral hold at all five widths" if ok else "fails " + "; ".join(broken)
    return Outcome(ok, rows, summary)


# -- 9: ReLU approximant ---------------------------------------------------------

def relu_approximant() -> Outcome:
    rows = {}
    ok = True
    for gamma, eps in ((1.0, 0.1), (3.0, 0.05)):
        net = an.relu_approximate_cosine(gamma, eps)
        grid = np.linspace(-net.R - 1, net.R + 1, 200_001)
        sup = float(np.max(np.abs(an.relu_target(grid, net.R) - net(grid))))
        loss = an.relu_squared_loss(net, gamma)
        alpha = float(np.max(np.abs(net.alphas)))
        checks = [sup <= net.eta, loss <= eps, net.width <= 3 * net.R * net.L / net.eta, alpha <= 2 * net.L]
        ok &= all(checks)
        rows[f"{gamma},{eps}"] = {"sup_error": sup, "eta": net.eta, "loss": loss, "width": net.width,
                                  "width_bound": 3 * net.R * net.L / net.eta, "max_alpha": alpha, "L": net.L}
    summary = "; ".join(f"(gamma, eps)=({k}): sup {v['sup_error']:.3g} <= eta {v['eta']:.3g}, loss {v['loss']:.3g}, "
                        f"width {v['width']} <= {v['width_bound']:.0f}, max|alpha| {v['max_alpha']:.3g} <= {2 * v['L']:.3g}"
                        for k, v in rows.items())
    return Outcome(ok, rows, summary)


# -- 10: detection harness -------------------------------------------------------

def detection_harness() -> Outcome:
    d, beta, m, eps = 8, 1e-30, 2000, 0.1
    gamma = 2 * math.sqrt(d)
    yes_on_clwe = no_on_null = 0
    for t in range(100):
        rng = np.random.default_rng([SEED + 10, t])
        inst = make_instance(d, gamma, beta, rng)
        res = an.clwe_detection_test(an.recovery_learner(d, beta), an.clwe_source(inst, rng), an.null_source(d, rng),
                                     m, eps)
        yes_on_clwe += res.decision == "YES"
        res = an.clwe_detection_test(an.recovery_learner(d, beta), an.null_source(d, rng), an.null_source(d, rng),
                                     m, eps)
        no_on_null += res.decision == "NO"
    passed = yes_on_clwe >= 90 and no_on_null >= 90
    return Outcome(passed, {"yes_on_clwe": yes_on_clwe, "no_on_null": no_on_null},
                   f"YES on CLWE {yes_on_clwe}/100, NO on null {no_on_null}/100")


CRITERIA = {
    1: lll_contract,
    2: planted_relations,
    3: noiseless_cosine,
    4: phase_retrieval,
    5: sign_ambiguity,
    6: exhaustive_recovery,
    7: population_loss,
    8: periodic_gaussian,
    9: relu_approximant,
    10: detection_harness,
}

_first_runs = {}


def _dump(outcome: Outcome) -> str:
    return json.dumps(outcome.aggregate, sort_keys=True)


def _report(capsys, number: int, outcome: Outcome) -> None:
    with capsys.disabled():
        print("\n" + outcome.line(number), flush=True)


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    outcome = _timed(CRITERIA[number])
    _first_runs[number] = _dump(outcome)
    _report(capsys, number, outcome)
    assert outcome.passed, outcome.summary


def test_criterion_11_determinism(capsys):
    t0 = time.perf_counter()
    same = []
    for number, fn in CRITERIA.items():
        first = _first_runs.get(number) or _dump(fn())
        same.append((number, _dump(fn()) == first))
    diverged = [n for n, ok in same if not ok]
    outcome = Outcome(not diverged, {},
                      "aggregate JSON identical on rerun for criteria 1-10" if not diverged
                      else f"aggregate JSON differs on rerun for criteria {diverged}",
                      time.perf_counter() - t0)
    _report(capsys, 11, outcome)
    assert outcome.passed, outcome.summary


if __name__ == "__main__":
    firsts = {}
    for n, fn in CRITERIA.items():
        out = _timed(fn)
        firsts[n] = _dump(out)
        print(out.line(n), flush=True)
    diverged = [n for n, fn in CRITERIA.items() if _dump(fn()) != firsts[n]]
    print(Outcome(not diverged, {}, "aggregate JSON identical on rerun" if not diverged
                  else f"differs for {diverged}").line(11))
