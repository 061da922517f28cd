"""Seeded parameter sweeps over the recovery pipelines, with tabular reports.

Every grid cell draws its randomness from a seed sequence keyed by the
global seed and the cell's own parameters, so results do not depend on the
grid order or on how cells are spread over worker processes.
"""

from __future__ import annotations

import ast
import csv
import hashlib
import io
import itertools
import json
import math
import operator
import os
import statistics
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from ._validation import ConfigError, CosNeuronError
from .analysis.impossibility import phase_retrieval_feasible_set
from .exhaustive import default_sample_count, phase_noise, recover_exhaustive_cosine
from .recovery import RecoveryConfig, recover_clwe, recover_cosine, recover_phase_retrieval, recovery_error
from .sampling import (
    NoiseModel,
    clwe_batch,
    cosine_batch,
    make_instance,
    phase_retrieval_batch,
    sample_hidden_direction,
)

__all__ = [
    "MODES",
    "PRESETS",
    "ExperimentConfig",
    "TrialOutcome",
    "ExperimentRecord",
    "run_experiment",
    "run_cell",
    "emit_report",
    "landscape_markdown",
    "parse_config_text",
    "load_config",
    "evaluate_expression",
    "records_from_json",
    "recovery_config_for",
]

MODES = ("recover-cosine", "recover-phase", "recover-clwe", "exhaustive")
PRESETS = ("desk", "paper")
GRID_KEYS = {
    "recover-cosine": ("d", "gamma", "beta", "N", "M_exp", "precision_bits", "noise"),
    "recover-phase": ("d", "norm", "beta", "N", "M_exp", "precision_bits", "noise", "samples"),
    "recover-clwe": ("d", "gamma", "beta", "N", "M_exp", "precision_bits"),
    "exhaustive": ("d", "gamma", "beta"),
}
GRID_DEFAULTS = {"beta": [0.0], "samples": [None], "gamma": [1.0], "norm": [1.0], "noise": ["uniform"]}
NOISE_KINDS = ("uniform", "constant")
SEED_ENV = "COSNEURON_SEED"
DEFAULT_SEED = 20240101


# -- expressions in d ----------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sqrt": math.sqrt, "log": math.log, "log2": math.log2, "exp": math.exp}


def evaluate_expression(expr, d: int) -> float:
    """Value of a grid entry such as ``2*sqrt(d)``; plain numbers pass through.

    Only numbers, ``d``, ``pi``, + - * / ** and sqrt/log/log2/exp are allowed.
    """
    if isinstance(expr, (int, float)) and not isinstance(expr, bool):
        return float(expr)
    if not isinstance(expr, str):
        raise ConfigError(f"cannot evaluate grid entry {expr!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "d":
            return float(d)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigError(f"unsupported expression {expr!r}")

    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {expr!r}: {exc.msg}") from None
    return ev(tree)


# -- config ----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """One sweep: a mode, a parameter grid, trials per cell and a seed.

    ``grid`` maps parameter names to lists of values; ``gamma`` and ``norm``
    entries may be expressions in ``d``. ``tol`` overrides the success
    threshold (defaults: 1e-9 noiseless, 100 beta noisy, 40000 tau^2/gamma^2
    for the exhaustive search).
    """

    mode: str
    grid: Dict[str, list] = field(default_factory=dict)
    trials: int = 1
    seed: Optional[int] = None
    output: Optional[str] = None
    preset: str = "desk"
    jobs: int = 1
    tol: Optional[float] = None
    cover_cap: int = 10 ** 6
    format: str = "json"

    def resolved_seed(self) -> int:
        if self.seed is not None:
            return int(self.seed)
        env = os.environ.get(SEED_ENV)
        if env is None:
            return DEFAULT_SEED
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None

    def validate(self) -> None:
        problems = []
        if self.mode not in MODES:
            problems.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.preset not in PRESETS:
            problems.append(f"preset must be one of {PRESETS}, got {self.preset!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            problems.append(f"trials must be a positive integer, got {self.trials!r}")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            problems.append(f"jobs must be a positive integer, got {self.jobs!r}")
        if self.tol is not None and not (isinstance(self.tol, (int, float)) and self.tol > 0):
            problems.append(f"tol must be positive, got {self.tol!r}")
        if self.format not in ("json", "csv", "markdown"):
            problems.append(f"format must be json, csv or markdown, got {self.format!r}")
        if self.mode in MODES:
            allowed = set(GRID_KEYS[self.mode])
            for key, values in self.grid.items():
                if key not in allowed:
                    problems.append(f"grid key {key!r} does not apply to mode {self.mode}")
                elif not isinstance(values, list):
                    problems.append(f"grid entry {key!r} must be a list")
            if self.grid and "d" not in self.grid:
                problems.append("grid must give d")
            else:
                for cell in self._raw_cells():
                    problems.extend(_cell_problems(self.mode, cell))
        if problems:
            raise ConfigError("invalid experiment config:\n  " + "\n  ".join(problems))

    def _raw_cells(self) -> List[dict]:
        if not self.grid:
            return []
        keys = GRID_KEYS[self.mode]
        axes = [self.grid.get(k, GRID_DEFAULTS.get(k, [None])) for k in keys]
        return [dict(zip(keys, combo)) for combo in itertools.product(*axes)]

    def cells(self) -> List[dict]:
        """Resolved parameter dicts, in grid order."""
        self.validate()
        out = []
        for raw in self._raw_cells():
            cell = {"mode": self.mode, "d": int(raw["d"])}
            for key in GRID_KEYS[self.mode][1:]:
                v = raw[key]
                if key in ("gamma", "norm", "beta"):
                    v = evaluate_expression(v, cell["d"])
                elif key == "noise":
                    v = str(v)
                elif v is not None:
                    v = int(v)
                cell[key] = v
            if self.mode == "recover-phase" and cell["samples"] is None:
                cell["samples"] = cell["d"] + 1
            out.append(cell)
        return out


def _cell_problems(mode: str, raw: dict) -> List[str]:
    p = []
    d = raw.get("d")
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        return [f"d must be a positive integer, got {d!r}"]
    try:
        beta = evaluate_expression(raw.get("beta", 0.0), d)
        if not (math.isfinite(beta) and beta >= 0):
            p.append(f"beta must be non-negative, got {beta}")
        for key in ("gamma", "norm"):
            if key in raw:
                v = evaluate_expression(raw[key], d)
                if not (math.isfinite(v) and v > 0):
                    p.append(f"{key} must be positive at d={d}, got {v}")
    except (ConfigError, ArithmeticError, ValueError) as exc:
        return [str(exc)]
    N = raw.get("N")
    if N is not None and (not isinstance(N, int) or N < 16):
        p.append(f"N must be an integer >= 16, got {N!r}")
    for key in ("M_exp", "precision_bits"):
        v = raw.get(key)
        if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 1):
            p.append(f"{key} must be a positive integer, got {v!r}")
    if raw.get("noise", "uniform") not in NOISE_KINDS:
        p.append(f"noise must be one of {NOISE_KINDS}, got {raw.get('noise')!r}")
    s = raw.get("samples")
    if s is not None and (not isinstance(s, int) or s not in (d, d + 1)):
        p.append(f"samples must be d or d+1, got {s!r} at d={d}")
    if mode == "recover-phase" and s == d and d > 16:
        p.append(f"d-sample ambiguity enumeration needs d <= 16, got {d}")
    if mode == "exhaustive" and beta == 0:
        p.append("exhaustive mode needs beta > 0")
    if mode == "exhaustive" and beta > 2:
        p.append(f"beta must be at most 2 in exhaustive mode, got {beta}")
    return p


def parse_config_text(text: str) -> Dict[str, Any]:
    """Parse the flat ``key = value`` format.

    One assignment per line; ``#`` starts a comment. Values are Python
    literals (numbers, quoted strings, lists) and anything else is kept as a
    bare string, so ``gamma = [1, sqrt(d), d]`` works: each list item that is
    not a literal becomes a string.
    """
    out: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key.isidentifier():
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _parse_value(value.strip(), lineno)
    return out


def _parse_value(text: str, lineno: int):
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"line {lineno}: unterminated list")
        inner = text[1:-1].strip()
        return [] if not inner else [_parse_scalar(t.strip(), lineno) for t in _split_items(inner)]
    return _parse_scalar(text, lineno)


def _split_items(inner: str) -> List[str]:
    items, depth, cur = [], 0, []
    for ch in inner:
        if ch == "," and depth == 0:
            items.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    items.append("".join(cur))
    return items


def _parse_scalar(text: str, lineno: int):
    if not text:
        raise ConfigError(f"line {lineno}: empty value")
    if text in ("none", "None", "null"):
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


CONFIG_KEYS = ("mode", "trials", "seed", "output", "preset", "jobs", "tol", "cover_cap", "format")


def load_config(text: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Build a config from file text; non-None ``overrides`` win over file values."""
    values = parse_config_text(text)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    if "mode" not in values:
        raise ConfigError("config must set mode")
    top = {k: values.pop(k) for k in CONFIG_KEYS if k in values}
    grid = {k: (v if isinstance(v, list) else [v]) for k, v in values.items()}
    return ExperimentConfig(grid=grid, **top)


# -- trials ----------------------------------------------------------------

@dataclass
class TrialOutcome:
    status: str
    error: Optional[float]
    success: bool
    wall_ms: float
    lll_ms: Optional[float] = None
    relation_norm: Optional[float] = None


@dataclass
class ExperimentRecord:
    """Per-cell results. ``aggregate`` holds only seed-determined values."""

    parameters: dict
    trials: List[TrialOutcome]
    aggregate: dict
    timing: dict
    extra: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict:
        out = {"parameters": self.parameters, "aggregate": self.aggregate, "extra": self.extra}
        trials = [asdict(t) for t in self.trials]
        if timing:
            out["timing"] = self.timing
        else:
            for t in trials:
                t.pop("wall_ms")
                t.pop("lll_ms")
        out["trials"] = trials
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentRecord":
        trials = [TrialOutcome(**{"wall_ms": math.nan, "lll_ms": None, **t}) for t in data["trials"]]
        return cls(data["parameters"], trials, data["aggregate"], data.get("timing", {}), data.get("extra", {}))


def _cell_seed(seed: int, cell: dict) -> np.random.SeedSequence:
    key = json.dumps(cell, sort_keys=True).encode()
    words = np.frombuffer(hashlib.sha256(key).digest(), dtype=np.uint32).tolist()
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *words])


def recovery_config_for(cell: dict, preset: str, scale: float = 1.0) -> RecoveryConfig:
    d, beta = cell["d"], cell["beta"]
    extra: Dict[str, int] = {}
    if cell.get("N") is not None:
        extra["N"] = cell["N"]
    if cell.get("M_exp") is not None:
        extra["M"] = 1 << cell["M_exp"]
    if cell.get("precision_bits") is not None:
        extra["precision_bits"] = cell["precision_bits"]
    if beta > 0:
        return RecoveryConfig.noisy(d, beta, scale=scale, **extra)
    if preset == "paper":
        return RecoveryConfig.paper(d, **extra)
    return RecoveryConfig.desk(d, **extra)


def _hp_error(out, truth) -> Optional[float]:
    if not out.success:
        return None
    est = out.w_scaled_hp if out.w_scaled_hp is not None else out.w_scaled
    return recovery_error(est, truth)


def _run_trial(cell: dict, preset: str, tol: Optional[float], cover_cap: int, seed_seq) -> tuple:
    rng = np.random.default_rng(seed_seq)
    mode, d, beta = cell["mode"], cell["d"], cell["beta"]
    extra: dict = {}
    t0 = time.perf_counter()
    lll_ms = relation_norm = None
    if mode in ("recover-cosine", "recover-clwe"):
        inst = make_instance(d, cell["gamma"], beta, rng)
        cfg = recovery_config_for(cell, preset)
        if mode == "recover-cosine":
            noise = NoiseModel(cell.get("noise", "uniform"), beta) if beta > 0 else None
            batch = cosine_batch(inst, rng, d + 1, noise, precision_bits=cfg.precision_bits)
            out = recover_cosine(batch, cfg)
        else:
            batch = clwe_batch(inst, rng, d + 1, precision_bits=cfg.precision_bits)
            out = recover_clwe(batch, cfg)
        status = out.status
        error = _hp_error(out, inst.scaled_direction(cfg.precision_bits))
        threshold = tol if tol is not None else (100 * beta if beta > 0 else 1e-9)
        lll_ms = out.diagnostics.get("lll_ms")
        relation_norm = out.diagnostics.get("relation_norm")
    elif mode == "recover-phase":
        w = sample_hidden_direction(rng, d) * cell["norm"]
        samples = cell["samples"]
        if samples == d:
            batch = phase_retrieval_batch(w, beta, rng, d, precision_bits=53)
            sols = phase_retrieval_feasible_set(batch.X, batch.labels_float())
            nw = float(np.linalg.norm(w))
            norms = [float(np.linalg.norm(s)) for s in sols]
            extra = {"feasible_count": len(sols),
                     "spurious_same_norm_band": sum(1 for n in norms[1:-1] if 1 <= n < nw)}
            status, error, threshold = "ambiguous", None, 0.0
        else:
            cfg = recovery_config_for(cell, preset)
            noise = NoiseModel(cell.get("noise", "uniform"), beta) if beta > 0 else None
            batch = phase_retrieval_batch(w, beta, rng, d + 1, noise, precision_bits=cfg.precision_bits)
            out = recover_phase_retrieval(batch, cfg)
            status = out.status
            error = _hp_error(out, w.tolist())
            threshold = tol if tol is not None else (100 * beta if beta > 0 else 1e-9)
            lll_ms = out.diagnostics.get("lll_ms")
            relation_norm = out.diagnostics.get("relation_norm")
    else:
        gamma = cell["gamma"]
        inst = make_instance(d, gamma, beta, rng)
        tau = phase_noise(beta)
        m = default_sample_count(d, tau / gamma)
        batch = cosine_batch(inst, rng, m, NoiseModel.uniform(beta))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            v = recover_exhaustive_cosine(batch, gamma, beta, rng, cover_cap=cover_cap)
        error = float(min(np.sum((v - inst.w) ** 2), np.sum((v + inst.w) ** 2)))
        status = "success"
        threshold = tol if tol is not None else 40000 * tau * tau / (gamma * gamma)
    wall_ms = (time.perf_counter() - t0) * 1e3
    ok = status == "success" and error is not None and error <= threshold
    return TrialOutcome(status, error, bool(ok), wall_ms, lll_ms, relation_norm), extra


def _safe_trial(args) -> tuple:
    cell, preset, tol, cap, seq = args
    try:
        return _run_trial(cell, preset, tol, cap, seq)
    except (CosNeuronError, ArithmeticError, ValueError) as exc:
        # a failed trial is data, not a crash
        return TrialOutcome(f"error:{type(exc).__name__}", None, False, math.nan), {"message": str(exc)}


def _median(values) -> Optional[float]:
    vals = [v for v in values if v is not None and math.isfinite(v)]
    return float(statistics.median(vals)) if vals else None


def _assemble(cell: dict, results: List[tuple]) -> ExperimentRecord:
    trials = [r[0] for r in results]
    statuses: Dict[str, int] = {}
    for t in trials:
        statuses[t.status] = statuses.get(t.status, 0) + 1
    successes = sum(t.success for t in trials)
    agg = {
        "trials": len(trials),
        "successes": successes,
        "success_rate": successes / len(trials),
        "median_error": _median(t.error for t in trials),
        "max_error": max((t.error for t in trials if t.error is not None), default=None),
        "status_counts": dict(sorted(statuses.items())),
    }
    timing = {
        "median_wall_ms": _median(t.wall_ms for t in trials),
        "median_lll_ms": _median(t.lll_ms for t in trials),
    }
    extra: dict = {}
    if cell["mode"] == "recover-phase" and cell.get("samples") == cell["d"]:
        counts = [r[1].get("feasible_count") for r in results if "feasible_count" in r[1]]
        extra = {
            "recovery_impossible": True,
            "feasible_count": counts[0] if counts and len(set(counts)) == 1 else counts,
            "trials_with_spurious_in_band": sum(1 for r in results if r[1].get("spurious_same_norm_band", 0) > 0),
        }
    messages = sorted({r[1]["message"] for r in results if "message" in r[1]})
    if messages:
        extra["errors"] = messages
    return ExperimentRecord(cell, trials, agg, timing, extra)


def run_cell(cell: dict, config: ExperimentConfig, executor=None) -> ExperimentRecord:
    seqs = _cell_seed(config.resolved_seed(), cell).spawn(config.trials)
    args = [(cell, config.preset, config.tol, config.cover_cap, s) for s in seqs]
    results = list(executor.map(_safe_trial, args)) if executor else [_safe_trial(a) for a in args]
    return _assemble(cell, results)


def run_experiment(config: ExperimentConfig) -> List[ExperimentRecord]:
    """One record per grid cell, in grid order; an empty grid gives []."""
    cells = config.cells()
    if not cells:
        return []
    if config.jobs == 1:
        return [run_cell(c, config) for c in cells]
    with ProcessPoolExecutor(max_workers=config.jobs) as ex:
        # map keeps submission order, so records come back in grid order
        return [run_cell(c, config, ex) for c in cells]


# -- reports ---------------------------------------------------------------

PARAM_COLUMNS = ("mode", "d", "gamma", "norm", "beta", "N", "samples")
AGG_COLUMNS = ("trials", "successes", "success_rate", "median_error", "max_error")
TIMING_COLUMNS = ("median_wall_ms", "median_lll_ms")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _rows(records: Sequence[ExperimentRecord], timing: bool):
    params = [c for c in PARAM_COLUMNS if any(c in r.parameters for r in records)]
    cols = params + list(AGG_COLUMNS) + (list(TIMING_COLUMNS) if timing else [])
    rows = []
    for r in records:
        src = {**r.parameters, **r.aggregate, **(r.timing if timing else {})}
        rows.append([_fmt(src.get(c)) for c in cols])
    return cols, rows


def emit_report(records: Sequence[ExperimentRecord], format: str = "json", path: Optional[str] = None,
                timing: bool = True) -> str:
    """Render records as json, csv or a markdown table; also write to ``path`` if given.

    Table formats print floats with 12 significant digits. JSON keeps full
    precision so that it parses back to the same records.
    """
    records = list(records)
    if format == "json":
        text = json.dumps([r.to_dict(timing) for r in records], indent=2, sort_keys=True) + "\n"
    elif format in ("csv", "markdown"):
        if not records:
            raise ConfigError(f"{format} report needs at least one record")
        cols, rows = _rows(records, timing)
        if format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(cols)
            w.writerows(rows)
            text = buf.getvalue()
        else:
            lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
            lines += ["| " + " | ".join(row) + " |" for row in rows]
            text = "\n".join(lines) + "\n"
    else:
        raise ConfigError(f"unknown report format {format!r}")
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path!r}: {exc.strerror}") from exc
    return text


def records_from_json(text: str) -> List[ExperimentRecord]:
    return [ExperimentRecord.from_dict(d) for d in json.loads(text)]


def landscape_markdown(records: Iterable[ExperimentRecord], row: str = "beta", col: str = "mode") -> str:
    """Pivot success rates: one row per ``row`` value, one column per ``col`` value."""
    records = list(records)
    if not records:
        raise ConfigError("landscape needs at least one record")
    rows = sorted({r.parameters.get(row) for r in records}, key=lambda v: (v is None, v))
    cols = sorted({str(r.parameters.get(col)) for r in records})
    cell = {(r.parameters.get(row), str(r.parameters.get(col))): r.aggregate["success_rate"] for r in records}
    lines = [f"| {row} \\ {col} | " + " | ".join(cols) + " |", "|" + "---|" * (len(cols) + 1)]
    for rv in rows:
        vals = [_fmt(cell.get((rv, c))) or "-" for c in cols]
        lines.append(f"| {_fmt(rv)} | " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"
