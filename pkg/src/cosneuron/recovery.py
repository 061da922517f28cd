"""Lattice-based recovery of a cosine neuron from d+1 samples.

Given samples (x_i, z_i) with z_i = cos(2 pi gamma <w, x_i>), every phase
gamma <w, x_i> equals eps_i * arccos(z_i)/(2 pi) + K_i for a sign eps_i and
an integer K_i. The d+1 inputs are linearly dependent, sum_i lam_i x_i = 0
with lam_1 = 1, so

    sum_i lam_i K_i + sum_i eps_i (lam_i * phase_i) = 0

is a short integer relation among the numbers (1, lam_2, ..., lam_{d+1},
lam_1 phase_1, ..., lam_{d+1} phase_{d+1}). After truncating those numbers to
N bits (plus a 2^-N slack entry) the relation is found with LLL, the signs
and offsets are read off, and a square linear solve returns +-gamma w.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import ConfigError, NumericError, as_delta, check_positive_int
from .intrel import DyadicVector, IntegerRelation, detect_integer_relation, dyadic_numerator
from .lattice import euclid_gcd_vec
from .sampling import LabeledSample, SampleBatch

__all__ = [
    "RecoveryConfig",
    "RecoveryOutcome",
    "SUCCESS",
    "FAIL_SINGULAR",
    "FAIL_RELATION_SHAPE",
    "SingularSystemError",
    "arccos_phase",
    "solve_lambda",
    "recover_cosine",
    "recover_phase_retrieval",
    "recover_clwe",
    "recovery_error",
    "LatticeCosineRecovery",
]

SUCCESS = "success"
FAIL_SINGULAR = "fail_singular"
FAIL_RELATION_SHAPE = "fail_relation_shape"


class SingularSystemError(NumericError):
    """Pivoting found the sample matrix numerically singular."""


@dataclass(frozen=True)
class RecoveryConfig:
    """Truncation bits ``N``, embedding scale ``M``, working precision, LLL delta."""

    N: int
    M: int
    precision_bits: int
    delta: Fraction = Fraction(3, 4)

    def __post_init__(self):
        check_positive_int(self.N, "N", minimum=16)
        check_positive_int(self.M, "M", minimum=2)
        check_positive_int(self.precision_bits, "precision_bits")
        if self.precision_bits < self.N + 64:
            raise ConfigError(f"precision_bits must be >= N + 64 = {self.N + 64}, got {self.precision_bits}")
        object.__setattr__(self, "delta", as_delta(self.delta))

    @classmethod
    def desk(cls, d: int, **overrides) -> "RecoveryConfig":
        """N = max(128, 32 d), precision N + 64, M = 2^(3d)."""
        d = check_positive_int(d, "d")
        N = overrides.pop("N", max(128, 32 * d))
        params = dict(N=N, M=1 << (3 * d), precision_bits=N + 64)
        params.update(overrides)
        return cls(**params)

    @classmethod
    def paper(cls, d: int, **overrides) -> "RecoveryConfig":
        """N = ceil(d^3 (ln d)^2), the worst-case choice; very slow beyond d ~ 6."""
        d = check_positive_int(d, "d")
        N = overrides.pop("N", max(16, math.ceil(d ** 3 * math.log(d) ** 2)))
        params = dict(N=N, M=1 << (3 * d), precision_bits=N + 64)
        params.update(overrides)
        return cls(**params)

    @classmethod
    def noisy(cls, d: int, beta: float, scale: float = 1.0, **overrides) -> "RecoveryConfig":
        """Truncate just above the noise floor: 2^-N ~ d * scale * beta.

        Truncating much finer than the noise only inflates the slack entry
        of the planted relation, while coarser truncation lets spurious
        short relations appear. Uses delta = 0.99, since the margin between
        the planted and the spurious relations is thin here.
        """
        d = check_positive_int(d, "d")
        if not beta > 0:
            return cls.desk(d, **overrides)
        N = overrides.pop("N", max(16, int(math.floor(-math.log2(d * scale * beta)))))
        params = dict(N=N, M=1 << (3 * d), precision_bits=max(N + 64, 256), delta=Fraction(99, 100))
        params.update(overrides)
        return cls(**params)


@dataclass
class RecoveryOutcome:
    status: str
    w_scaled: np.ndarray
    w_unit: Optional[np.ndarray] = None
    signs: Optional[Tuple[int, ...]] = None
    offsets: Optional[Tuple[int, ...]] = None
    relation: Optional[IntegerRelation] = None
    diagnostics: dict = field(default_factory=dict)
    w_scaled_hp: Optional[tuple] = None

    @property
    def success(self) -> bool:
        return self.status == SUCCESS


def _context(precision_bits: int):
    ctx = mpmath.MPContext()
    ctx.prec = precision_bits
    return ctx


def _to_ctx(ctx, v):
    if isinstance(v, mpmath.ctx_mp_python._mpf):
        return v if v.context is ctx else ctx.mpf(v)
    if isinstance(v, Fraction):
        return ctx.mpf(v.numerator) / v.denominator
    return ctx.mpf(float(v)) if not isinstance(v, int) else ctx.mpf(v)


def arccos_phase(z, ctx=None):
    """arccos(z)/(2 pi) in [0, 1/2] after clamping z to [-1, 1]."""
    if ctx is None:
        if isinstance(z, mpmath.ctx_mp_python._mpf):
            ctx = z.context
        else:
            zf = min(1.0, max(-1.0, float(z)))
            return math.acos(zf) / (2 * math.pi)
    zc = _to_ctx(ctx, z)
    if zc > 1:
        zc = ctx.mpf(1)
    elif zc < -1:
        zc = ctx.mpf(-1)
    return ctx.acos(zc) / (2 * ctx.pi)


def _solve(ctx, A: List[list], rhs: list, threshold) -> list:
    """Gaussian elimination with partial pivoting; A is a list of rows."""
    n = len(A)
    a = [list(row) + [r] for row, r in zip(A, rhs)]
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(a[r][c]))
        if abs(a[piv][c]) < threshold:
            raise SingularSystemError(f"pivot {c} below threshold")
        a[c], a[piv] = a[piv], a[c]
        pc = a[c]
        inv = 1 / pc[c]
        for r in range(c + 1, n):
            f = a[r][c] * inv
            if f:
                ar = a[r]
                for j in range(c, n + 1):
                    ar[j] -= f * pc[j]
    sol = [ctx.zero] * n
    for r in range(n - 1, -1, -1):
        s = a[r][n] - ctx.fsum(a[r][j] * sol[j] for j in range(r + 1, n))
        sol[r] = s / a[r][r]
    return sol


def _pivot_threshold(ctx, precision_bits: int, scale):
    return ctx.ldexp(ctx.mpf(1), -(precision_bits // 2)) * scale


def solve_lambda(xs, precision_bits: int, ctx=None) -> list:
    """Coefficients lam with lam_1 = 1 and sum_i lam_i x_i = 0.

    ``xs`` holds d+1 vectors of length d. Computed at ``precision_bits`` by
    elimination with partial pivoting on X = [x_2 ... x_{d+1}].
    """
    X = np.asarray(xs, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1] + 1:
        raise ConfigError(f"expected d+1 vectors of length d, got shape {X.shape}")
    d = X.shape[1]
    ctx = ctx or _context(precision_bits)
    rows = [[ctx.mpf(float(X[j + 1, i])) for j in range(d)] for i in range(d)]
    rhs = [-ctx.mpf(float(v)) for v in X[0]]
    scale = ctx.mpf(float(np.max(np.abs(X[1:])))) if d else ctx.one
    lam = _solve(ctx, rows, rhs, _pivot_threshold(ctx, precision_bits, scale))
    return [ctx.one] + lam


def _as_xz(samples) -> Tuple[np.ndarray, list]:
    if isinstance(samples, SampleBatch):
        return np.asarray(samples.X, dtype=float), list(samples.z)
    if isinstance(samples, tuple) and len(samples) == 2 and not isinstance(samples[0], LabeledSample):
        X, z = samples
        return np.atleast_2d(np.asarray(X, dtype=float)), list(z)
    samples = list(samples)
    X = np.array([np.asarray(s.x, dtype=float) for s in samples])
    return X, [s.z for s in samples]


def _fail(status: str, d: int, diag: dict) -> RecoveryOutcome:
    return RecoveryOutcome(status=status, w_scaled=np.zeros(d), diagnostics=diag)


def _recover_from_labels(X: np.ndarray, z: list, config: RecoveryConfig, ctx) -> RecoveryOutcome:
    t0 = time.perf_counter()
    if X.ndim != 2 or X.shape[0] != X.shape[1] + 1:
        raise ConfigError(f"recovery needs exactly d+1 samples of dimension d, got {X.shape}")
    if len(z) != X.shape[0]:
        raise ConfigError("label count does not match sample count")
    d = X.shape[1]
    N = config.N
    diag: dict = {"N": N, "precision_bits": config.precision_bits, "M_bits": config.M.bit_length() - 1}

    phases = [arccos_phase(v, ctx) for v in z]
    try:
        lam = solve_lambda(X, config.precision_bits, ctx)
    except SingularSystemError:
        diag["wall_ms"] = 1e3 * (time.perf_counter() - t0)
        return _fail(FAIL_SINGULAR, d, diag)

    nums = [1 << N]
    nums += [dyadic_numerator(l, N) for l in lam[1:]]
    nums += [dyadic_numerator(l * p, N) for l, p in zip(lam, phases)]
    nums.append(1)
    b = DyadicVector(N, nums)

    t_lll = time.perf_counter()
    rel = detect_integer_relation(b, config.M, config.delta)
    diag["lll_ms"] = 1e3 * (time.perf_counter() - t_lll)
    if rel is None:
        diag["wall_ms"] = 1e3 * (time.perf_counter() - t0)
        return _fail(FAIL_RELATION_SHAPE, d, diag)

    t = rel.t
    t1, t2 = t[: d + 1], t[d + 1 : 2 * d + 2]
    g = euclid_gcd_vec(t2)
    if g == 0 or any(abs(v) != g for v in t2):
        diag["wall_ms"] = 1e3 * (time.perf_counter() - t0)
        out = _fail(FAIL_RELATION_SHAPE, d, diag)
        out.relation = rel
        return out
    signs = tuple(v // g for v in t2)
    offsets = [Fraction(v, g) for v in t1]

    # rows x_i^T w' = eps_i * phase_i + K_i for i = 2..d+1
    rows = [[ctx.mpf(float(a)) for a in X[i]] for i in range(1, d + 1)]
    rhs = [signs[i] * phases[i] + _to_ctx(ctx, offsets[i]) for i in range(1, d + 1)]
    scale = ctx.mpf(float(np.max(np.abs(X[1:]))))
    try:
        w_hp = _solve(ctx, rows, rhs, _pivot_threshold(ctx, config.precision_bits, scale))
    except SingularSystemError:
        diag["wall_ms"] = 1e3 * (time.perf_counter() - t0)
        return _fail(FAIL_SINGULAR, d, diag)
    nrm = ctx.sqrt(ctx.fsum(v * v for v in w_hp))
    w_scaled = np.array([float(v) for v in w_hp])
    w_unit = np.array([float(v / nrm) for v in w_hp]) if nrm else None
    diag["wall_ms"] = 1e3 * (time.perf_counter() - t0)
    diag["relation_norm"] = rel.norm
    offsets_out = tuple(int(o) if o.denominator == 1 else o for o in offsets)
    return RecoveryOutcome(
        status=SUCCESS if w_unit is not None else FAIL_RELATION_SHAPE,
        w_scaled=w_scaled,
        w_unit=w_unit,
        signs=signs,
        offsets=offsets_out,
        relation=rel,
        diagnostics=diag,
        w_scaled_hp=tuple(w_hp),
    )


def recover_cosine(samples, config: RecoveryConfig) -> RecoveryOutcome:
    """Recover +-gamma w from d+1 samples z_i = cos(2 pi gamma <w, x_i>) + noise.

    On success ``w_scaled`` approximates +-gamma w and ``w_unit`` the
    direction. Failures are reported through ``status``; ``w_scaled`` is
    then the zero vector.
    """
    X, z = _as_xz(samples)
    ctx = _context(config.precision_bits)
    return _recover_from_labels(X, z, config, ctx)


def _cos_two_pi(ctx, values) -> list:
    two_pi = 2 * ctx.pi
    return [ctx.cos(two_pi * _to_ctx(ctx, v)) for v in values]


def recover_phase_retrieval(samples, config: RecoveryConfig) -> RecoveryOutcome:
    """Recover +-w from d+1 measurements y_i = |<w, x_i>| + noise.

    Labels are mapped through cos(2 pi y), which turns the problem into the
    cosine case with gamma = |w|; ``w_scaled`` then estimates +-w itself.
    """
    X, y = _as_xz(samples)
    ctx = _context(config.precision_bits)
    return _recover_from_labels(X, _cos_two_pi(ctx, y), config, ctx)


def recover_clwe(samples, config: RecoveryConfig) -> RecoveryOutcome:
    """Recover +-gamma w from d+1 CLWE samples via z = cos(2 pi z_clwe)."""
    X, y = _as_xz(samples)
    ctx = _context(config.precision_bits)
    return _recover_from_labels(X, _cos_two_pi(ctx, y), config, ctx)


def recovery_error(w_hat, w_true) -> float:
    """min(|w_hat - w_true|, |w_hat + w_true|).

    If either argument holds mpmath numbers the distance is computed at their
    precision, so errors far below double-precision resolution are visible.
    """
    a, b = list(w_hat), list(w_true)
    if len(a) != len(b):
        raise ConfigError(f"length mismatch: {len(a)} vs {len(b)}")
    hp = [v for v in a + b if isinstance(v, mpmath.ctx_mp_python._mpf)]
    if not hp:
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))
    ctx = _context(max(v.context.prec for v in hp))
    a = [_to_ctx(ctx, v) for v in a]
    b = [_to_ctx(ctx, v) for v in b]
    minus = ctx.sqrt(ctx.fsum((u - v) ** 2 for u, v in zip(a, b)))
    plus = ctx.sqrt(ctx.fsum((u + v) ** 2 for u, v in zip(a, b)))
    return float(min(minus, plus))


_RECOVERERS = {"cosine": recover_cosine, "phase": recover_phase_retrieval, "clwe": recover_clwe}


class LatticeCosineRecovery(RegressorMixin, BaseEstimator):
    """Estimator wrapper around the lattice recovery.

    ``fit`` takes exactly d+1 samples. ``predict`` evaluates the recovered
    neuron: cos(2 pi <w', x>) for ``target="cosine"`` and ``"clwe"`` (the
    latter predicts the cosine-mapped label, which is invariant to the
    unrecoverable global sign) and |<w', x>| for ``target="phase"``. A failed
    recovery leaves ``coef_`` at zero and ``success_`` False.

    Parameters
    ----------
    target : {"cosine", "phase", "clwe"}
    N, M_exp, precision_bits : optional overrides of the desk preset.
    delta : LLL parameter.
    """

    def __init__(self, target="cosine", N=None, M_exp=None, precision_bits=None, delta=0.75):
        self.target = target
        self.N = N
        self.M_exp = M_exp
        self.precision_bits = precision_bits
        self.delta = delta

    def _config(self, d: int) -> RecoveryConfig:
        base = RecoveryConfig.desk(d) if self.N is None else RecoveryConfig.desk(d, N=int(self.N))
        return RecoveryConfig(
            N=base.N,
            M=base.M if self.M_exp is None else 1 << int(self.M_exp),
            precision_bits=base.precision_bits if self.precision_bits is None else int(self.precision_bits),
            delta=self.delta,
        )

    def fit(self, X, y):
        if self.target not in _RECOVERERS:
            raise ConfigError(f"unknown target {self.target!r}")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ConfigError("X must be two-dimensional")
        y = list(y) if not isinstance(y, np.ndarray) or y.dtype == object else [float(v) for v in y]
        cfg = self._config(X.shape[1])
        self.outcome_ = _RECOVERERS[self.target]((X, y), cfg)
        self.success_ = self.outcome_.success
        self.coef_ = self.outcome_.w_scaled
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = np.asarray(X, dtype=float)
        proj = X @ self.coef_
        if self.target == "phase":
            return np.abs(proj)
        return np.cos(2 * np.pi * proj)
