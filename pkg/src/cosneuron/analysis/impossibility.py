"""Sign ambiguity of phase retrieval from only d measurements.

With d measurements y_i = |<x_i, w>| every sign pattern eps gives an exact
solution X^{-1} diag(eps) y, so the data are consistent with 2^d vectors.
Flipping a single sign acts through the reflection-like map
A = I - 2 x~_1 x_1^T (x~_1 the first column of X^{-1}), and that spurious
solution can have norm between 1 and |w| with non-negligible probability.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.stats import binomtest

from .._validation import ConfigError, check_design, check_positive_int, check_rng, check_vector

__all__ = [
    "FEASIBLE_MAX_DIM",
    "phase_retrieval_feasible_set",
    "sign_flip_operator",
    "single_flip_eigen_extremes",
    "ProbeResult",
    "spurious_norm_probe",
]

FEASIBLE_MAX_DIM = 16


def phase_retrieval_feasible_set(X, y, check: bool = True, tol: float = 1e-9) -> List[np.ndarray]:
    """All 2^d solutions of |X w'| = y, ordered with the all-plus pattern first.

    ``X`` has the measurement vectors as rows. With ``check`` every output is
    substituted back and must reproduce y to within ``tol`` (relative to
    max(1, |y|_inf)).
    """
    X = check_design(X)
    d = X.shape[0]
    if X.shape[1] != d:
        raise ConfigError("X must be square")
    if d > FEASIBLE_MAX_DIM:
        raise ConfigError(f"refusing to enumerate 2^{d} sign patterns (d > {FEASIBLE_MAX_DIM})")
    y = check_vector(y, "y", d)
    if abs(np.linalg.det(X)) < 1e-300 or np.linalg.cond(X) > 1e14:
        raise ConfigError("X is singular")
    inv = np.linalg.inv(X)
    out = []
    scale = max(1.0, float(np.max(np.abs(y))))
    for eps in itertools.product((1.0, -1.0), repeat=d):
        w = inv @ (np.asarray(eps) * y)
        if check and np.max(np.abs(np.abs(X @ w) - y)) > tol * scale:
            raise ArithmeticError("feasible-set solution failed the substitution check")
        out.append(w)
    return out


def sign_flip_operator(X, eps) -> np.ndarray:
    """A_eps = X^{-1} diag(eps) X."""
    X = check_design(X)
    return np.linalg.solve(X, np.asarray(eps, dtype=float)[:, None] * X)


def single_flip_eigen_extremes(X) -> Tuple[float, float, float]:
    """(eta, lam_min, lam_max) for A^T A with A the first-sign flip.

    eta = |x_1| |x~_1| and lam = -1 + 2 eta^2 -+ 2 eta sqrt(eta^2 - 1).
    """
    X = check_design(X)
    xt1 = np.linalg.solve(X, np.eye(X.shape[0])[:, 0])
    eta = float(np.linalg.norm(X[0]) * np.linalg.norm(xt1))
    root = 2 * eta * math.sqrt(max(0.0, eta * eta - 1))
    return eta, -1 + 2 * eta * eta - root, -1 + 2 * eta * eta + root


@dataclass
class ProbeResult:
    d: int
    trials: int
    hits: int
    frequency: float
    ci_low: float
    ci_high: float

    @property
    def confidence_interval(self) -> Tuple[float, float]:
        return self.ci_low, self.ci_high


def spurious_norm_probe(d: int, trials: int, rng, chunk: int = 20_000) -> ProbeResult:
    """Frequency of 1 <= |A w| < |w| under a Gaussian design.

    w has a uniform direction and |w| ~ Uniform[1, 2]; A flips the sign of
    the first measurement. Returns the frequency with a 95% Clopper-Pearson
    interval.
    """
    d = check_positive_int(d, "d")
    trials = check_positive_int(trials, "trials", minimum=1000)
    rng = check_rng(rng)
    hits = 0
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        X = rng.standard_normal((b, d, d))
        u = rng.standard_normal((b, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        w = u * rng.uniform(1.0, 2.0, size=(b, 1))
        e1 = np.zeros((b, d, 1))
        e1[:, 0, 0] = 1.0
        xt1 = np.linalg.solve(X, e1)[:, :, 0]
        # A w = w - 2 x~_1 <x_1, w>
        Aw = w - 2 * xt1 * np.einsum("bi,bi->b", X[:, 0, :], w)[:, None]
        na, nw = np.linalg.norm(Aw, axis=1), np.linalg.norm(w, axis=1)
        hits += int(np.count_nonzero((na >= 1) & (na < nw)))
        done += b
    ci = binomtest(hits, trials).proportion_ci(confidence_level=0.95, method="exact")
    return ProbeResult(d, trials, hits, hits / trials, float(ci.low), float(ci.high))
