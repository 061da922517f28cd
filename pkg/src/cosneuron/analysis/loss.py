"""Population squared loss between two cosine neurons, via its Hermite expansion.

For unit w, w' with rho = <w, w'> and x ~ N(0, I),

    L(rho) = E[(cos(2 pi gamma <w,x>) - cos(2 pi gamma <w',x>))^2]
           = 2 sum_{k even} p_k (1 - rho^k),

where p_k = e^{-mu} mu^k / k! is the Poisson(mu = 4 pi^2 gamma^2) mass. The
weights peak near k = mu (about 987 at gamma = 5), so they are evaluated in
log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from .._validation import ConfigError, check_positive_int, check_rng, check_vector

__all__ = [
    "HermiteLossParams",
    "hermite_coefficients",
    "hermite_normalized",
    "hermite_cosine_coefficient",
    "population_loss_closed_form",
    "population_loss_series_tail",
    "trivial_loss",
    "population_loss_monte_carlo",
    "parameter_recovery_edge_check",
    "weak_learning_edge",
]

TAIL_TOL = 1e-13


@dataclass(frozen=True)
class HermiteLossParams:
    rho: float
    gamma: float
    kmax: Optional[int] = None

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [-1, 1], got {self.rho}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.kmax is not None and (self.kmax < 2 or self.kmax % 2):
            raise ConfigError(f"kmax must be even and >= 2, got {self.kmax}")


def hermite_coefficients(k: int) -> List[int]:
    """Integer coefficients (ascending powers) of He_k, the probabilists' Hermite polynomial."""
    k = check_positive_int(k, "k", minimum=0)
    prev, cur = [1], [0, 1]
    if k == 0:
        return prev
    for n in range(1, k):
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= n * c
        prev, cur = cur, nxt
    return cur


def hermite_normalized(k: int, x) -> np.ndarray:
    """h_k(x) = He_k(x) / sqrt(k!), orthonormal under N(0, 1)."""
    x = np.asarray(x, dtype=float)
    h_prev, h = np.zeros_like(x), np.ones_like(x)
    for n in range(k):
        h_prev, h = h, (x * h - math.sqrt(n) * h_prev) / math.sqrt(n + 1)
    return h


def hermite_cosine_coefficient(k: int, rho: float, gamma: float) -> float:
    """E[h_k(Z) cos(2 pi gamma Z_rho)] for rho-correlated standard normals Z, Z_rho."""
    if k < 0:
        raise ConfigError("k must be non-negative")
    if k % 2:
        return 0.0
    if rho == 0:
        return math.exp(-2 * math.pi ** 2 * gamma ** 2) if k == 0 else 0.0
    logmag = k * math.log(abs(rho) * 2 * math.pi * gamma) - 0.5 * math.lgamma(k + 1) - 2 * math.pi ** 2 * gamma ** 2
    sign = -1.0 if (k // 2) % 2 else 1.0
    return sign * math.exp(logmag)


def _poisson_logpmf(k: np.ndarray, mu: float) -> np.ndarray:
    return -mu + k * math.log(mu) - gammaln(k + 1)


def _auto_kmax(mu: float) -> int:
    k = int(mu + 12 * math.sqrt(mu) + 60)
    return k + (k % 2)


def population_loss_series_tail(gamma: float, kmax: int) -> float:
    """Upper bound on the dropped series mass 2 sum_{k > kmax} p_k."""
    mu = 4 * math.pi ** 2 * gamma ** 2
    k = kmax + 1
    if k <= mu:
        return 2.0
    logp = -mu + k * math.log(mu) - math.lgamma(k + 1)
    ratio = mu / (k + 1)
    return 2 * math.exp(logp) / (1 - ratio)


def population_loss_closed_form(params, gamma: Optional[float] = None, kmax: Optional[int] = None) -> float:
    """Series value of L(rho); accepts ``HermiteLossParams`` or ``(rho, gamma)``.

    Without ``kmax`` the series runs far enough past the Poisson mode that the
    dropped mass is below 1e-13.
    """
    if not isinstance(params, HermiteLossParams):
        params = HermiteLossParams(float(params), float(gamma), kmax)
    rho, gamma = params.rho, params.gamma
    mu = 4 * math.pi ** 2 * gamma ** 2
    kmax = params.kmax if params.kmax is not None else _auto_kmax(mu)
    k = np.arange(0, kmax + 1, 2, dtype=float)
    w = np.exp(_poisson_logpmf(k, mu))
    if rho == 0:
        factor = np.where(k == 0, 0.0, 1.0)
    else:
        factor = -np.expm1(k * math.log(abs(rho)))
    return float(max(0.0, 2 * math.fsum(w * factor)))


def trivial_loss(gamma: float) -> float:
    """Var(cos(2 pi gamma Z)) = 1/2 + exp(-8 pi^2 gamma^2)/2 - exp(-4 pi^2 gamma^2)."""
    if not gamma > 0:
        raise ConfigError("gamma must be positive")
    a = math.exp(-4 * math.pi ** 2 * gamma ** 2)
    return 0.5 + 0.5 * a * a - a


def population_loss_monte_carlo(w, w_prime, gamma: float, n: int, rng, chunk: int = 200_000) -> Tuple[float, float]:
    """Sample mean and standard error of the squared difference over n Gaussian draws."""
    w = check_vector(w, "w")
    w_prime = check_vector(w_prime, "w_prime", w.shape[0])
    n = check_positive_int(n, "n", minimum=2)
    rng = check_rng(rng)
    total = total_sq = 0.0
    done = 0
    while done < n:
        b = min(chunk, n - done)
        X = rng.standard_normal((b, w.shape[0]))
        diff = np.cos(2 * np.pi * gamma * (X @ w)) - np.cos(2 * np.pi * gamma * (X @ w_prime))
        sq = diff * diff
        total += math.fsum(sq)
        total_sq += math.fsum(sq * sq)
        done += b
    mean = total / n
    var = max(0.0, (total_sq / n - mean * mean) * n / (n - 1))
    return mean, math.sqrt(var / n)


def parameter_recovery_edge_check(rho: float, gamma: float) -> bool:
    """True iff L(rho) <= Var(cos(2 pi gamma Z)) - 1/12."""
    return population_loss_closed_form(rho, gamma) <= trivial_loss(gamma) - 1.0 / 12


def weak_learning_edge(hypothesis: Callable, data, best_constant: float) -> float:
    """Empirical squared loss of the constant predictor minus that of ``hypothesis``."""
    X, z = _xz(data)
    if X.shape[0] == 0:
        raise ConfigError("data must be non-empty")
    pred = np.asarray(hypothesis(X), dtype=float).reshape(-1)
    return float(np.mean((z - best_constant) ** 2) - np.mean((z - pred) ** 2))


def _xz(data):
    from ..sampling import SampleBatch

    if isinstance(data, SampleBatch):
        return data.X, data.labels_float()
    if isinstance(data, tuple) and len(data) == 2:
        return np.atleast_2d(np.asarray(data[0], dtype=float)), np.asarray(data[1], dtype=float)
    data = list(data)
    return np.array([s.x for s in data], dtype=float), np.array([float(s.z) for s in data])
