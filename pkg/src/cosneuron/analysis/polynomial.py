"""The determinant polynomial behind the anticoncentration argument.

For inputs x_1..x_{d+1} in R^d and integer vectors C, C' of length d+1,

    P = det(x_2..x_{d+1}) (gamma <w,x_1> C_1 + C'_1)
        + sum_{i>=2} det(x_2..x_{i-1}, -x_1, x_{i+1}..x_{d+1}) (gamma <w,x_i> C_i + C'_i).

Under i.i.d. Gaussian inputs it has mean zero and variance
(d-1)! gamma^2 sum_{i<j} (C_i - C_j)^2 + d! sum_i C'_i^2.
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from .._validation import ConfigError, check_positive_int, check_rng

__all__ = ["relation_polynomial", "relation_polynomial_variance", "relation_polynomial_moments"]


def relation_polynomial(xs, w, gamma: float, C, C_prime) -> np.ndarray:
    """Evaluate P on a stack of inputs ``xs`` with shape (..., d+1, d)."""
    xs = np.asarray(xs, dtype=float)
    d = xs.shape[-1]
    if xs.shape[-2] != d + 1:
        raise ConfigError("need d+1 input vectors of length d")
    C = np.asarray(C, dtype=float)
    Cp = np.asarray(C_prime, dtype=float)
    lin = gamma * (xs @ np.asarray(w, dtype=float)) * C + Cp
    total = np.linalg.det(xs[..., 1:, :]) * lin[..., 0]
    for i in range(1, d + 1):
        m = xs[..., 1:, :].copy()
        m[..., i - 1, :] = -xs[..., 0, :]
        total = total + np.linalg.det(m) * lin[..., i]
    return total


def relation_polynomial_variance(C, C_prime, gamma: float) -> float:
    C = [int(c) for c in C]
    Cp = [int(c) for c in C_prime]
    if len(C) != len(Cp) or len(C) < 2:
        raise ConfigError("C and C' must have equal length d+1 >= 2")
    d = len(C) - 1
    spread = sum((C[i] - C[j]) ** 2 for i in range(d + 1) for j in range(i + 1, d + 1))
    return math.factorial(d - 1) * gamma ** 2 * spread + math.factorial(d) * sum(c * c for c in Cp)


def relation_polynomial_moments(w, gamma: float, C, C_prime, n: int, rng) -> Tuple[float, float, float]:
    """Monte Carlo (mean, variance, standard error of the variance) over n Gaussian draws."""
    n = check_positive_int(n, "n", minimum=2)
    rng = check_rng(rng)
    w = np.asarray(w, dtype=float)
    d = w.shape[0]
    xs = rng.standard_normal((n, d + 1, d))
    p = relation_polynomial(xs, w, gamma, C, C_prime)
    sq = p * p
    var = float(np.mean(sq))  # mean is zero by symmetry, so E[P^2] is the variance
    return float(np.mean(p)), var, float(np.std(sq, ddof=1) / math.sqrt(n))
