"""Exponential-time recovery by scoring every direction of a sphere cover.

A candidate v scores

    T_v = (1/m) sum_i 1[|gamma<v,x_i> - z_i mod 1| <= thr] + 1[|gamma<v,x_i> + z_i mod 1| <= thr]

on phaseless labels z_i in [0, 1/2]; the highest scoring cover point is
returned. Cosine labels are first mapped to phaseless ones with
arccos(z)/(2 pi), which turns label noise beta into phase noise
tau = arccos(1 - beta)/(2 pi).
"""

from __future__ import annotations

import math
from fractions import Fraction
import warnings
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import ConfigError, check_design, check_rng, check_vector
from .sampling import SampleBatch

__all__ = [
    "SphereCover",
    "ExhaustiveResult",
    "phase_noise",
    "cover_radius",
    "default_sample_count",
    "required_cover_size",
    "random_sphere_cover",
    "cover_effective_radius",
    "score_direction",
    "score_cover",
    "exhaustive_search",
    "recover_exhaustive_phaseless",
    "recover_exhaustive_cosine",
    "cosine_to_phaseless",
    "ExhaustiveCosineRecovery",
    "MAX_UNCAPPED_COVER",
]

MAX_UNCAPPED_COVER = 10 ** 7


@dataclass
class SphereCover:
    d: int
    eps: float
    points: np.ndarray
    required: Optional[int]

    @property
    def capped(self) -> bool:
        return self.required is None or self.points.shape[0] < self.required

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass
class ExhaustiveResult:
    direction: np.ndarray
    index: int
    score: float
    cover_size: int
    eps: float
    threshold: float


def phase_noise(beta: float) -> float:
    """tau = arccos(1 - beta) / (2 pi): phase noise after the arccos map."""
    if not 0 <= beta <= 2:
        raise ConfigError(f"beta must lie in [0, 2], got {beta}")
    return math.acos(1.0 - beta) / (2 * math.pi)


def cover_radius(gamma: float, noise: float) -> float:
    """Cover radius noise / gamma used by default."""
    return noise / gamma


def default_sample_count(d: int, eps: float) -> int:
    """m = ceil(64 d log(1/eps))."""
    return int(math.ceil(64 * d * math.log(1.0 / eps)))


def required_cover_size(d: int, eps: float) -> Optional[int]:
    """ceil(2 N log N) random points with N = ceil((1 + 4/eps)^d); None if astronomically large."""
    if d * math.log1p(4.0 / eps) > 700:
        return None
    # exact rational power, so N is not pushed up by rounding when (1 + 4/eps)^d is an integer
    base = 1 + 4 / Fraction(eps)
    N = math.ceil(base ** d)
    return int(math.ceil(2 * N * math.log(N)))


def random_sphere_cover(d: int, eps: float, rng, cap: Optional[int] = None) -> SphereCover:
    """Uniform random points on S^{d-1}, enough for an eps-cover w.h.p.

    Without ``cap`` the full count is drawn, up to ``MAX_UNCAPPED_COVER``;
    larger requests are refused with the required count in the message.
    """
    if not isinstance(d, int) or d < 1:
        raise ConfigError(f"d must be a positive integer, got {d!r}")
    if not 0 < eps < 1:
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    rng = check_rng(rng)
    required = required_cover_size(d, eps)
    if cap is None:
        if required is None or required > MAX_UNCAPPED_COVER:
            raise ConfigError(f"cover needs {required or 'more than 1e300'} points; pass cap to truncate it")
        count = required
    else:
        if cap < 1:
            raise ConfigError("cap must be positive")
        count = int(cap if required is None else min(cap, required))
    g = rng.standard_normal((count, d))
    nrm = np.linalg.norm(g, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return SphereCover(d, eps, g / nrm, required)


def cover_effective_radius(points: np.ndarray, rng=None, probes: int = 10 ** 4, chunk: int = 256) -> float:
    """Largest distance from a probe direction to its nearest cover point.

    In two dimensions the exact covering radius is returned, computed from
    the largest angular gap; otherwise ``probes`` random directions are used.
    """
    P = np.asarray(points, dtype=float)
    d = P.shape[1]
    if d == 1:
        return 0.0 if (P > 0).any() and (P < 0).any() else 2.0
    if d == 2:
        ang = np.sort(np.arctan2(P[:, 1], P[:, 0]))
        gaps = np.diff(np.concatenate([ang, ang[:1] + 2 * np.pi]))
        return float(2 * np.sin(gaps.max() / 4))
    rng = check_rng(rng)
    Q = rng.standard_normal((probes, d))
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    worst = 1.0
    for i in range(0, probes, chunk):
        best = np.full(min(chunk, probes - i), -1.0)
        for j in range(0, P.shape[0], 65536):
            best = np.maximum(best, (Q[i : i + chunk] @ P[j : j + 65536].T).max(axis=1))
        worst = min(worst, best.min())
    return float(np.sqrt(max(0.0, 2 - 2 * worst)))


@numba.njit(cache=True)
def _score_kernel(P, XT, z, thr, out):
    k, d = P.shape
    m = XT.shape[1]
    for i in range(k):
        cnt = 0
        for j in range(m):
            s = 0.0
            for l in range(d):
                s += P[i, l] * XT[l, j]
            t = s - z[j]
            t -= np.floor(t + 0.5)
            if abs(t) <= thr:
                cnt += 1
            t = s + z[j]
            t -= np.floor(t + 0.5)
            if abs(t) <= thr:
                cnt += 1
        out[i] = cnt / m


def score_cover(points, X, z, gamma: float, threshold: float) -> np.ndarray:
    """Scores T_v of every cover point (rows of ``points``)."""
    if not threshold > 0:
        raise ConfigError("threshold must be positive")
    P = np.ascontiguousarray(points, dtype=float)
    X = check_design(X)
    z = np.ascontiguousarray(z, dtype=float)
    if P.ndim != 2 or P.shape[1] != X.shape[1]:
        raise ConfigError("cover dimension does not match the samples")
    out = np.empty(P.shape[0])
    _score_kernel(P, np.ascontiguousarray(gamma * X.T), z, float(threshold), out)
    return out


def score_direction(v, X, z, gamma: float, threshold: float) -> float:
    """Empirical score T_v of a single candidate direction."""
    X = check_design(X)
    v = check_vector(v, "v", X.shape[1])
    return float(score_cover(v[None, :], X, z, gamma, threshold)[0])


def _xz(samples, z=None):
    if isinstance(samples, SampleBatch):
        return check_design(samples.X), samples.labels_float()
    if z is None:
        X, z = samples
        return check_design(X), np.asarray(z, dtype=float)
    return check_design(samples), np.asarray(z, dtype=float)


def exhaustive_search(X, z, gamma: float, noise: float, rng=None, cover_cap: Optional[int] = None,
                      threshold: Optional[float] = None, cover=None) -> ExhaustiveResult:
    """Argmax of the cover scores on phaseless labels (lowest index wins ties)."""
    X = check_design(X)
    z = np.asarray(z, dtype=float)
    if X.shape[0] != z.shape[0]:
        raise ConfigError("sample and label counts differ")
    thr = 3 * noise if threshold is None else float(threshold)
    if not thr > 0:
        raise ConfigError("threshold must be positive; pass one explicitly when the noise is 0")
    if cover is None:
        eps = cover_radius(gamma, noise) if noise > 0 else thr / (3 * gamma)
        cover = random_sphere_cover(X.shape[1], min(eps, 0.999), rng, cover_cap)
    points = cover.points if isinstance(cover, SphereCover) else np.asarray(cover, dtype=float)
    if points.shape[0] == 0:
        raise ConfigError("empty cover")
    if points.shape[1] != X.shape[1]:
        raise ConfigError("cover dimension does not match the samples")
    scores = score_cover(points, X, z, gamma, thr)
    idx = int(np.argmax(scores))  # first maximum
    eps = cover.eps if isinstance(cover, SphereCover) else float("nan")
    return ExhaustiveResult(points[idx].copy(), idx, float(scores[idx]), points.shape[0], eps, thr)


def recover_exhaustive_phaseless(samples, gamma: float, beta: float, rng=None, cover_cap: Optional[int] = None,
                                 threshold: Optional[float] = None, cover=None) -> np.ndarray:
    """Direction maximizing the score on phaseless-CLWE samples with noise ``beta``."""
    if beta >= 1 / 400:
        warnings.warn("beta >= 1/400: the recovery guarantee does not apply", stacklevel=2)
    X, z = _xz(samples)
    return exhaustive_search(X, z, gamma, beta, rng, cover_cap, threshold, cover).direction


def cosine_to_phaseless(z) -> np.ndarray:
    """arccos(clip(z, -1, 1)) / (2 pi), elementwise."""
    return np.arccos(np.clip(np.asarray(z, dtype=float), -1.0, 1.0)) / (2 * np.pi)


def recover_exhaustive_cosine(samples, gamma: float, beta: float, rng=None, cover_cap: Optional[int] = None,
                              threshold: Optional[float] = None, cover=None) -> np.ndarray:
    """Direction recovered from cosine samples through the phaseless reduction."""
    if beta > 1 - math.cos(math.pi / 200):
        warnings.warn("beta exceeds 1 - cos(pi/200): the recovery guarantee does not apply", stacklevel=2)
    X, z = _xz(samples)
    tau = phase_noise(beta)
    return exhaustive_search(X, cosine_to_phaseless(z), gamma, tau, rng, cover_cap, threshold, cover).direction


class ExhaustiveCosineRecovery(RegressorMixin, BaseEstimator):
    """Cover-search estimator for cosine (or phaseless) samples.

    Parameters
    ----------
    gamma, beta : frequency and label-noise bound of the data.
    cover_cap : optional cap on the number of cover points.
    threshold : score window; defaults to three times the phase noise.
    target : "cosine" maps labels with arccos first, "phaseless" uses them as is.
    random_state : seed for the cover.
    """

    def __init__(self, gamma=1.0, beta=1e-3, cover_cap=10 ** 6, threshold=None, target="cosine", random_state=None):
        self.gamma = gamma
        self.beta = beta
        self.cover_cap = cover_cap
        self.threshold = threshold
        self.target = target
        self.random_state = random_state

    def fit(self, X, y):
        X = check_design(X)
        y = np.asarray(y, dtype=float)
        if self.target == "cosine":
            labels, noise = cosine_to_phaseless(y), phase_noise(self.beta)
        elif self.target == "phaseless":
            labels, noise = y, self.beta
        else:
            raise ConfigError(f"unknown target {self.target!r}")
        res = exhaustive_search(X, labels, self.gamma, noise, check_rng(self.random_state),
                                self.cover_cap, self.threshold)
        self.coef_ = res.direction
        self.score_ = res.score
        self.cover_size_ = res.cover_size
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return np.cos(2 * np.pi * self.gamma * (check_design(X) @ self.coef_))
