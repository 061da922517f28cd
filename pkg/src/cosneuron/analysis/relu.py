"""One-hidden-layer ReLU approximation of cos(2 pi z) on a compact window."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .._validation import ConfigError

__all__ = ["ReluNetwork", "relu_parameters", "relu_approximate_cosine", "relu_target", "relu_squared_loss"]

LIPSCHITZ = 2 * math.pi


@dataclass(frozen=True)
class ReluNetwork:
    """h(z) = a + sum_i alpha_i * max(0, z - beta_i)."""

    a: float
    alphas: np.ndarray
    breakpoints: np.ndarray
    L: float
    R: float
    eta: float

    @property
    def width(self) -> int:
        return int(self.alphas.shape[0])

    @property
    def units(self) -> list:
        return list(zip(self.alphas.tolist(), self.breakpoints.tolist()))

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.full(z.shape, self.a)
        # partial sums over sorted breakpoints keep this O(n log w)
        idx = np.searchsorted(self.breakpoints, z, side="right")
        slope = np.concatenate([[0.0], np.cumsum(self.alphas)])
        icpt = np.concatenate([[0.0], np.cumsum(self.alphas * self.breakpoints)])
        out = out + slope[idx] * z - icpt[idx]
        return out


def relu_parameters(gamma: float, eps: float) -> Tuple[float, float, float]:
    """(L, eta, R): L = 2 pi, eta = sqrt(eps/2), R = ceil(gamma sqrt(2 log(8/eps))) + 1/4.

    The window edge sits at a quarter period so that cos(2 pi R) = 0 and
    the zero-extended target stays 2 pi-Lipschitz.
    """
    if not 0 < eps < 1:
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    if not gamma >= 1:
        raise ConfigError(f"gamma must be >= 1, got {gamma}")
    R = math.ceil(gamma * math.sqrt(2 * math.log(8 / eps))) + 0.25
    return LIPSCHITZ, math.sqrt(eps / 2), R


def relu_target(z, R: float):
    """cos(2 pi z) on [-R, R], zero outside."""
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) <= R, np.cos(2 * np.pi * z), 0.0)


def relu_approximate_cosine(gamma: float, eps: float) -> ReluNetwork:
    """Piecewise-linear interpolant of the windowed cosine on a uniform grid.

    The grid spacing is at most eta / L, so the interpolation error is at
    most eta / 2, every slope is bounded by L and each unit weight (a slope
    change) by 2 L.
    """
    L, eta, R = relu_parameters(gamma, eps)
    segments = int(math.ceil(2 * R * L / eta))
    knots = np.linspace(-R, R, segments + 1)
    vals = relu_target(knots, R)
    slopes = np.diff(vals) / np.diff(knots)
    alphas = np.diff(np.concatenate([[0.0], slopes, [0.0]]))
    return ReluNetwork(a=float(vals[0]), alphas=alphas, breakpoints=knots, L=L, R=R, eta=eta)


def relu_squared_loss(net: ReluNetwork, gamma: float, nodes: int = 8) -> float:
    """E_{z ~ N(0, gamma^2)} (cos(2 pi z) - h(z))^2 by composite Gauss-Legendre.

    Segments are the network breakpoints inside [-R, R] and quarter periods
    in the tails out to 40 gamma, where the Gaussian weight is negligible.
    """
    x, wq = np.polynomial.legendre.leggauss(nodes)
    R = net.R
    tail_end = R + 40 * gamma
    tail = np.arange(R, tail_end + 0.25, 0.25)
    edges = np.unique(np.concatenate([-tail[::-1], net.breakpoints, tail]))
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    z = mid[:, None] + half[:, None] * x[None, :]
    dens = np.exp(-0.5 * (z / gamma) ** 2) / (gamma * math.sqrt(2 * math.pi))
    err = (np.cos(2 * np.pi * z) - net(z)) ** 2
    return float(np.sum(half[:, None] * wq[None, :] * err * dens))
