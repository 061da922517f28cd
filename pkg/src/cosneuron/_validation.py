"""Error types and small input-validation helpers shared by every module."""

from __future__ import annotations

import math
import operator
from fractions import Fraction
from numbers import Integral, Real

import numpy as np


class CosNeuronError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(CosNeuronError, ValueError):
    """Invalid parameters or preconditions (CLI exit code 2)."""


class DomainError(ConfigError):
    """A numeric argument lies outside the function's domain."""


class NumericError(CosNeuronError, ArithmeticError):
    """A numerical procedure could not complete (CLI exit code 3)."""


class LatticeError(NumericError):
    """Lattice routine failure (dependent columns, size refusal, ...)."""


def check_int_matrix(matrix, square: bool = False):
    """Return ``matrix`` as a list of lists of Python ints.

    Floats are rejected rather than silently rounded.
    """
    try:
        rows = [[operator.index(a) for a in row] for row in matrix]
    except TypeError as exc:
        raise ConfigError(f"matrix entries must be integers: {exc}") from None
    if not rows or not rows[0]:
        raise ConfigError("matrix must be non-empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError("matrix rows must have equal length")
    if square and len(rows) != width:
        raise ConfigError(f"expected a square matrix, got {len(rows)}x{width}")
    return rows


def as_delta(delta) -> Fraction:
    """Exact Lovasz parameter; floats go through their shortest repr."""
    if isinstance(delta, float):
        delta = Fraction(repr(delta))
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta < 1:
        raise ConfigError(f"delta must lie in (1/4, 1), got {delta}")
    return delta


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_finite(value, name: str = "value") -> float:
    if not isinstance(value, Real) or not math.isfinite(float(value)):
        raise DomainError(f"{name} must be a finite real, got {value!r}")
    return value


def check_vector(x, name: str = "x", dim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ConfigError(f"{name} must have length {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def check_design(X, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise ConfigError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def check_rng(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (Integral, np.random.SeedSequence)):
        return np.random.Generator(np.random.PCG64(rng))
    raise ConfigError(f"cannot build a random generator from {rng!r}")
