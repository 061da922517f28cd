"""Dyadic truncation and integer-relation detection through an LLL embedding.

A vector b with entries in 2^-N Z and b_1 = 1 is embedded into the lattice
spanned by the columns of

    [ M*2^N*b_1  M*2^N*b_2  ...  M*2^N*b_n ]
    [     0          1      ...      0     ]
    [    ...                ...            ]
    [     0          0      ...      1     ]

A lattice vector B c equals (M * 2^N * <b, c>, c_2, ..., c_n). Once M is
large, every short vector has a zero first entry, so its coefficients c form
an integer relation for b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from numbers import Rational
from typing import List, Optional, Sequence, Tuple

import mpmath

from ._validation import ConfigError, DomainError, NumericError, as_delta, check_positive_int
from .lattice import lll_reduce_columns

__all__ = [
    "DyadicVector",
    "IntegerRelation",
    "exact_fraction",
    "dyadic_numerator",
    "truncate_dyadic",
    "build_relation_lattice",
    "detect_integer_relation",
    "default_scale",
]

_MPF = mpmath.ctx_mp_python._mpf


def exact_fraction(x) -> Fraction:
    """Exact rational value of an int, Fraction, float, Decimal or mpmath number."""
    if isinstance(x, bool):
        raise DomainError("booleans are not numbers here")
    if isinstance(x, _MPF):
        if not x.context.isfinite(x):
            raise DomainError(f"non-finite value {x}")
        # man_exp drops the sign, the raw tuple keeps it
        sign, man, exp, _ = x._mpf_
        man = -int(man) if sign else int(man)
        return Fraction(man * 2 ** exp) if exp >= 0 else Fraction(man, 2 ** -exp)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"non-finite value {x}")
        return Fraction(x)
    if isinstance(x, (int, Rational, Decimal)):
        if isinstance(x, Decimal) and not x.is_finite():
            raise DomainError(f"non-finite value {x}")
        return Fraction(x)
    try:
        return exact_fraction(float(x)) if not hasattr(x, "__index__") else Fraction(int(x))
    except (TypeError, ValueError):
        raise DomainError(f"cannot interpret {x!r} as a real number") from None


def dyadic_numerator(x, N: int) -> int:
    """Integer k with (x)_N = k * 2^-N, truncating toward zero."""
    N = check_positive_int(N, "N")
    q = exact_fraction(x)
    mag = (abs(q.numerator) << N) // q.denominator
    return -mag if q < 0 else mag


def truncate_dyadic(x, N: int) -> Fraction:
    """(x)_N = sgn(x) * floor(2^N |x|) / 2^N as an exact Fraction."""
    return Fraction(dyadic_numerator(x, N), 1 << N)


@dataclass(frozen=True)
class DyadicVector:
    """Entries ``numerators[i] * 2^-N``."""

    N: int
    numerators: Tuple[int, ...]

    def __post_init__(self):
        check_positive_int(self.N, "N")
        object.__setattr__(self, "numerators", tuple(int(v) for v in self.numerators))
        if not self.numerators:
            raise ConfigError("a dyadic vector needs at least one entry")

    @classmethod
    def from_values(cls, values: Sequence, N: int) -> "DyadicVector":
        return cls(N, tuple(dyadic_numerator(v, N) for v in values))

    def __len__(self) -> int:
        return len(self.numerators)

    def values(self) -> List[Fraction]:
        den = 1 << self.N
        return [Fraction(v, den) for v in self.numerators]

    def norm(self) -> float:
        sq = sum(v * v for v in self.numerators)
        return math.sqrt(float(Fraction(sq, 1 << (2 * self.N))))

    def dot_numerator(self, t: Sequence[int]) -> int:
        """2^N * <b, t> as an exact integer."""
        return sum(a * int(b) for a, b in zip(self.numerators, t))


@dataclass(frozen=True)
class IntegerRelation:
    t: Tuple[int, ...]
    norm: float

    @classmethod
    def from_vector(cls, t: Sequence[int]) -> "IntegerRelation":
        t = tuple(int(v) for v in t)
        return cls(t, math.sqrt(sum(v * v for v in t)))


def default_scale(n: int) -> int:
    """Embedding scale 2^(3n) used when none is supplied."""
    return 1 << (3 * n)


def _check_leading_one(b: DyadicVector) -> None:
    if b.numerators[0] != 1 << b.N:
        raise ConfigError("relation detection needs b_1 = 1 exactly")


def build_relation_lattice(b: DyadicVector, M: int) -> List[List[int]]:
    """Row-major basis whose columns span the relation lattice of ``b``."""
    _check_leading_one(b)
    M = check_positive_int(M, "M")
    n = len(b)
    rows = [[M * v for v in b.numerators]]
    for i in range(1, n):
        rows.append([int(j == i) for j in range(n)])
    return rows


def _relation_columns(b: DyadicVector, M: int) -> List[List[int]]:
    n = len(b)
    cols = []
    for j, v in enumerate(b.numerators):
        c = [0] * n
        c[0] = M * v
        if j:
            c[j] = 1
        cols.append(c)
    return cols


def detect_integer_relation(b: DyadicVector, M: Optional[int] = None, delta=Fraction(3, 4)) -> Optional[IntegerRelation]:
    """Search for a short integer relation of ``b`` via LLL.

    Returns ``None`` (not found) when the first reduced vector still has a
    non-zero top entry, meaning M was too small or no short relation exists.
    """
    if not isinstance(b, DyadicVector):
        raise ConfigError("b must be a DyadicVector")
    _check_leading_one(b)
    n = len(b)
    M = default_scale(n) if M is None else check_positive_int(M, "M")
    if n == 1:
        return None
    reduced = lll_reduce_columns(_relation_columns(b, M), as_delta(delta))
    first = reduced[0]
    if first[0] != 0:
        return None
    tail = first[1:]
    s = sum(v * c for v, c in zip(b.numerators[1:], tail))
    c1, rem = divmod(-s, 1 << b.N)
    if rem:
        # cannot happen for a genuine lattice vector with zero top entry
        raise NumericError("relation lattice produced a non-integral leading coefficient")
    t = [c1] + list(tail)
    if not any(t):
        return None
    return IntegerRelation.from_vector(t)
