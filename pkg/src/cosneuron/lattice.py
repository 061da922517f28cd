"""Exact integer lattice arithmetic.

Bases are given row-major as sequences of integer rows, and the *columns*
are the basis vectors. Internally everything works on a list of column
vectors of Python ints, so no floating point is involved anywhere.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import List, Optional, Sequence, Tuple

from ._validation import LatticeError, as_delta, check_int_matrix

__all__ = [
    "SingularBasisError",
    "lll_reduce",
    "lll_reduce_columns",
    "is_lll_reduced",
    "gram_schmidt_exact",
    "shortest_vector_bruteforce",
    "default_coeff_bound",
    "euclid_gcd_vec",
    "columns",
    "from_columns",
    "exact_determinant",
    "BRUTEFORCE_MAX_DIM",
]

BRUTEFORCE_MAX_DIM = 8


class SingularBasisError(LatticeError):
    """Raised when basis columns are linearly dependent."""


def columns(basis: Sequence[Sequence[int]]) -> List[List[int]]:
    rows = check_int_matrix(basis)
    return [list(col) for col in zip(*rows)]


def from_columns(cols: Sequence[Sequence[int]]) -> List[List[int]]:
    return [list(row) for row in zip(*cols)]


def _dot(u, v) -> int:
    return sum(a * b for a, b in zip(u, v))


class _IntegralGSO:
    """Integral Gram-Schmidt data: d_i and lambda_{i,j} stay in Z.

    d[i] is the Gram determinant of the first i vectors (d[0] = 1) and
    lam[i][j] = d[j+1] * mu_{i,j}, with 0-based vector indices.
    """

    def __init__(self, vecs: List[List[int]]):
        self.vecs = vecs
        self.n = len(vecs)
        self.d = [1] + [0] * self.n
        self.lam = [[0] * self.n for _ in range(self.n)]
        self.done = 0

    def extend(self, k: int) -> None:
        d, lam, vecs = self.d, self.lam, self.vecs
        bk = vecs[k]
        for j in range(k + 1):
            u = _dot(bk, vecs[j])
            lam_j = lam[j]
            lam_k = lam[k]
            for i in range(j):
                u = (d[i + 1] * u - lam_k[i] * lam_j[i]) // d[i]
            if j < k:
                lam_k[j] = u
            else:
                if u == 0:
                    raise SingularBasisError("basis columns are linearly dependent")
                d[k + 1] = u
        self.done = k + 1

    def full(self) -> "_IntegralGSO":
        for k in range(self.n):
            self.extend(k)
        return self


def _lll_core(vecs: List[List[int]], delta: Fraction, track: Optional[List[List[int]]]) -> None:
    n = len(vecs)
    if n == 0:
        return
    p, q = delta.numerator, delta.denominator
    g = _IntegralGSO(vecs)
    g.extend(0)
    d, lam = g.d, g.lam

    def red(k: int, l: int) -> None:
        lkl = lam[k][l]
        dl = d[l + 1]
        if 2 * abs(lkl) <= dl:
            return
        r = (2 * lkl + dl) // (2 * dl)
        bk, bl = vecs[k], vecs[l]
        for i in range(len(bk)):
            bk[i] -= r * bl[i]
        if track is not None:
            tk, tl = track[k], track[l]
            for i in range(len(tk)):
                tk[i] -= r * tl[i]
        lam[k][l] = lkl - r * dl
        lk, ll = lam[k], lam[l]
        for i in range(l):
            lk[i] -= r * ll[i]

    def swap(k: int, kmax: int) -> None:
        vecs[k], vecs[k - 1] = vecs[k - 1], vecs[k]
        if track is not None:
            track[k], track[k - 1] = track[k - 1], track[k]
        lk, lk1 = lam[k], lam[k - 1]
        for j in range(k - 1):
            lk[j], lk1[j] = lk1[j], lk[j]
        mu = lk[k - 1]
        dk, dk1, dk2 = d[k + 1], d[k], d[k - 1]
        bnew = (dk2 * dk + mu * mu) // dk1
        for i in range(k + 1, kmax + 1):
            li = lam[i]
            t = li[k]
            li[k] = (dk * li[k - 1] - mu * t) // dk1
            li[k - 1] = (bnew * t + mu * li[k]) // dk
        d[k] = bnew

    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            g.extend(k)
        while True:
            red(k, k - 1)
            lkk = lam[k][k - 1]
            if q * d[k + 1] * d[k - 1] < p * d[k] * d[k] - q * lkk * lkk:
                swap(k, kmax)
                k = max(1, k - 1)
            else:
                break
        for l in range(k - 2, -1, -1):
            red(k, l)
        k += 1


def lll_reduce_columns(
    cols: Sequence[Sequence[int]],
    delta=Fraction(3, 4),
    return_transform: bool = False,
):
    """LLL-reduce a list of column vectors in exact integer arithmetic.

    Returns the reduced columns, and optionally the unimodular matrix ``U``
    (also as columns) with ``reduced[j] = sum_i U[j][i] * cols[i]``.
    """
    delta = as_delta(delta)
    vecs = [[int(a) for a in c] for c in cols]
    n = len(vecs)
    if any(len(v) != len(vecs[0]) for v in vecs):
        raise LatticeError("columns must share a common length")
    track = None
    if return_transform:
        track = [[int(i == j) for i in range(n)] for j in range(n)]
    _lll_core(vecs, delta, track)
    if return_transform:
        return vecs, track
    return vecs


def lll_reduce(basis: Sequence[Sequence[int]], delta=Fraction(3, 4)) -> List[List[int]]:
    """LLL-reduce a square basis whose columns are the basis vectors.

    Parameters
    ----------
    basis : n x n integer matrix, row-major.
    delta : Lovasz parameter in (1/4, 1), converted to an exact Fraction.

    Returns
    -------
    The reduced basis in the same row-major, column-vector convention.
    """
    rows = check_int_matrix(basis, square=True)
    return from_columns(lll_reduce_columns(columns(rows), delta))


def gram_schmidt_exact(basis: Sequence[Sequence[int]]) -> Tuple[List[Fraction], List[List[Fraction]]]:
    """Exact Gram-Schmidt data of the basis columns.

    Returns ``(norms_sq, mu)`` where ``norms_sq[i] = |b*_i|^2`` and
    ``mu[i][j]`` (j < i) are the projection coefficients; ``mu[i][j]`` is 0
    for j >= i.
    """
    check_int_matrix(basis)
    g = _IntegralGSO(columns(basis)).full()
    n = g.n
    norms = [Fraction(g.d[i + 1], g.d[i]) for i in range(n)]
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i):
            mu[i][j] = Fraction(g.lam[i][j], g.d[j + 1])
    return norms, mu


def is_lll_reduced(basis: Sequence[Sequence[int]], delta=Fraction(3, 4)) -> bool:
    delta = as_delta(delta)
    check_int_matrix(basis, square=True)
    norms, mu = gram_schmidt_exact(basis)
    n = len(norms)
    half = Fraction(1, 2)
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > half:
                return False
    for i in range(n - 1):
        if delta * norms[i] > norms[i + 1] + mu[i + 1][i] ** 2 * norms[i]:
            return False
    return True


def exact_determinant(basis: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix by fraction-free elimination."""
    a = [list(r) for r in check_int_matrix(basis, square=True)]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


def _ceil_sqrt(x: Fraction) -> int:
    m = -(-x.numerator // x.denominator)
    r = math.isqrt(m)
    return r if r * r >= m else r + 1


def default_coeff_bound(basis: Sequence[Sequence[int]]) -> int:
    """Box radius guaranteed to contain a shortest vector's coefficients.

    If v = B c is a shortest vector then c_i = <row_i(B^-1), v>, hence
    |c_i| <= |row_i(B^-1)| * min_j |b_j|.
    """
    rows = check_int_matrix(basis, square=True)
    n = len(rows)
    inv = _rational_inverse(rows)
    cols = columns(rows)
    shortest_sq = min(_dot(c, c) for c in cols)
    worst_sq = max(sum(x * x for x in inv[i]) for i in range(n))
    return max(1, _ceil_sqrt(worst_sq * shortest_sq))


def _rational_inverse(rows: List[List[int]]) -> List[List[Fraction]]:
    n = len(rows)
    a = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            raise SingularBasisError("basis columns are linearly dependent")
        a[c], a[piv] = a[piv], a[c]
        inv_p = 1 / a[c][c]
        a[c] = [x * inv_p for x in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [r[n:] for r in a]


def shortest_vector_bruteforce(basis: Sequence[Sequence[int]], coeff_bound: Optional[int] = None) -> List[int]:
    """Shortest nonzero lattice vector by exhaustive enumeration.

    Explores every coefficient vector c with ``max|c_i| <= coeff_bound``
    whose partial Gram-Schmidt norm can still beat the incumbent; the
    pruning is exact (rational), so the answer is the true minimum over
    the box. Refuses dimensions above ``BRUTEFORCE_MAX_DIM``.
    """
    rows = check_int_matrix(basis, square=True)
    n = len(rows)
    if n > BRUTEFORCE_MAX_DIM:
        raise LatticeError(f"brute-force SVP refused for n={n} > {BRUTEFORCE_MAX_DIM}")
    if coeff_bound is None:
        coeff_bound = default_coeff_bound(rows)
    if coeff_bound < 1:
        raise LatticeError("coeff_bound must be a positive integer")
    cols = columns(rows)
    norms, mu = gram_schmidt_exact(rows)

    best_idx = min(range(n), key=lambda j: _dot(cols[j], cols[j]))
    best_sq = _dot(cols[best_idx], cols[best_idx])
    best_c = [int(j == best_idx) for j in range(n)]
    c = [0] * n

    # Depth-first over c_{n-1}, ..., c_0. At level i the centre is
    # -sum_{k>i} mu[k][i] c_k and the partial norm adds norms[i]*(c_i-centre)^2.
    def visit(i: int, partial: Fraction) -> None:
        nonlocal best_sq, best_c
        centre = -sum((mu[k][i] * c[k] for k in range(i + 1, n)), Fraction(0))
        room = best_sq - partial
        if room < 0:
            return
        # (c_i - centre)^2 <= room / norms[i]
        span = room / norms[i]
        r = _ceil_sqrt(span)
        lo = max(-coeff_bound, math.floor(centre - r))
        hi = min(coeff_bound, math.ceil(centre + r))
        for ci in range(lo, hi + 1):
            diff = ci - centre
            nxt = partial + norms[i] * diff * diff
            if nxt > best_sq:
                continue
            c[i] = ci
            if i == 0:
                if any(c):
                    v = [sum(cols[j][t] * c[j] for j in range(n)) for t in range(n)]
                    sq = _dot(v, v)
                    if sq < best_sq:
                        best_sq, best_c = sq, list(c)
            else:
                visit(i - 1, nxt)
        c[i] = 0

    visit(n - 1, Fraction(0))
    return [sum(cols[j][t] * best_c[j] for j in range(n)) for t in range(n)]


def euclid_gcd_vec(values: Sequence[int]) -> int:
    """gcd of the absolute values; 0 iff every entry is 0."""
    return reduce(math.gcd, (abs(int(v)) for v in values), 0)
