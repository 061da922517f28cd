import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cosneuron import ConfigError
from cosneuron.analysis.impossibility import FEASIBLE_MAX_DIM
from cosneuron.analysis import (
    phase_retrieval_feasible_set,
    relation_polynomial,
    relation_polynomial_moments,
    relation_polynomial_variance,
    sign_flip_operator,
    single_flip_eigen_extremes,
    spurious_norm_probe,
)


def test_one_dimensional_feasible_set():
    out = phase_retrieval_feasible_set(np.array([[2.0]]), np.array([abs(2.0 * -1.5)]))
    assert sorted(float(v[0]) for v in out) == [-1.5, 1.5]


def test_three_dimensional_feasible_set():
    rng = np.random.default_rng(90)
    X = rng.standard_normal((3, 3))
    w = rng.standard_normal(3)
    y = np.abs(X @ w)
    out = phase_retrieval_feasible_set(X, y)
    assert len(out) == 8
    for v in out:
        assert np.max(np.abs(np.abs(X @ v) - y)) <= 1e-9
    s = np.sign(X @ w)
    # the sign pattern of <x_i, w> picks out w, the opposite pattern -w
    idx = {eps: i for i, eps in enumerate(itertools.product((1.0, -1.0), repeat=3))}
    assert np.allclose(out[idx[tuple(s)]], w, atol=1e-12)
    assert np.allclose(out[idx[tuple(-s)]], -w, atol=1e-12)


def test_all_ones_pattern_is_identity_branch():
    rng = np.random.default_rng(91)
    X = rng.standard_normal((4, 4))
    w = rng.standard_normal(4)
    # flip rows so every <x_i, w> is positive; then the all-plus pattern is w itself
    X *= np.sign(X @ w)[:, None]
    out = phase_retrieval_feasible_set(X, np.abs(X @ w))
    assert np.allclose(out[0], w, atol=1e-12)
    assert np.allclose(out[-1], -w, atol=1e-12)


def test_feasible_set_guards():
    with pytest.raises(ConfigError):
        phase_retrieval_feasible_set(np.ones((2, 2)), np.ones(2))
    with pytest.raises(ConfigError):
        phase_retrieval_feasible_set(np.ones((2, 3)), np.ones(2))
    n = FEASIBLE_MAX_DIM + 1
    with pytest.raises(ConfigError):
        phase_retrieval_feasible_set(np.eye(n), np.ones(n))


def test_feasible_set_closure():
    rng = np.random.default_rng(92)
    for _ in range(20):
        d = int(rng.integers(2, 7))
        X = rng.standard_normal((d, d))
        w = rng.standard_normal(d)
        y = np.abs(X @ w)
        eps = rng.choice([-1.0, 1.0], size=d)
        A = sign_flip_operator(X, eps)
        for v in phase_retrieval_feasible_set(X, y)[:: max(1, 2 ** d // 8)]:
            assert np.max(np.abs(np.abs(X @ (A @ v)) - y)) <= 1e-8 * max(1, y.max())


def test_eigen_extremes_match_dense_solver():
    rng = np.random.default_rng(93)
    for _ in range(50):
        d = int(rng.integers(2, 9))
        X = rng.standard_normal((d, d))
        eps = np.ones(d)
        eps[0] = -1
        A = sign_flip_operator(X, eps)
        ev = np.linalg.eigvalsh(A.T @ A)
        eta, lo, hi = single_flip_eigen_extremes(X)
        assert eta >= 1 - 1e-12
        assert abs(ev[0] - lo) <= 1e-8 * max(1, hi) and abs(ev[-1] - hi) <= 1e-8 * max(1, hi)


def test_probe_is_positive_in_two_dimensions():
    res = spurious_norm_probe(2, 20_000, np.random.default_rng(94))
    assert res.frequency > 0 and res.ci_low > 0
    assert res.ci_low <= res.frequency <= res.ci_high
    with pytest.raises(ConfigError):
        spurious_norm_probe(2, 10, np.random.default_rng(0))


def test_probe_matches_explicit_loop():
    rng_a = np.random.default_rng(95)
    res = spurious_norm_probe(3, 1000, rng_a, chunk=1000)
    rng_b = np.random.default_rng(95)
    X = rng_b.standard_normal((1000, 3, 3))
    u = rng_b.standard_normal((1000, 3))
    r = rng_b.uniform(1.0, 2.0, size=(1000, 1))
    hits = 0
    for i in range(1000):
        w = u[i] / np.linalg.norm(u[i]) * r[i, 0]
        A = np.linalg.inv(X[i]) @ np.diag([-1.0, 1.0, 1.0]) @ X[i]
        na = np.linalg.norm(A @ w)
        hits += 1 <= na < np.linalg.norm(w)
    assert res.hits == hits


def test_relation_polynomial_variance_small_dimensions():
    rng = np.random.default_rng(96)
    for d in (1, 2, 3, 4):
        w = rng.standard_normal(d)
        w /= np.linalg.norm(w)
        C = rng.integers(-2, 3, size=d + 1)
        Cp = rng.integers(-2, 3, size=d + 1)
        gamma = 1.5
        mean, var, se = relation_polynomial_moments(w, gamma, C, Cp, 400_000, rng)
        target = relation_polynomial_variance(C, Cp, gamma)
        assert abs(var - target) <= 4 * se + 1e-12
        assert abs(mean) <= 4 * math.sqrt(target / 400_000) + 1e-12


def test_relation_polynomial_hand_case():
    # d = 1: P = x2 (g w x1 C1 + C1') - x1 (g w x2 C2 + C2')
    xs = np.array([[[2.0], [3.0]]])
    got = relation_polynomial(xs, [1.0], 1.0, [1, 1], [0, 0])
    assert got[0] == pytest.approx(3 * 2 - 2 * 3)
    got = relation_polynomial(xs, [1.0], 2.0, [1, 0], [0, 1])
    assert got[0] == pytest.approx(3 * (2 * 2) - 2 * 1)
    assert relation_polynomial_variance([1, 0], [0, 1], 2.0) == 4 + 1


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=5), st.floats(0.5, 3))
def test_variance_formula_is_shift_invariant_in_c(C, gamma):
    Cp = [0] * len(C)
    shifted = [c + 7 for c in C]
    assert relation_polynomial_variance(C, Cp, gamma) == relation_polynomial_variance(shifted, Cp, gamma)
