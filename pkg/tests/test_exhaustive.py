import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from cosneuron import ConfigError
from cosneuron.exhaustive import (
    ExhaustiveCosineRecovery,
    cosine_to_phaseless,
    cover_effective_radius,
    default_sample_count,
    exhaustive_search,
    phase_noise,
    random_sphere_cover,
    recover_exhaustive_cosine,
    recover_exhaustive_phaseless,
    required_cover_size,
    score_cover,
    score_direction,
)
from cosneuron.recovery import recovery_error
from cosneuron.sampling import Instance, NoiseModel, cosine_batch, make_instance, mod_one_array, phaseless_clwe_batch


def reference_scores(P, X, z, gamma, thr):
    """Vectorized restatement of the score used to cross-check the compiled kernel."""
    S = gamma * (np.asarray(P) @ np.asarray(X).T)
    a = np.abs(mod_one_array(S - z)) <= thr
    b = np.abs(mod_one_array(S + z)) <= thr
    return (a.astype(int) + b.astype(int)).mean(axis=1)


def test_one_dimensional_cover():
    N = math.ceil(1 + 4 / 0.5)
    assert required_cover_size(1, 0.5) == math.ceil(2 * N * math.log(N)) == 40
    c = random_sphere_cover(1, 0.5, np.random.default_rng(0))
    assert len(c) == 40
    assert set(np.unique(c.points)) == {-1.0, 1.0}
    assert not c.capped


def test_two_dimensional_cover_is_a_cover():
    eps = 0.5
    bad = 0
    rng = np.random.default_rng(1)
    for _ in range(1000):
        c = random_sphere_cover(2, eps, rng)
        bad += cover_effective_radius(c.points) > eps
    assert bad <= 1


def test_exact_radius_matches_probes():
    rng = np.random.default_rng(2)
    c = random_sphere_cover(2, 0.5, rng)
    exact = cover_effective_radius(c.points)
    Q = rng.standard_normal((10_000, 2))
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    probed = np.sqrt(np.maximum(0, 2 - 2 * (Q @ c.points.T).max(axis=1))).max()
    assert probed <= exact + 1e-12
    assert probed >= 0.9 * exact


def _minimal_polygon(eps):
    # smallest regular polygon whose chordal covering radius 2 sin(pi / 2k) is at most eps
    k = 3
    while 2 * math.sin(math.pi / (2 * k)) > eps:
        k += 1
    ang = 2 * np.pi * np.arange(k) / k
    return k, np.column_stack([np.cos(ang), np.sin(ang)])


@pytest.mark.parametrize("eps", [0.9, 0.5])
def test_covering_number_sandwich(eps):
    k, grid = _minimal_polygon(eps)
    assert cover_effective_radius(grid) <= eps + 1e-12
    assert (1 / eps) ** 2 <= k <= (2 / eps + 1) ** 2


@pytest.mark.parametrize("eps", [0.3, 0.2, 0.05, 0.01])
def test_circle_cover_grows_linearly(eps):
    # the circle is one-dimensional, so the minimal cover is about pi / eps,
    # which drops below (1/eps)^2 once eps is small
    k, grid = _minimal_polygon(eps)
    assert cover_effective_radius(grid) <= eps + 1e-12
    assert k <= math.pi / eps + 1 <= (2 / eps + 1) ** 2
    assert k < (1 / eps) ** 2


def test_cover_points_are_unit():
    c = random_sphere_cover(3, 0.3, np.random.default_rng(3), cap=5000)
    assert np.all(np.abs(np.linalg.norm(c.points, axis=1) - 1) <= 2.0 ** -40)
    assert c.capped and len(c) == 5000


def test_cover_refuses_huge_uncapped_request():
    with pytest.raises(ConfigError, match="points"):
        random_sphere_cover(3, 1e-3, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        random_sphere_cover(2, 1.5, np.random.default_rng(0))


def test_score_examples():
    w = np.array([1.0, 0.0])
    X = np.random.default_rng(4).standard_normal((50, 2))
    z = np.abs(mod_one_array(3.0 * X @ w))
    assert score_direction(w, X, z, 3.0, 1e-9) >= 1
    assert score_direction(w, X[:1], np.array([0.0]) + abs(mod_one_array(3.0 * X[:1] @ w)), 3.0, 0.6) == 2.0


def test_random_direction_score_is_flat():
    gamma, beta = 5.0, 1e-3
    tau = phase_noise(beta)
    rng = np.random.default_rng(5)
    w = np.array([1.0, 0.0])
    X = rng.standard_normal((4000, 2))
    z = np.abs(mod_one_array(gamma * X @ w + rng.uniform(-tau, tau, 4000)))
    V = rng.standard_normal((400, 2))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    V = V[np.abs(V @ w) < 0.9]
    s = score_cover(V, X, z, gamma, 3 * tau)
    se = s.std(ddof=1) / math.sqrt(len(s))
    assert abs(s.mean() - 12 * tau) <= 3 * se + 1e-3 * 12 * tau


@given(st.integers(1, 4), st.integers(1, 40), st.floats(0.001, 0.4), st.floats(0.5, 10))
def test_compiled_kernel_matches_reference(d, m, thr, gamma):
    rng = np.random.default_rng(d * 100 + m)
    P = rng.standard_normal((17, d))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    X = rng.standard_normal((m, d))
    z = rng.uniform(0, 0.5, m)
    got = score_cover(P, X, z, gamma, thr)
    ref = reference_scores(P, X, z, gamma, thr)
    # a distance landing within rounding of the threshold may flip; allow one indicator
    assert np.all(np.abs(got - ref) <= 1 / m + 1e-15)
    assert np.all((got >= 0) & (got <= 2))


def test_injected_truth_is_returned():
    rng = np.random.default_rng(6)
    inst = make_instance(2, 4.0, 0.0, rng)
    b = cosine_batch(inst, rng, 200)
    cover = np.vstack([random_sphere_cover(2, 0.5, rng).points, inst.w])
    v = recover_exhaustive_cosine(b, 4.0, 0.0, threshold=1e-9, cover=cover)
    assert np.array_equal(v, inst.w)
    res = exhaustive_search(b.X, cosine_to_phaseless(b.z), 4.0, 0.0, threshold=1e-9, cover=cover)
    # only the matching-sign window fires at the truth; the other needs 2 * phase = 0 mod 1
    assert res.score == 1.0
    assert res.index == len(cover) - 1


def test_single_sample_sign_symmetry():
    rng = np.random.default_rng(7)
    inst = make_instance(3, 2.0, 0.0, rng)
    b = phaseless_clwe_batch(inst, rng, 1)
    v = recover_exhaustive_phaseless(b, 2.0, 1e-3, cover=np.vstack([inst.w, -inst.w]))
    assert np.array_equal(v, inst.w) or np.array_equal(v, -inst.w)


def test_ties_break_to_lowest_index():
    X = np.array([[1.0, 0.0]])
    res = exhaustive_search(X, np.array([0.1]), 1.0, 0.1, cover=np.array([[0.0, 1.0], [0.0, -1.0]]), threshold=0.5)
    assert res.index == 0


@pytest.mark.filterwarnings("ignore:beta exceeds")
def test_superset_cover_never_hurts():
    rng = np.random.default_rng(8)
    inst = make_instance(2, 4.0, 1e-3, rng)
    b = cosine_batch(inst, rng, 500, NoiseModel.uniform(1e-3))
    base = random_sphere_cover(2, 0.05, rng, cap=2000).points
    v0 = recover_exhaustive_cosine(b, 4.0, 1e-3, cover=base)
    v1 = recover_exhaustive_cosine(b, 4.0, 1e-3, cover=np.vstack([base, inst.w]))
    assert recovery_error(v1, inst.w) <= recovery_error(v0, inst.w) + 1e-15


def test_empty_cover_and_bad_threshold():
    X = np.ones((2, 2))
    with pytest.raises(ConfigError):
        exhaustive_search(X, np.zeros(2), 1.0, 0.1, cover=np.zeros((0, 2)))
    with pytest.raises(ConfigError):
        score_direction(np.array([1.0, 0.0]), X, np.zeros(2), 1.0, 0.0)


@pytest.mark.parametrize("tau0", [0.01, 0.1, 0.5])
def test_arccos_lipschitz_transfer(tau0):
    grid = np.linspace(-1, 1, 4001)
    x = grid[:, None]
    y = grid[None, :]
    close = np.abs(x - y) <= tau0 + 1e-15
    sup = np.where(close, np.abs(np.arccos(x) - np.arccos(y)), 0).max()
    assert sup <= math.acos(1 - tau0) + 1e-12


@given(st.lists(st.floats(-1.5, 1.5, allow_nan=False), min_size=1, max_size=20))
def test_cosine_phaseless_round_trip(z):
    z = np.array(z)
    back = np.cos(2 * np.pi * cosine_to_phaseless(z))
    assert np.allclose(back, np.clip(z, -1, 1), atol=1e-12)
    assert np.all((cosine_to_phaseless(z) >= 0) & (cosine_to_phaseless(z) <= 0.5))


def test_parameter_helpers():
    assert phase_noise(0.0) == 0.0
    assert phase_noise(1e-3) == pytest.approx(math.acos(0.999) / (2 * math.pi), rel=1e-15)
    assert default_sample_count(2, 0.01) == math.ceil(128 * math.log(100))
    with pytest.raises(ConfigError):
        phase_noise(-1.0)


def test_guarantee_warning():
    rng = np.random.default_rng(9)
    inst = make_instance(2, 4.0, 0.0, rng)
    b = cosine_batch(inst, rng, 20)
    with pytest.warns(UserWarning):
        recover_exhaustive_cosine(b, 4.0, 0.1, rng=rng, cover_cap=100)
    with pytest.warns(UserWarning):
        recover_exhaustive_phaseless((b.X, cosine_to_phaseless(b.z)), 4.0, 0.01, rng=rng, cover_cap=100)


@pytest.mark.slow
def test_phaseless_recovery_rate():
    d, gamma, beta = 2, 4.0, 0.002
    eps = beta / gamma
    m = default_sample_count(d, eps)
    ok = 0
    for s in range(20):
        rng = np.random.default_rng([31, s])
        inst = make_instance(d, gamma, 0.0, rng)
        b = phaseless_clwe_batch(Instance(inst.w, gamma), rng, m, NoiseModel.uniform(beta))
        v = recover_exhaustive_phaseless(b, gamma, beta, rng=rng, cover_cap=10 ** 6)
        ok += recovery_error(v, inst.w) ** 2 <= 40000 * beta ** 2 / gamma ** 2
    assert ok >= 18


def test_estimator_round_trip():
    rng = np.random.default_rng(10)
    inst = make_instance(2, 3.0, 1e-3, rng)
    b = cosine_batch(inst, rng, 800, NoiseModel.uniform(1e-3))
    est = ExhaustiveCosineRecovery(gamma=3.0, beta=1e-3, cover_cap=20000, random_state=0).fit(b.X, b.z)
    assert recovery_error(est.coef_, inst.w) < 0.05
    Xt = rng.standard_normal((10, 2))
    assert est.predict(Xt).shape == (10,)
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(ConfigError):
        ExhaustiveCosineRecovery(target="other").fit(b.X, b.z)
