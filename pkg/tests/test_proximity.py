import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from ltvadapt import proximity
from ltvadapt.window import DataWindow


def hand_window():
    return DataWindow(kappa=2,
                      Xhat=np.array([[1.0, 0.5]]),
                      X=np.array([[0.5, 0.25]]),
                      U=np.array([[0.0, 0.0]]))


def test_hand_ellipsoid_params():
    par = proximity.ellipsoid_params(hand_window(), np.array([[0.01]]))
    assert np.allclose(par.M, [[1.25, 0.0], [0.0, 0.0]], atol=1e-14)
    assert np.allclose(par.Zc, [[0.5], [0.0]], atol=1e-14)
    # XZ'M+ZX' = 0.3125 cancels XX', leaving Delta = F
    assert np.allclose(par.Delta, [[0.01]], atol=1e-14)


def test_hand_min_inflation():
    # residual of the pair (0.3, 0) has squared norm 0.05, so the bound
    # 0.01 needs inflating by 0.04 in the unit metric
    eps = proximity.min_inflation(hand_window(), np.array([[0.01]]),
                                  np.array([[1.0]]), np.array([[0.3]]),
                                  np.array([[0.0]]))
    assert abs(eps - 0.04) <= 1e-12


def test_nonempty_and_bounded_flags():
    par = proximity.ellipsoid_params(hand_window(), np.array([[0.01]]))
    assert proximity.is_nonempty(par)
    assert not proximity.is_bounded(par)  # rank-deficient Z


def test_dtilde_zero_for_generating_pair():
    w = hand_window()
    # X = 0.5 Xhat exactly, so (0.5, anything with zero input) fits
    d = proximity.dtilde(w, np.array([[0.5]]), np.array([[7.0]]))
    assert np.max(np.abs(d)) <= 1e-15


def test_contains_direct():
    w = hand_window()
    F = np.array([[0.01]])
    assert proximity.contains(w, F, [[0.5]], [[0.0]])
    assert not proximity.contains(w, F, [[0.3]], [[0.0]])


def test_center_is_member():
    par = proximity.ellipsoid_params(hand_window(), np.array([[0.01]]))
    assert proximity.contains_ellipsoid(par, par.Zc)


def test_inflated_loosens_bound():
    w = hand_window()
    F = np.array([[0.01]])
    S = np.array([[1.0]])
    assert not proximity.contains(w, F, [[0.3]], [[0.0]])
    assert proximity.contains(w, proximity.inflated(F, S, 0.04 + 1e-12),
                              [[0.3]], [[0.0]])
    # deflating below the minimal inflation loses the pair
    assert not proximity.contains(w, proximity.inflated(F, S, 0.02),
                                  [[0.3]], [[0.0]])


def _random_full_rank_window(rng, nx=2, nu=1, width=4):
    w = DataWindow.empty(nx, nu, width)
    a = rng.standard_normal((nx, nx)) * 0.4
    b = rng.standard_normal((nx, nu))
    x = rng.standard_normal(nx)
    for _ in range(width):
        u = rng.uniform(-1, 1, nu)
        xn = a @ x + b @ u + 0.01 * rng.standard_normal(nx)
        w = w.push(x, u, xn)
        x = xn
    return w


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_direct_and_ellipsoid_tests_agree(seed):
    rng = np.random.default_rng(seed)
    w = _random_full_rank_window(rng)
    F = 0.05 * np.eye(w.nx)
    par = proximity.ellipsoid_params(w, F)
    for _ in range(40):
        zh = rng.standard_normal((w.nx + w.nu, w.nx))
        if proximity.is_nonempty(par) and rng.uniform() < 0.5:
            zh = proximity.sample_members(par, 1, rng)[0] \
                + 0.02 * rng.standard_normal(zh.shape)
        ma = zh[:w.nx, :].T
        mb = zh[w.nx:, :].T
        assert proximity.contains(w, F, ma, mb) == \
            proximity.contains_ellipsoid(par, zh)


def test_sampled_members_are_members():
    rng = np.random.default_rng(5)
    w = _random_full_rank_window(rng)
    F = 0.05 * np.eye(w.nx)
    par = proximity.ellipsoid_params(w, F)
    for zh in proximity.sample_members(par, 100, rng):
        assert proximity.contains_ellipsoid(par, zh)


def test_membership_quadratic_center():
    par = proximity.ellipsoid_params(hand_window(), np.array([[0.01]]))
    gap = proximity.membership_quadratic(par, par.Zc)
    assert np.allclose(gap, par.Delta)
