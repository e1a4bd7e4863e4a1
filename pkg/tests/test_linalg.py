import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltvadapt import linalg


def rand_sym(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a + a.T) / 2


def test_sym_eig_hand_values():
    # [[2,1],[1,2]] has eigenvalues 1 and 3
    w, v = linalg.sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(w, [1.0, 3.0], atol=1e-12)
    # eigenvector reconstruction
    m = v @ np.diag(w) @ v.T
    assert np.allclose(m, [[2.0, 1.0], [1.0, 2.0]], atol=1e-12)


def test_sym_eig_orders_ascending():
    rng = np.random.default_rng(7)
    for _ in range(25):
        w, _ = linalg.sym_eig(rand_sym(rng, 4))
        assert np.all(np.diff(w) >= -1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10 ** 6))
def test_sym_eig_matches_numpy(n, seed):
    rng = np.random.default_rng(seed)
    m = rand_sym(rng, n, scale=3.0)
    w, v = linalg.sym_eig(m)
    w_np = np.linalg.eigvalsh(m)
    assert np.allclose(w, w_np, atol=1e-9 * (1 + np.max(np.abs(w_np))))
    assert np.allclose(v @ v.T, np.eye(n), atol=1e-10)


def test_pinv_scalar():
    assert np.allclose(linalg.pinv(np.array([[1.25]])), [[0.8]], atol=1e-14)


def test_pinv_rank_deficient():
    m = np.array([[1.0, 0.0], [0.0, 0.0]])
    p = linalg.pinv(m)
    assert np.allclose(p, m, atol=1e-14)
    # Moore-Penrose identities
    assert np.allclose(m @ p @ m, m, atol=1e-12)
    assert np.allclose(p @ m @ p, p, atol=1e-12)


def test_spectral_norm():
    assert abs(linalg.spectral_norm(np.array([[3.0, 0.0], [0.0, -4.0]]))
               - 4.0) < 1e-12


def test_gen_eig_diagonal_oracle():
    a = np.diag([2.0, 1.0])
    b = np.diag([1.0, 4.0])
    assert abs(linalg.gen_eig_max(a, b) - 2.0) < 1e-12
    assert abs(linalg.gen_eig_min(a, b) - 0.25) < 1e-12


def _gen_eig_max_bisection(a, b, lo=-1e3, hi=1e3, iters=200):
    # independent oracle: smallest t with t*b - a psd, by bisection
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.linalg.eigvalsh(mid * b - a)[0] >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_gen_eig_matches_bisection():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = rand_sym(rng, 3)
        base = rng.standard_normal((3, 3))
        b = base @ base.T + 0.5 * np.eye(3)
        got = linalg.gen_eig_max(a, b)
        want = _gen_eig_max_bisection(a, b)
        assert abs(got - want) < 1e-8 * (1 + abs(want))


def test_n_map_block_structure():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = linalg.n_map(m)
    want = np.array([[1.0, 0.0], [3.0, 0.0], [0.0, 2.0], [0.0, 4.0]])
    assert np.array_equal(out, want)


def test_shift_append():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = linalg.shift_append(m, np.array([5.0, 6.0]))
    assert np.array_equal(out, [[2.0, 5.0], [4.0, 6.0]])


def test_pd_checks():
    assert linalg.is_pd(np.eye(2))
    assert not linalg.is_pd(np.diag([1.0, -1.0]))
    assert linalg.is_psd(np.diag([1.0, 0.0]))


def test_pd_inverse_round_trip():
    rng = np.random.default_rng(11)
    base = rng.standard_normal((3, 3))
    s = base @ base.T + np.eye(3)
    assert np.allclose(linalg.pd_inverse(s) @ s, np.eye(3), atol=1e-10)


def test_pd_inverse_rejects_indefinite():
    with pytest.raises(linalg.NotPositiveDefinite):
        linalg.pd_inverse(np.diag([1.0, -2.0]))


def test_as_matrix_validation():
    with pytest.raises(linalg.InvalidInput):
        linalg.as_matrix(np.ones((2, 3)), (2, 2))
    with pytest.raises(linalg.InvalidInput):
        linalg.as_matrix(np.array([[np.nan, 0.0], [0.0, 1.0]]))
