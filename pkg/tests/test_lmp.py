import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wc4dvar.errors import NumericalError
from wc4dvar.krylov import RitzPairs
from wc4dvar.lmp import (build_general_lmp_dense, build_ritz_lmp_dense, build_spectral_lmp,
                         dense_spectral_lmp, identity_factor)


def unit_cluster_spd(n, rank, rng):
    """I + W W^T with W of the given rank: n - rank unit eigenvalues."""
    W = rng.standard_normal((n, rank)) * rng.uniform(0.5, 5.0, rank)
    A = np.eye(n) + W @ W.T
    return 0.5 * (A + A.T)


def top_pairs(A, k):
    w, V = np.linalg.eigh(A)
    return RitzPairs(V[:, ::-1][:, :k].copy(), w[::-1][:k].copy())


def test_identity_factor():
    C = identity_factor(5)
    v = np.arange(5.0)
    np.testing.assert_array_equal(C.apply(v), v)
    np.testing.assert_array_equal(C.apply_T(v), v)
    assert C.k == 0


def test_factor_squares_to_spectral_lmp():
    rng = np.random.default_rng(0)
    A = unit_cluster_spd(30, 8, rng)
    pairs = top_pairs(A, 6)
    C = build_spectral_lmp(pairs).dense()
    np.testing.assert_allclose(C @ C.T, dense_spectral_lmp(pairs.vectors, pairs.values),
                               atol=1e-13)


def test_apply_T_is_transpose():
    rng = np.random.default_rng(1)
    Q, _ = np.linalg.qr(rng.standard_normal((20, 4)))
    C = build_spectral_lmp(RitzPairs(Q, [9.0, 4.0, 2.0, 0.5]))
    M = C.dense()
    V = rng.standard_normal((20, 3))
    np.testing.assert_allclose(C.apply_T(V), M.T @ V, atol=1e-14)
    np.testing.assert_allclose(C.apply(V[:, 0]), M @ V[:, 0], atol=1e-14)


def test_exact_pairs_map_to_unit_eigenvalues():
    rng = np.random.default_rng(2)
    A = unit_cluster_spd(40, 10, rng)
    k = 7
    C = build_spectral_lmp(top_pairs(A, k)).dense()
    w = np.linalg.eigvalsh(C.T @ A @ C)
    wa = np.linalg.eigvalsh(A)
    # deflated directions land exactly on one, the rest are untouched
    assert np.sum(np.abs(w - 1) <= 1e-8) == 40 - 10 + k
    np.testing.assert_allclose(np.sort(w)[-3:], wa[-10:-7], rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 12))
def test_theorem_property(seed, k):
    rng = np.random.default_rng(seed)
    n, rank = 60, 15
    A = unit_cluster_spd(n, rank, rng)
    wa = np.linalg.eigvalsh(A)
    P = dense_spectral_lmp(*(lambda p: (p.vectors, p.values))(top_pairs(A, k)))
    w = np.sort(np.real(np.linalg.eigvals(P @ A)))
    assert np.sum(np.abs(w - 1) <= 1e-8) >= k
    assert w[0] >= wa[0] - 1e-8 and w[-1] <= wa[-1] + 1e-8


def test_general_form_full_rank_is_inverse():
    rng = np.random.default_rng(3)
    A = unit_cluster_spd(25, 25, rng)
    S = rng.standard_normal((25, 25))
    P = build_general_lmp_dense(S, A)
    np.testing.assert_allclose(P, np.linalg.inv(A), atol=1e-9)


def test_general_form_with_eigenvectors_is_spectral_lmp():
    rng = np.random.default_rng(4)
    A = unit_cluster_spd(20, 6, rng)
    p = top_pairs(A, 4)
    P_gen = build_general_lmp_dense(p.vectors, A)
    np.testing.assert_allclose(P_gen, dense_spectral_lmp(p.vectors, p.values), atol=1e-10)
    np.testing.assert_allclose(build_ritz_lmp_dense(p.vectors, p.values, A), P_gen, atol=1e-10)


def test_general_form_rank_deficient():
    A = np.eye(4)
    S = np.ones((4, 2))
    with pytest.raises(NumericalError):
        build_general_lmp_dense(S, A)


def test_build_rejects_bad_pairs():
    with pytest.raises(NumericalError):
        build_spectral_lmp(RitzPairs(np.eye(3)[:, :1], [0.0]))
    with pytest.raises(ValueError):
        build_spectral_lmp(RitzPairs(np.ones((3, 2)), [2.0, 1.0]))


def test_ritz_value_below_one_accepted():
    Q = np.eye(4)[:, :1]
    C = build_spectral_lmp(RitzPairs(Q, [0.25]))
    # 1 - 1/sqrt(0.25) = -1 scales the first coordinate by 2
    np.testing.assert_allclose(C.apply(np.ones(4)), [2, 1, 1, 1])


def test_dimension_check():
    C = build_spectral_lmp(RitzPairs(np.eye(3)[:, :1], [4.0]))
    with pytest.raises(ValueError):
        C.apply(np.ones(4))
