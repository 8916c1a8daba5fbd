import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wc4dvar.covariance import (CovarianceSpec, build_covariance, build_laplacian_corr, build_soar,
                                chordal_distance, cyclic_distance, periodic_second_difference,
                                sample_noise, sym_sqrt)
from wc4dvar.errors import NotPositiveDefiniteError


def test_cyclic_distance_wraps():
    d = cyclic_distance(6)
    assert d[0].tolist() == [0, 1, 2, 3, 2, 1]
    np.testing.assert_array_equal(d, d.T)


def test_chordal_distance_close_to_cyclic_for_near_points():
    d, c = chordal_distance(40), cyclic_distance(40)
    assert np.all(d <= c + 1e-12)
    assert d[0, 1] == pytest.approx(1.0, rel=2e-3)
    assert d[0, 20] == pytest.approx(40 / np.pi)


def test_soar_hand_values():
    C = build_soar(CovarianceSpec("soar", 2.0, 8, 0.7, "cyclic"))
    r = 1 / 0.7
    assert C[0, 0] == pytest.approx(4.0)
    assert C[0, 1] == pytest.approx(4.0 * (1 + r) * np.exp(-r))
    assert C[0, 7] == C[0, 1]


@pytest.mark.parametrize("n,L", [(40, 10), (80, 2), (40, 1), (80, 20), (12, 6)])
def test_chordal_soar_is_spd(n, L):
    C = build_covariance(CovarianceSpec("soar", 0.1, n, L))
    np.testing.assert_allclose(C, C.T)
    assert np.linalg.eigvalsh(C)[0] > 0
    np.testing.assert_allclose(C.diagonal(), 0.01)


def test_cyclic_soar_indefinite_at_large_length_scale():
    with pytest.raises(NotPositiveDefiniteError) as info:
        build_soar(CovarianceSpec("soar", 1.0, 40, 10, "cyclic"))
    assert info.value.eigenvalue < 0


def test_periodic_laplacian_is_psd_with_constant_null_space():
    Lap = periodic_second_difference(10)
    w = np.linalg.eigvalsh(Lap)
    assert abs(w[0]) < 1e-12 and w[1] > 0
    np.testing.assert_allclose(Lap @ np.ones(10), 0, atol=1e-14)


def test_laplacian_correlation_unit_diagonal_and_circulant():
    C = build_laplacian_corr(CovarianceSpec("laplacian", 0.3, 20, 2.0))
    np.testing.assert_allclose(C.diagonal(), 0.09)
    np.testing.assert_allclose(C[1], np.roll(C[0], 1), atol=1e-15)
    assert np.linalg.eigvalsh(C)[0] > 0
    # correlation decays away from the diagonal
    assert C[0, 1] < C[0, 0] and C[0, 5] < C[0, 1]


def test_diagonal_covariance():
    np.testing.assert_allclose(build_covariance(CovarianceSpec("diagonal", 0.5, 4)),
                               0.25 * np.eye(4))


@pytest.mark.parametrize("kw", [dict(kind="bogus", sigma=1, n=4, length_scale=1),
                                dict(kind="soar", sigma=0, n=4, length_scale=1),
                                dict(kind="soar", sigma=1, n=4, length_scale=0),
                                dict(kind="soar", sigma=1, n=4, length_scale=1, distance="x")])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        CovarianceSpec(**kw)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.floats(0.1, 8.0), st.sampled_from(["soar", "laplacian"]))
def test_sqrt_factor_roundtrip(n, L, kind):
    C = build_covariance(CovarianceSpec(kind, 0.7, n, L))
    f = sym_sqrt(C)
    np.testing.assert_allclose(f.half, f.half.T)
    scale = np.abs(C).max()
    np.testing.assert_allclose(f.matrix, C, atol=1e-12 * scale)
    cond = f.eigenvalues[-1] / f.eigenvalues[0]
    np.testing.assert_allclose(f.inv_half @ f.half, np.eye(n), atol=1e-13 * cond)


def test_sym_sqrt_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        sym_sqrt(np.diag([1.0, -1.0]))


def test_sym_sqrt_empty():
    assert sym_sqrt(np.zeros((0, 0))).n == 0


def test_sample_noise_moments():
    C = build_covariance(CovarianceSpec("soar", 1.0, 6, 2.0))
    f = sym_sqrt(C)
    rng = np.random.default_rng(11)
    S = np.stack([sample_noise(f, rng) for _ in range(40000)])
    np.testing.assert_allclose(np.cov(S.T), C, atol=0.03)


def test_sample_noise_seeded_reproducible():
    f = sym_sqrt(np.eye(5))
    np.testing.assert_array_equal(sample_noise(f, 3), sample_noise(f, 3))
    np.testing.assert_array_equal(sample_noise(f, 3), np.random.default_rng(3).standard_normal(5))
