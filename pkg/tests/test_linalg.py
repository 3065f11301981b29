import numpy as np
import pytest
import scipy.linalg

from beurling import linalg


def _sorted(v):
    return np.array(sorted(v, key=lambda z: (round(z.real, 8), round(z.imag, 8))))


def test_spectrum_examples():
    spec = linalg.spectrum([[2, -6], [3, -7]])
    np.testing.assert_allclose([l for l, _ in spec], [-4, -1], atol=1e-12)
    assert [m for _, m in spec] == [1, 1]
    assert [(l, m) for l, m in linalg.spectrum(np.eye(3))] == [(1, 3)]
    assert [(l, m) for l, m in linalg.spectrum(np.eye(3) + np.eye(3, k=1))] == [(1, 3)]


@pytest.mark.parametrize("n", [1, 2, 5, 16, 40, 64])
def test_eigenvalues_match_numpy(n):
    rng = np.random.default_rng(42 + n)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    ours = _sorted(linalg.eigenvalues_qr(a))
    ref = _sorted(np.linalg.eigvals(a))
    np.testing.assert_allclose(ours, ref, atol=1e-10 * max(1, np.abs(a).max() * n))


def test_real_matrix_with_complex_pairs():
    a = np.array([[0.0, -1.0], [1.0, 0.0]])
    np.testing.assert_allclose(_sorted(linalg.eigenvalues_qr(a)), _sorted([-1j, 1j]), atol=1e-14)


def test_rejects_oversized_and_bad_input():
    with pytest.raises(ValueError):
        linalg.spectrum(np.eye(65))
    with pytest.raises(ValueError):
        linalg.spectrum(np.ones((2, 3)))
    with pytest.raises(ValueError):
        linalg.spectrum([[np.nan]])


def test_cluster_merges_close_values():
    out = linalg.cluster([1.0, 1.0 + 1e-12, 2.0], 1e-8)
    assert [m for _, m in out] == [2, 1]


@pytest.mark.parametrize("t", [-1000.0, -3.0, 0.0, 0.5, 7.0, 1000.0])
def test_expm_matches_scipy(t):
    a = 2j * np.eye(3) + np.eye(3, k=1)
    np.testing.assert_allclose(linalg.expm(t * a), scipy.linalg.expm(t * a), rtol=1e-11, atol=1e-11)


def test_expm_random_against_scipy():
    rng = np.random.default_rng(42)
    for _ in range(10):
        a = rng.standard_normal((4, 4)) * 3
        np.testing.assert_allclose(linalg.expm(a), scipy.linalg.expm(a), rtol=1e-10)


def test_expm_overflow():
    with pytest.raises(OverflowError):
        linalg.expm(np.array([[1000.0]]))
