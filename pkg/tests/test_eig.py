import numpy as np
import pytest
from scipy.linalg import eigh

from paw1d.eig import smallest_generalized
from paw1d.exceptions import NotPositiveDefinite


def test_diagonal_problem():
    result = smallest_generalized(np.diag([3.0, 1.0, 2.0]), np.eye(3))
    assert result.eigenvalue == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(np.abs(result.vector), [0.0, 1.0, 0.0], atol=1e-14)
    assert result.within_bound


def test_two_by_two_generalized_problem():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    B = np.array([[2.0, 0.0], [0.0, 1.0]])
    # det(A − λB) = 2λ² − 6λ + 3
    expected = (3 - np.sqrt(3)) / 2
    result = smallest_generalized(A, B)
    assert result.eigenvalue == pytest.approx(expected, rel=1e-14)
    x = result.vector
    assert np.real(np.vdot(x, B @ x)) == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_allclose(A @ x, expected * (B @ x), atol=1e-13)


def test_indefinite_overlap_reports_pivot():
    B = np.diag([1.0, -1.0, 1.0])
    with pytest.raises(NotPositiveDefinite) as info:
        smallest_generalized(np.eye(3), B)
    assert info.value.pivot == 2


def _random_hermitian_pair(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Y = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = (X + X.conj().T) / 2
    B = Y @ Y.conj().T + n * np.eye(n)
    return A, B


def test_matches_dense_generalized_solver():
    A, B = _random_hermitian_pair(40, seed=7)
    result = smallest_generalized(A, B)
    assert result.eigenvalue == pytest.approx(eigh(A, B, eigvals_only=True)[0], rel=1e-10, abs=1e-12)
    assert result.residual <= result.residual_bound


def test_phase_is_fixed_and_result_reproducible():
    A, B = _random_hermitian_pair(25, seed=3)
    first = smallest_generalized(A, B)
    second = smallest_generalized(A.copy(), B.copy())
    pivot = np.argmax(np.abs(first.vector))
    assert abs(first.vector[pivot].imag) <= 1e-15 * abs(first.vector[pivot])
    assert first.vector[pivot].real > 0
    np.testing.assert_array_equal(first.vector, second.vector)
    assert first.eigenvalue == second.eigenvalue


def test_eigenvalue_bounds_every_rayleigh_quotient():
    A, B = _random_hermitian_pair(30, seed=11)
    result = smallest_generalized(A, B)
    rng = np.random.default_rng(5)
    tolerance = 1e-10 * (np.abs(A).max() + abs(result.eigenvalue) * np.abs(B).max())
    for _ in range(100):
        x = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        quotient = np.real(np.vdot(x, A @ x)) / np.real(np.vdot(x, B @ x))
        assert result.eigenvalue <= quotient + tolerance
