import math

import numpy as np
import pytest

from paw1d.pawgen import PawSetup, legendre_like_basis
from paw1d.quad import (FunctionEvaluator, Partition, gauss_legendre, integrate, nodes_and_weights,
                        oscillation_width)


def test_unit_interval_measure():
    assert integrate(lambda x: np.ones_like(x), Partition(0.0, 1.0)) == pytest.approx(1.0, abs=1e-15)


def test_first_pseudo_basis_polynomial_integral():
    eta = 0.1
    P1 = legendre_like_basis(2)[1]
    value = integrate(lambda y: P1(y / eta), Partition(-eta, eta))
    assert value == pytest.approx(-2 * eta / 3, abs=1e-15)


def test_exact_for_polynomials_up_to_degree_2n_minus_1():
    value = integrate(lambda x: x ** 127, Partition(0.0, 1.0), nodes_per_piece=64)
    assert value == pytest.approx(1 / 128, rel=1e-13)


def test_cutoff_window_integral_is_refinement_stable():
    setup = PawSetup(eta=0.1)
    coarse = integrate(setup.rho_eta, setup.window_partition(), 64)
    fine = integrate(setup.rho_eta, setup.window_partition(), 128)
    assert abs(coarse - fine) <= 1e-12 * abs(fine)


def test_partition_sorts_and_deduplicates_kinks():
    partition = Partition(0.0, 1.0, (0.5, 0.2, 0.5, 0.0, 1.0, 1.7))
    assert partition.kinks == (0.2, 0.5)
    assert partition.pieces == [(0.0, 0.2), (0.2, 0.5), (0.5, 1.0)]


def test_empty_partition_is_rejected():
    with pytest.raises(ValueError):
        Partition(1.0, 1.0)


def test_refined_panels_respect_width_and_kinks():
    partition = Partition(-0.1, 0.1, (0.0,)).refined(0.025)
    widths = np.diff(partition.breakpoints)
    assert widths.max() <= 0.025 + 1e-15
    assert 0.0 in partition.kinks
    assert len(partition.pieces) == 8


def test_refined_with_infinite_width_keeps_pieces():
    partition = Partition(0.0, 1.0, (0.4,))
    assert partition.refined(math.inf) == partition


def test_nodes_lie_inside_their_pieces():
    partition = Partition(0.0, 1.0, (0.3,))
    x, w = nodes_and_weights(partition, 8)
    assert len(x) == 16
    assert np.all((x[:8] > 0) & (x[:8] < 0.3))
    assert np.all((x[8:] > 0.3) & (x[8:] < 1.0))
    assert w.sum() == pytest.approx(1.0, abs=1e-15)


def test_too_few_nodes_rejected():
    with pytest.raises(ValueError):
        gauss_legendre(1)


def test_gauss_legendre_is_read_only():
    x, w = gauss_legendre(16)
    with pytest.raises(ValueError):
        x[0] = 0.0


@pytest.mark.parametrize("K", [1, 37, 300])
def test_oscillatory_integrand_resolved_with_narrow_panels(K):
    partition = Partition(0.0, 1.0).refined(oscillation_width(K))
    value = integrate(lambda x: np.exp(2j * np.pi * K * x), partition)
    assert abs(value) < 1e-12


def test_point_value_averages_one_sided_limits_at_zero():
    saw = FunctionEvaluator(value_fn=lambda u: np.asarray(u, dtype=float),
                            derivative_fn=lambda u: np.ones_like(np.asarray(u, dtype=float)))
    assert saw.point_value(0.0) == pytest.approx(0.5)
    assert saw.point_value(2.0) == pytest.approx(0.5)
    assert saw.point_value(0.25) == pytest.approx(0.25)
    assert saw(1.25) == pytest.approx(0.25)
