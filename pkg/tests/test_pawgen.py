import numpy as np
import pytest

from paw1d.exceptions import ConfigError, IllConditionedGram, SingularMatching
from paw1d.model import ModelParams, atomic_spectrum
from paw1d.pawgen import (CutoffKind, PawSetup, _sine_basis, _sine_coefficients, _sine_scale, _sines, build_odd_set,
                          build_projectors, build_pseudo_waves, build_sites,
                          cutoff_profile, legendre_like_basis, matching_matrix)
from paw1d.quad import Partition, integrate
from paw1d.study import DEFAULT_ETA_GRID


def _identity_defect(matrix):
    return float(np.max(np.abs(matrix - np.eye(len(matrix)))))


def test_chi_has_unit_mass_and_compact_support():
    chi = cutoff_profile(CutoffKind.PSEUDOPOTENTIAL_CHI)
    mass = integrate(chi, Partition(-1.0, 1.0, (0.0,)).refined(0.1), 96)
    assert mass == pytest.approx(1.0, rel=1e-12)
    assert chi(np.array([-1.0, 1.0, 1.5])).tolist() == [0.0, 0.0, 0.0]
    t = np.linspace(0.0, 0.99, 34)
    np.testing.assert_allclose(chi(t), chi(-t), rtol=1e-15)


def test_chi_ignores_rho_profile():
    flat = cutoff_profile(CutoffKind.PSEUDOPOTENTIAL_CHI, "flat_bump")
    plain = cutoff_profile(CutoffKind.PSEUDOPOTENTIAL_CHI)
    t = np.linspace(-0.9, 0.9, 7)
    np.testing.assert_array_equal(flat(t), plain(t))


@pytest.mark.parametrize("profile", ["bump", "flat_bump"])
def test_rho_profiles_peak_at_center(profile):
    rho = cutoff_profile(CutoffKind.PROJECTOR_RHO, profile)
    assert float(rho(0.0)) == pytest.approx(np.exp(-1.0))
    assert float(rho(0.5)) < float(rho(0.0))
    assert float(rho(1.0)) == 0.0


def test_unknown_profile_rejected():
    with pytest.raises(ConfigError, match="rho_profile"):
        cutoff_profile(CutoffKind.PROJECTOR_RHO, "box")
    with pytest.raises(ConfigError, match="rho_profile"):
        PawSetup(rho_profile="box")


def test_chi_epsilon_unit_mass():
    setup = PawSetup(eta=0.1, epsilon=0.05)
    assert integrate(setup.chi_epsilon, setup.window_partition(), setup.nodes) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("kwargs", [
    dict(eta=0.0),
    dict(N=0),
    dict(N=3, d=2),
    dict(d=1),
    dict(eta=0.1, epsilon=0.2),
    dict(epsilon=-0.01),
    dict(nodes=1),
    dict(cond_limit=1.0),
])
def test_invalid_setup_rejected(kwargs):
    with pytest.raises(ConfigError):
        PawSetup(**kwargs)


def test_epsilon_defaults_to_eta():
    assert PawSetup(eta=0.07).epsilon == 0.07


def test_eta_limited_by_site_distance(params):
    with pytest.raises(ConfigError, match="overlap"):
        PawSetup(eta=0.25).check_against(params)
    PawSetup(eta=0.2).check_against(params)
    with pytest.raises(ConfigError):
        build_sites(params, PawSetup(eta=0.21))


@pytest.mark.parametrize("K", [0, 50, 400])
def test_window_partition_panels(K):
    setup = PawSetup(eta=0.1, epsilon=0.05)
    partition = setup.window_partition(K)
    assert {0.0, -0.05, 0.05} <= set(partition.kinks)
    width = np.diff(partition.breakpoints).max()
    assert width <= 0.025 + 1e-15
    if K:
        assert width <= setup.nodes / (2 * np.pi * K) + 1e-15


def test_matching_matrix_lower_unit_triangular():
    matrix = matching_matrix(6)
    np.testing.assert_allclose(np.diag(matrix), 1.0)
    assert np.all(np.abs(np.triu(matrix, 1)) < 1e-12)


def test_legendre_like_basis_vanishes_to_order_k():
    for k, poly in enumerate(legendre_like_basis(5)):
        for m in range(k):
            assert abs(poly.deriv(m)(1.0)) < 1e-12
            assert abs(poly.deriv(m)(-1.0)) < 1e-12


def test_pseudo_waves_match_atomic_derivatives(site, setup):
    for pseudo, pair in zip(site.pseudos, site.atomic):
        for m in range(setup.d):
            inside = pseudo.polynomial.deriv(m)(1.0) / setup.eta ** m
            outside = float(pair.derivative(setup.eta, m))
            assert inside == pytest.approx(outside, rel=1e-8, abs=1e-8 * pair.omega ** m)
        assert pseudo.matching_residual <= 1e-10


def test_pseudo_waves_even_smooth_polynomials(site, setup):
    eta = setup.eta
    for pseudo in site.pseudos:
        assert pseudo.is_even()
        assert pseudo.polynomial.degree() <= 2 * setup.d - 2
        for edge in (eta, -eta):
            inner = float(pseudo.value(edge * (1 - 1e-12)))
            outer = float(pseudo.value(edge))
            assert inner == pytest.approx(outer, rel=1e-9)
        assert abs(float(pseudo.derivative(1e-9)) - float(pseudo.derivative(-1e-9))) < 1e-4


def test_pseudo_differences_vanish_outside_window(site, setup):
    y = np.array([-0.3, -setup.eta, setup.eta, 0.45])
    for pseudo in site.pseudos:
        assert np.all(pseudo.difference(y) == 0.0)
        assert np.all(pseudo.difference_derivative(y) == 0.0)
        np.testing.assert_allclose(pseudo.value(y), pseudo.atomic.window_value(y))


def test_atomic_cusp_survives_only_outside_pseudo_waves(site):
    pair = site.atomic[0]
    cusp = float(pair.window_derivative(1e-9)) - float(pair.window_derivative(-1e-9))
    assert cusp == pytest.approx(-site.Z * float(pair.value(0.0)), rel=1e-6)


def test_projectors_are_dual(site):
    assert _identity_defect(site.projectors.duality()) <= 1e-10


def test_single_projector_closed_form(setup):
    single = PawSetup(eta=setup.eta, N=1, d=setup.d)
    pseudos = build_pseudo_waves(atomic_spectrum(10.0, 1), single)
    projectors = build_projectors(pseudos, single)
    mass = integrate(lambda y: single.rho_eta(y) * pseudos[0].value(y) ** 2, single.window_partition(), single.nodes)
    y = np.linspace(-0.09, 0.09, 13)
    np.testing.assert_allclose(projectors.value(y)[0], single.rho_eta(y) * pseudos[0].value(y) / mass, rtol=1e-12)


def test_projectors_supported_in_window(site, setup):
    values = site.projectors.value(np.array([-0.3, -setup.eta - 1e-3, setup.eta + 1e-3, 0.3]))
    assert values.shape == (setup.N, 4)
    assert np.all(values == 0.0)
    assert len(site.projectors) == setup.N


def test_odd_set_duality_and_symmetry(site, setup):
    odd = site.odd
    assert _identity_defect(odd.duality()) <= 1e-10
    y = np.linspace(0.0, 0.099, 12)
    np.testing.assert_allclose(odd.value(-y), -odd.value(y), rtol=1e-13, atol=1e-10)
    assert np.all(odd.theta(0.0) == 0.0)
    np.testing.assert_array_equal(odd.frequencies, [1, 2])


def test_single_odd_projector_closed_form():
    setup = PawSetup(eta=0.1, N=1)
    odd = build_odd_set(setup)
    y = np.linspace(-0.09, 0.09, 9)
    expected = setup.rho_eta(y) * np.sin(2 * np.pi * y) / odd.gram[0, 0]
    np.testing.assert_allclose(odd.value(y)[0], expected, rtol=1e-12, atol=1e-15)


def test_ill_conditioned_gram_reported():
    setup = PawSetup(eta=0.1, N=2, cond_limit=1.5)
    with pytest.raises(IllConditionedGram) as info:
        build_odd_set(setup)
    assert info.value.eta == 0.1
    assert info.value.cond > 1.5


def test_singular_matching_reported():
    setup = PawSetup(eta=0.1, N=2, d=6, cond_limit=1.5)
    with pytest.raises(SingularMatching) as info:
        build_pseudo_waves(atomic_spectrum(10.0, 2), setup)
    assert info.value.cond > 1.5


def test_too_few_atomic_modes_rejected(setup):
    with pytest.raises(ConfigError):
        build_pseudo_waves(atomic_spectrum(10.0, 1), setup)


def test_generation_is_reproducible(params, setup):
    first = build_sites(params, setup)
    second = build_sites(params, setup)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.projectors.weights, b.projectors.weights)
        np.testing.assert_array_equal(a.pseudos[1].poly, b.pseudos[1].poly)


def test_equal_strength_sites_share_ingredients(sites):
    assert sites[0].projectors is sites[1].projectors
    assert [s.position for s in sites] == [0.0, 0.4]


def test_unequal_strength_sites_use_their_own_atoms(setup):
    sites = build_sites(ModelParams(a=0.4, Z0=10.0, Za=20.0), setup)
    assert sites[0].projectors is not sites[1].projectors
    assert sites[1].atomic[0].Z == 20.0
    assert sites[0].odd is None


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("eta", DEFAULT_ETA_GRID)
def test_duality_over_eta_grid(eta, N):
    setup = PawSetup(eta=eta, N=N, d=6)
    projectors = build_projectors(build_pseudo_waves(atomic_spectrum(10.0, N), setup), setup)
    assert _identity_defect(projectors.duality()) <= 1e-10


@pytest.mark.parametrize("eta", [0.2, 0.025])
def test_projector_factor_condition_is_root_of_gram_condition(eta):
    setup = PawSetup(eta=eta, N=3, d=6)
    projectors = build_projectors(build_pseudo_waves(atomic_spectrum(10.0, 3), setup), setup)
    assert projectors.cond ** 2 == pytest.approx(np.linalg.cond(projectors.gram), rel=1e-3)
    np.testing.assert_allclose(projectors.refinement, np.eye(3), atol=1e-8)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_sine_family_matches_chebyshev_representation(N):
    setup = PawSetup(eta=0.05, N=N)
    y = np.linspace(-0.05, 0.05, 21)
    s_max = _sine_scale(setup.eta)
    rebuilt = _sine_coefficients(N, s_max) @ _sine_basis(y, N, s_max).T
    np.testing.assert_allclose(rebuilt, _sines(y, N), atol=1e-14)


def test_projectors_follow_gram_inversion(site, setup):
    # same functions as ρ_η B⁻¹ φ̃, up to the conditioning of B
    y = np.linspace(-0.09, 0.09, 11)
    raw = np.array([p.value(y) for p in site.pseudos])
    expected = setup.rho_eta(y) * np.linalg.solve(site.projectors.gram, raw)
    np.testing.assert_allclose(site.projectors.value(y), expected, rtol=1e-8, atol=1e-8 * np.abs(expected).max())
