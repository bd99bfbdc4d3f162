"""
Generation of the PAW ingredients around one Dirac site.

All functions here are expressed in the site coordinate y = x − site, on the
window [−η, η]:

- pseudo wave functions φ̃_i: even polynomials in t = y/η written in the basis
  P_k(t) = (t² − 1)^k / (2^k k!), matched to the atomic φ_i up to the
  (d−1)-th derivative at |y| = η and equal to φ_i outside the window;
- projectors p̃_i = ρ_η Σ_j (B⁻¹)_ij φ̃_j, dual to the pseudo waves;
- odd functions θ̃_k = sin(2πky) with their dual projectors q̃_k;
- the cut-off profile ρ and the normalized pseudopotential profile χ.

Dual families are never formed from an inverted Gram matrix: each family is
written in a Legendre basis, and only its triangular factor in the
orthonormalized basis is inverted.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import Legendre, Polynomial
from numpy.polynomial.legendre import legvander
from scipy.linalg import qr, solve_triangular

from paw1d.exceptions import ConfigError, IllConditionedGram, SingularMatching
from paw1d.model import AtomicEigenpair, ModelParams, atomic_spectrum
from paw1d.quad import DEFAULT_NODES, FunctionEvaluator, Partition, integrate, nodes_and_weights, oscillation_width

DEFAULT_COND_LIMIT = 1e12


class CutoffKind(str, Enum):
    PROJECTOR_RHO = "projector_rho"
    PSEUDOPOTENTIAL_CHI = "pseudopotential_chi"


RHO_PROFILES = ("bump", "flat_bump")


def _bump(t, power: int):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    gap = np.where(inside, 1 - t ** power, 1.0)
    return np.where(inside, np.exp(-1 / gap), 0.0), np.where(inside, -power * t ** (power - 1) / gap ** 2, 0.0)


_PROFILE_POWERS = {"bump": 2, "flat_bump": 4}


@lru_cache(maxsize=None)
def _profile_mass(profile: str) -> float:
    power = _PROFILE_POWERS[profile]
    return float(integrate(lambda t: _bump(t, power)[0], Partition(-1.0, 1.0, (0.0,)).refined(0.125)))


def cutoff_profile(kind: CutoffKind, profile: str = "bump") -> FunctionEvaluator:
    """
    The bump c·exp(−1/(1−t^p)) on (−1, 1), zero outside.

    χ (PSEUDOPOTENTIAL_CHI) is always the p = 2 bump normalized to unit mass;
    ρ (PROJECTOR_RHO) is unnormalized, p = 2 for "bump" and p = 4 for "flat_bump".
    """
    if kind is CutoffKind.PSEUDOPOTENTIAL_CHI:
        profile = "bump"
    if profile not in _PROFILE_POWERS:
        raise ConfigError(f"rho_profile must be one of {', '.join(RHO_PROFILES)}, got {profile!r}")
    power = _PROFILE_POWERS[profile]
    scale = 1.0 / _profile_mass(profile) if kind is CutoffKind.PSEUDOPOTENTIAL_CHI else 1.0

    def value(t):
        return scale * _bump(t, power)[0]

    def derivative(t):
        v, log_slope = _bump(t, power)
        return scale * v * log_slope

    return FunctionEvaluator(value_fn=value, derivative_fn=derivative, kinks=(-1.0, 1.0),
                             periodic=False, name=f"{kind.value}_{profile}")


@dataclass(frozen=True)
class PawSetup:
    """Method parameters shared by both sites."""
    eta: float = 0.1
    N: int = 2
    d: int = 6
    epsilon: Optional[float] = None
    nodes: int = DEFAULT_NODES
    rho_profile: str = "bump"
    cond_limit: float = DEFAULT_COND_LIMIT

    def __post_init__(self):
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", self.eta)
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.N < 1:
            raise ConfigError(f"N must be at least 1, got {self.N}")
        if self.d < max(self.N, 2):
            raise ConfigError(f"d must be at least max(N, 2) = {max(self.N, 2)}, got {self.d}")
        if not 0 < self.epsilon <= self.eta:
            raise ConfigError(f"epsilon must lie in (0, eta={self.eta}], got {self.epsilon}")
        if self.nodes < 2:
            raise ConfigError(f"nodes must be at least 2, got {self.nodes}")
        if self.rho_profile not in RHO_PROFILES:
            raise ConfigError(f"rho_profile must be one of {', '.join(RHO_PROFILES)}, got {self.rho_profile!r}")
        if not self.cond_limit > 1:
            raise ConfigError(f"cond_limit must exceed 1, got {self.cond_limit}")

    def check_against(self, params: ModelParams):
        if self.eta > params.max_eta:
            raise ConfigError(
                f"eta must not exceed min(a/2, (1-a)/2) = {params.max_eta:g} so the site windows "
                f"do not overlap, got {self.eta}")

    @cached_property
    def rho(self) -> FunctionEvaluator:
        return cutoff_profile(CutoffKind.PROJECTOR_RHO, self.rho_profile)

    @cached_property
    def chi(self) -> FunctionEvaluator:
        return cutoff_profile(CutoffKind.PSEUDOPOTENTIAL_CHI)

    def rho_eta(self, y):
        return self.rho(np.asarray(y, dtype=float) / self.eta)

    def chi_epsilon(self, y):
        """χ_ε(y) = χ(y/ε)/ε, unit mass on [−ε, ε]."""
        return self.chi(np.asarray(y, dtype=float) / self.epsilon) / self.epsilon

    def window_partition(self, max_frequency: float = 0.0) -> Partition:
        """[−η, η] split at the site and at ±ε, in panels narrow enough for exp(2πiKy), K = max_frequency."""
        width = min(self.eta / 4, oscillation_width(max_frequency, self.nodes))
        return Partition(-self.eta, self.eta, (0.0, -self.epsilon, self.epsilon)).refined(width)

    def window_nodes(self, max_frequency: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        return nodes_and_weights(self.window_partition(max_frequency), self.nodes)


@lru_cache(maxsize=None)
def legendre_like_basis(d: int) -> Tuple[Polynomial, ...]:
    """P_k(t) = (t² − 1)^k / (2^k k!), k = 0..d−1."""
    base = Polynomial([-1.0, 0.0, 1.0])
    return tuple(base ** k / (2 ** k * math.factorial(k)) for k in range(d))


def matching_matrix(d: int) -> np.ndarray:
    """M[m, k] = P_k^(m)(1): lower triangular with unit diagonal."""
    basis = legendre_like_basis(d)
    return np.array([[basis[k].deriv(m)(1.0) for k in range(d)] for m in range(d)])


@dataclass(frozen=True, eq=False)
class PseudoWave:
    """φ̃_i: Σ_k poly[k] P_k(y/η) inside the window, the atomic φ_i outside."""
    mode: int
    eta: float
    poly: np.ndarray
    atomic: AtomicEigenpair
    matching_residual: float

    @cached_property
    def polynomial(self) -> Polynomial:
        basis = legendre_like_basis(len(self.poly))
        return sum((c * p for c, p in zip(self.poly, basis)), Polynomial([0.0]))

    @cached_property
    def _slope(self) -> Polynomial:
        return self.polynomial.deriv()

    @cached_property
    def _curvature(self) -> Polynomial:
        return self.polynomial.deriv(2)

    def value(self, y):
        y = np.asarray(y, dtype=float)
        inside = np.abs(y) < self.eta
        return np.where(inside, self.polynomial(y / self.eta), self.atomic.window_value(y))

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        inside = np.abs(y) < self.eta
        return np.where(inside, self._slope(y / self.eta) / self.eta, self.atomic.window_derivative(y))

    def second_derivative(self, y):
        """φ̃'' inside the window."""
        return self._curvature(np.asarray(y, dtype=float) / self.eta) / self.eta ** 2

    def difference(self, y):
        """g = φ − φ̃, supported in the window."""
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) < self.eta, self.atomic.window_value(y) - self.polynomial(y / self.eta), 0.0)

    def difference_derivative(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) < self.eta,
                        self.atomic.window_derivative(y) - self._slope(y / self.eta) / self.eta, 0.0)

    def is_even(self, tol: float = 1e-12) -> bool:
        coef = self.polynomial.coef
        return bool(np.all(np.abs(coef[1::2]) <= tol * max(1.0, np.abs(coef).max())))


def build_pseudo_waves(atomic: List[AtomicEigenpair], setup: PawSetup) -> List[PseudoWave]:
    """Solve the d×d Hermite matching system at t = 1 for each of the first N atomic modes."""
    if len(atomic) < setup.N:
        raise ConfigError(f"Need {setup.N} atomic modes, got {len(atomic)}")
    matrix = matching_matrix(setup.d)
    cond = np.linalg.cond(matrix)
    if not cond <= setup.cond_limit:
        raise SingularMatching(f"Matching system for d={setup.d} has condition number {cond:.3e}", cond=cond)

    pseudos = []
    for pair in atomic[:setup.N]:
        rhs = np.array([setup.eta ** m * pair.derivative(setup.eta, m) for m in range(setup.d)])
        coeffs = solve_triangular(matrix, rhs, lower=True, unit_diagonal=True)
        residual = float(np.max(np.abs(matrix @ coeffs - rhs)) / np.max(np.abs(rhs)))
        logging.debug(f"Pseudo wave mode {pair.mode} at eta={setup.eta}: matching residual {residual:.2e}")
        pseudos.append(PseudoWave(mode=pair.mode, eta=setup.eta, poly=coeffs, atomic=pair,
                                  matching_residual=residual))
    return pseudos


def _check_conditioning(cond: float, setup: PawSetup, what: str) -> float:
    logging.debug(f"{what} family at eta={setup.eta}: triangular factor cond {cond:.3e}")
    if not cond <= setup.cond_limit:
        raise IllConditionedGram(
            f"{what} family is ill-conditioned at eta={setup.eta}: cond={cond:.3e}",
            eta=setup.eta, cond=cond)
    return cond


def _weighted_gram(values: np.ndarray, weight: np.ndarray) -> np.ndarray:
    gram = (values * weight) @ values.T
    return (gram + gram.T) / 2


def _even_basis(t, size: int) -> np.ndarray:
    """L_m(2t² − 1), m < size, as columns: even polynomials of degree 2m in t."""
    t = np.asarray(t, dtype=float)
    return legvander(2 * t ** 2 - 1, size - 1)


def _as_unit_legendre(poly: Polynomial, size: int) -> np.ndarray:
    """Coefficients of poly(u) in L_m(2u − 1), padded to `size`."""
    coef = poly.convert(kind=Legendre, domain=[0.0, 1.0]).coef
    padded = np.zeros(size)
    padded[:len(coef)] = coef
    return padded


def _dual_weights(coeffs: np.ndarray, basis: np.ndarray, weight: np.ndarray, values: np.ndarray,
                  setup: PawSetup, what: str) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Dual family of f_i = Σ_m coeffs[i, m] b_m under ⟨u, v⟩ = ∫ρ_η u v.

    `basis` and `values` hold b_m and f_i at the window nodes, `weight` is ρ_η times
    the quadrature weights. The duals are ρ_η Σ_m dual[i, m] b_m followed by the
    returned refinement matrix. Only the triangular factor of the family in an
    orthonormalized basis is inverted, so the duality defect grows with its
    condition number, the square root of the Gram condition number.
    """
    _, basis_r = qr(np.sqrt(weight)[:, None] * basis, mode="economic")
    q, r = qr(basis_r @ coeffs.T, mode="economic")
    cond = _check_conditioning(float(np.linalg.cond(r)), setup, what)
    dual = solve_triangular(r, solve_triangular(basis_r, q).T)
    # one refinement step against the quadrature inner product
    duality = ((dual @ basis.T) * weight) @ values.T
    return dual, 2 * np.eye(len(coeffs)) - duality, cond


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """
    Dual projectors p̃_i = ρ_η Σ_j (B⁻¹)_ij φ̃_j, zero outside the window.

    Stored as ρ_η(y) Σ_m weights[i, m] L_m(2y²/η² − 1) with Legendre L_m, mixed by `refinement`.
    """
    eta: float
    weights: np.ndarray
    refinement: np.ndarray
    gram: np.ndarray
    cond: float
    pseudos: Tuple[PseudoWave, ...]
    setup: PawSetup

    def __len__(self):
        return len(self.pseudos)

    def value(self, y) -> np.ndarray:
        """Array of shape (N, len(y))."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        basis = _even_basis(y / self.eta, self.weights.shape[1])
        return self.setup.rho_eta(y) * (self.refinement @ (self.weights @ basis.T))

    def duality(self) -> np.ndarray:
        """⟨p̃_i, φ̃_j⟩ by quadrature."""
        y, w = self.setup.window_nodes()
        raw = np.array([p.value(y) for p in self.pseudos])
        return (self.value(y) * w) @ raw.T


def build_projectors(pseudos: List[PseudoWave], setup: PawSetup) -> ProjectorSet:
    y, w = setup.window_nodes()
    raw = np.array([p.value(y) for p in pseudos])
    weight = w * setup.rho_eta(y)
    size = len(pseudos[0].poly)
    # φ̃_i is even: a polynomial of degree d − 1 in u = (y/η)²
    coeffs = np.array([_as_unit_legendre(Polynomial(p.polynomial.coef[::2]), size) for p in pseudos])
    weights, refinement, cond = _dual_weights(coeffs, _even_basis(y / setup.eta, size), weight, raw,
                                              setup, "Projector")
    return ProjectorSet(eta=setup.eta, weights=weights, refinement=refinement, gram=_weighted_gram(raw, weight),
                        cond=cond, pseudos=tuple(pseudos), setup=setup)


def _sines(y, N: int) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return np.sin(2 * np.pi * np.outer(np.arange(1, N + 1), y))


def _sine_scale(eta: float) -> float:
    """s = 2 sin²(πy) at the window edge."""
    return 2 * math.sin(math.pi * eta) ** 2


def _sine_basis(y, N: int, s_max: float) -> np.ndarray:
    """sin(2πy) L_m(2s/s_max − 1), m < N, as columns."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    s = 2 * np.sin(np.pi * y) ** 2
    return np.sin(2 * np.pi * y)[:, None] * legvander(2 * s / s_max - 1, N - 1)


def _sine_coefficients(N: int, s_max: float) -> np.ndarray:
    """
    sin(2πky) = sin(2πy) U_{k−1}(1 − s) with s = 2 sin²(πy) and Chebyshev U;
    row k−1 holds U_{k−1}(1 − s_max u) in L_m(2u − 1), u = s/s_max.
    """
    x = Polynomial([1.0, -s_max])
    previous, current = Polynomial([0.0]), Polynomial([1.0])
    rows = []
    for _ in range(N):
        rows.append(_as_unit_legendre(current, N))
        previous, current = current, 2 * x * current - previous
    return np.array(rows)


@dataclass(frozen=True, eq=False)
class OddSet:
    """θ̃_k(y) = sin(2πky), k = 1..N, with dual projectors q̃_k = ρ_η Σ_j (G⁻¹)_jk θ̃_j."""
    N: int
    gram: np.ndarray
    weights: np.ndarray
    refinement: np.ndarray
    cond: float
    setup: PawSetup

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def theta(self, y) -> np.ndarray:
        return _sines(y, self.N)

    def theta_derivative(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        k = self.frequencies[:, None]
        return 2 * np.pi * k * np.cos(2 * np.pi * k * y[None, :])

    def value(self, y) -> np.ndarray:
        """q̃_k(y), shape (N, len(y))."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        basis = _sine_basis(y, self.N, _sine_scale(self.setup.eta))
        return self.setup.rho_eta(y) * (self.refinement @ (self.weights @ basis.T))

    def duality(self) -> np.ndarray:
        y, w = self.setup.window_nodes()
        return (self.value(y) * w) @ self.theta(y).T


def build_odd_set(setup: PawSetup) -> OddSet:
    y, w = setup.window_nodes()
    theta = _sines(y, setup.N)
    weight = w * setup.rho_eta(y)
    s_max = _sine_scale(setup.eta)
    weights, refinement, cond = _dual_weights(_sine_coefficients(setup.N, s_max), _sine_basis(y, setup.N, s_max),
                                              weight, theta, setup, "Odd")
    return OddSet(N=setup.N, gram=_weighted_gram(theta, weight), weights=weights, refinement=refinement,
                  cond=cond, setup=setup)


@dataclass(frozen=True, eq=False)
class PawSite:
    """Every PAW ingredient attached to one Dirac site."""
    position: float
    Z: float
    setup: PawSetup
    atomic: Tuple[AtomicEigenpair, ...]
    pseudos: Tuple[PseudoWave, ...]
    projectors: ProjectorSet
    odd: Optional[OddSet] = None


def build_sites(params: ModelParams, setup: PawSetup, with_odd: bool = False) -> Tuple[PawSite, ...]:
    """Both sites of `params`; sites sharing a strength share their ingredients."""
    setup.check_against(params)
    by_strength: Dict[float, Tuple] = {}
    sites = []
    for position, Z in params.sites:
        if Z not in by_strength:
            atomic = atomic_spectrum(Z, setup.N)
            pseudos = build_pseudo_waves(atomic, setup)
            projectors = build_projectors(pseudos, setup)
            by_strength[Z] = (tuple(atomic), tuple(pseudos), projectors)
        atomic, pseudos, projectors = by_strength[Z]
        sites.append(PawSite(position=position, Z=Z, setup=setup, atomic=atomic, pseudos=pseudos,
                             projectors=projectors, odd=build_odd_set(setup) if with_odd else None))
    return tuple(sites)
