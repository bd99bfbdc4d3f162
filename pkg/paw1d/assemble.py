"""
Plane-wave Galerkin assembly of the operator pairs (A, B).

Every method shares the same basis e_n(x) = exp(2πinx), n = −M..M, and the
same sesquilinear conventions: ⟨f, g⟩ = ∫ conj(f) g, operator forms written
with first derivatives and point terms only. A site correction
Σ_ij p̃_i D_ij ⟨p̃_j, ·⟩ becomes Pᴴ D P with P[i, n] = ⟨p̃_i, e_n⟩.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import toeplitz

from paw1d.exceptions import AssumptionViolated, ConfigError
from paw1d.model import ModelParams
from paw1d.pawgen import PawSetup, PawSite, build_sites

FOURIER_CHUNK = 512


class Method(str, Enum):
    DIRECT = "direct"
    PAW_TRUNC = "paw_trunc"
    PAW_PSEUDO = "paw_pseudo"
    PAW_PSEUDO_ODD = "paw_pseudo_odd"
    VPAW = "vpaw"

    @property
    def needs_setup(self) -> bool:
        return self is not Method.DIRECT


@dataclass(frozen=True)
class PlaneWaveBasis:
    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError(f"M must be at least 1, got {self.M}")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    @property
    def dimension(self) -> int:
        return 2 * self.M + 1

    @property
    def kinetic(self) -> np.ndarray:
        return (2 * np.pi * self.indices) ** 2


@dataclass(eq=False)
class GalerkinSystem:
    A: np.ndarray
    B: np.ndarray
    method: Method
    M: int
    params: ModelParams
    setup: Optional[PawSetup] = None

    @property
    def dimension(self) -> int:
        return self.A.shape[0]

    def hermiticity_defect(self) -> float:
        return float(max(np.max(np.abs(self.A - self.A.conj().T)), np.max(np.abs(self.B - self.B.conj().T))))

    def header(self) -> str:
        eta, N, d = (self.setup.eta, self.setup.N, self.setup.d) if self.setup else (float("nan"), 0, 0)
        return f"method, M, eta, N, d\n{self.method.value}, {self.M}, {eta!r}, {N}, {d}"

    def dump(self, path):
        """Write A and B to `.npz` (binary) or any other suffix (text, blocks A.real, A.imag, B.real, B.imag)."""
        path = Path(path)
        if path.suffix == ".npz":
            np.savez(path, A=self.A, B=self.B, method=self.method.value, M=self.M,
                     eta=self.setup.eta if self.setup else np.nan,
                     N=self.setup.N if self.setup else 0, d=self.setup.d if self.setup else 0)
        else:
            blocks = np.vstack([self.A.real, self.A.imag, self.B.real, self.B.imag])
            np.savetxt(path, blocks, fmt="%.17g",
                       header=f"{self.header()}\nblocks: A.real, A.imag, B.real, B.imag")
        logging.info(f"Wrote {self.method.value} system (dimension {self.dimension}) to {path}")


@dataclass(eq=False)
class SiteCorrection:
    """Low-rank correction Pᴴ D_H P (operator) and Pᴴ D_S P (overlap) of one site."""
    position: float
    P: np.ndarray
    D_H: np.ndarray
    D_S: np.ndarray
    asymmetry: float = 0.0
    label: str = ""

    def apply(self, A: np.ndarray, B: np.ndarray):
        PH = self.P.conj().T
        A += PH @ (self.D_H @ self.P)
        if np.any(self.D_S):
            B += PH @ (self.D_S @ self.P)


def _fourier(values: np.ndarray, x: np.ndarray, w: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Σ_q w_q values[:, q] exp(2πik x_q) for every k in `indices`, in node chunks."""
    values = np.atleast_2d(values)
    out = np.zeros((values.shape[0], len(indices)), dtype=complex)
    for start in range(0, len(x), FOURIER_CHUNK):
        chunk = slice(start, start + FOURIER_CHUNK)
        phases = np.exp(2j * np.pi * np.outer(x[chunk], indices))
        out += (values[:, chunk] * w[chunk]) @ phases
    return out


def projector_fourier(projector_values: Callable[[np.ndarray], np.ndarray], position: float,
                      setup: PawSetup, basis: PlaneWaveBasis) -> np.ndarray:
    """P[i, n] = ⟨p̃_i, e_n⟩ for window-supported real projectors around `position`."""
    y, w = setup.window_nodes(max_frequency=basis.M)
    logging.debug(f"Projector Fourier coefficients at site {position:g}: {len(y)} nodes, M={basis.M}")
    return _fourier(projector_values(y), position + y, w, basis.indices)


def _symmetrized(D: np.ndarray) -> Tuple[np.ndarray, float]:
    return (D + D.T) / 2, float(np.max(np.abs(D - D.T)))


def _window_tables(site: PawSite, y: np.ndarray):
    phi = np.array([p.atomic.window_value(y) for p in site.pseudos])
    dphi = np.array([p.atomic.window_derivative(y) for p in site.pseudos])
    tphi = np.array([p.value(y) for p in site.pseudos])
    dtphi = np.array([p.derivative(y) for p in site.pseudos])
    return phi, dphi, tphi, dtphi


def _site_values(site: PawSite) -> Tuple[np.ndarray, np.ndarray]:
    """φ_i(0) and φ̃_i(0)."""
    phi0 = np.array([p.atomic.window_value(0.0) for p in site.pseudos], dtype=float)
    tphi0 = np.array([p.polynomial(0.0) for p in site.pseudos], dtype=float)
    return phi0, tphi0


def site_correction_trunc(site: PawSite, basis: PlaneWaveBasis, form: str = "symmetric") -> SiteCorrection:
    """
    D_H = h_η(φ_i, φ_j) − h_η(φ̃_i, φ̃_j) with h_η(u, v) = ∫ u'v' − Z u(0)v(0) over the window,
    D_S = ⟨φ_i, φ_j⟩_η − ⟨φ̃_i, φ̃_j⟩_η.

    form="distributional" computes D_H as ε_j⟨φ_i, φ_j⟩_η − ∫ φ̃_i(−φ̃_j'') + Z φ̃_i(0)φ̃_j(0)
    instead; its asymmetry measures how well the boundary terms at ±η cancel.
    """
    setup = site.setup
    y, w = setup.window_nodes()
    phi, dphi, tphi, dtphi = _window_tables(site, y)
    phi0, tphi0 = _site_values(site)

    overlap = (phi * w) @ phi.T - (tphi * w) @ tphi.T
    if form == "symmetric":
        operator = ((dphi * w) @ dphi.T - site.Z * np.outer(phi0, phi0)
                    - (dtphi * w) @ dtphi.T + site.Z * np.outer(tphi0, tphi0))
    elif form == "distributional":
        energies = np.array([p.atomic.energy for p in site.pseudos])
        curvature = np.array([p.second_derivative(y) for p in site.pseudos])
        operator = (((phi * w) @ phi.T) * energies[None, :]
                    + (tphi * w) @ curvature.T + site.Z * np.outer(tphi0, tphi0))
    else:
        raise ConfigError(f"form must be 'symmetric' or 'distributional', got {form!r}")

    D_H, asymmetry = _symmetrized(operator)
    D_S, _ = _symmetrized(overlap)
    logging.debug(f"Truncated correction at site {site.position:g} ({form}): asymmetry {asymmetry:.2e}")
    P = projector_fourier(site.projectors.value, site.position, setup, basis)
    return SiteCorrection(position=site.position, P=P, D_H=D_H, D_S=D_S, asymmetry=asymmetry,
                          label=f"trunc_{form}")


def site_correction_pseudo(site: PawSite, basis: PlaneWaveBasis) -> SiteCorrection:
    """Like the truncated correction, with ⟨φ̃_i, H_ps φ̃_j⟩_η = ∫ φ̃_i'φ̃_j' − Z ∫ χ_ε φ̃_i φ̃_j."""
    setup = site.setup
    y, w = setup.window_nodes()
    phi, dphi, tphi, dtphi = _window_tables(site, y)
    phi0, _ = _site_values(site)
    chi = setup.chi_epsilon(y)

    operator = ((dphi * w) @ dphi.T - site.Z * np.outer(phi0, phi0)
                - (dtphi * w) @ dtphi.T + site.Z * (tphi * (w * chi)) @ tphi.T)
    overlap = (phi * w) @ phi.T - (tphi * w) @ tphi.T
    D_H, asymmetry = _symmetrized(operator)
    D_S, _ = _symmetrized(overlap)
    P = projector_fourier(site.projectors.value, site.position, setup, basis)
    return SiteCorrection(position=site.position, P=P, D_H=D_H, D_S=D_S, asymmetry=asymmetry,
                          label="pseudo")


def site_correction_odd(site: PawSite, basis: PlaneWaveBasis) -> SiteCorrection:
    """Q[k, n] = ⟨q̃_k, e_n⟩ with D_odd(i, j) = Z ∫ χ_ε θ̃_i θ̃_j; the overlap is untouched."""
    if site.odd is None:
        raise ConfigError(f"Site {site.position:g} was built without odd functions")
    setup = site.setup
    y, w = setup.window_nodes()
    theta = site.odd.theta(y)
    D_odd, asymmetry = _symmetrized(site.Z * (theta * (w * setup.chi_epsilon(y))) @ theta.T)
    Q = projector_fourier(site.odd.value, site.position, setup, basis)
    return SiteCorrection(position=site.position, P=Q, D_H=D_odd, D_S=np.zeros_like(D_odd),
                          asymmetry=asymmetry, label="odd")


def _hermitian(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def add_site_corrections(base: GalerkinSystem, corrections: Sequence[SiteCorrection], method: Method,
                         setup: Optional[PawSetup] = None) -> GalerkinSystem:
    """A = base.A + Σ Pᴴ D_H P, B = base.B + Σ Pᴴ D_S P."""
    A, B = base.A.copy(), base.B.copy()
    for correction in corrections:
        correction.apply(A, B)
    return GalerkinSystem(A=_hermitian(A), B=_hermitian(B), method=method, M=base.M,
                          params=base.params, setup=setup or base.setup)


def assemble_H(params: ModelParams, M: int) -> GalerkinSystem:
    """A_mn = (2πn)² δ_mn − Σ_I Z_I exp(2πi(n − m)s_I), B = Id."""
    basis = PlaneWaveBasis(M)
    A = np.diag(basis.kinetic).astype(complex)
    for position, Z in params.sites:
        u = np.exp(2j * np.pi * basis.indices * position)
        A -= Z * np.outer(u.conj(), u)
    logging.debug(f"Assembled direct system of dimension {basis.dimension}")
    return GalerkinSystem(A=_hermitian(A), B=np.eye(basis.dimension, dtype=complex),
                          method=Method.DIRECT, M=M, params=params)


def pseudopotential_coefficients(params: ModelParams, setup: PawSetup, M: int) -> np.ndarray:
    """ĉ(k) = Σ_I ∫ −Z_I χ_ε(x − s_I) exp(2πikx) dx for k = 0..2M."""
    y, w = setup.window_nodes(max_frequency=2 * M)
    frequencies = np.arange(0, 2 * M + 1)
    coefficients = np.zeros(len(frequencies), dtype=complex)
    for position, Z in params.sites:
        coefficients += _fourier(-Z * setup.chi_epsilon(y), position + y, w, frequencies)[0]
    return coefficients


def assemble_H_ps(params: ModelParams, setup: PawSetup, M: int) -> GalerkinSystem:
    """−d²/dx² − Σ_I Z_I χ_ε(· − s_I): kinetic diagonal plus the Toeplitz matrix ĉ(n − m)."""
    basis = PlaneWaveBasis(M)
    c = pseudopotential_coefficients(params, setup, M)
    A = toeplitz(c.conj(), c) + np.diag(basis.kinetic)
    return GalerkinSystem(A=_hermitian(A), B=np.eye(basis.dimension, dtype=complex),
                          method=Method.PAW_PSEUDO, M=M, params=params, setup=setup)


def assemble_paw_trunc(params: ModelParams, sites: Sequence[PawSite], M: int) -> GalerkinSystem:
    basis = PlaneWaveBasis(M)
    corrections = [site_correction_trunc(site, basis) for site in sites]
    return add_site_corrections(assemble_H(params, M), corrections, Method.PAW_TRUNC, _setup_of(sites))


def assemble_paw_pseudo(params: ModelParams, sites: Sequence[PawSite], M: int) -> GalerkinSystem:
    setup = _setup_of(sites)
    basis = PlaneWaveBasis(M)
    corrections = [site_correction_pseudo(site, basis) for site in sites]
    return add_site_corrections(assemble_H_ps(params, setup, M), corrections, Method.PAW_PSEUDO, setup)


def assemble_paw_pseudo_odd(params: ModelParams, sites: Sequence[PawSite], M: int) -> GalerkinSystem:
    setup = _setup_of(sites)
    basis = PlaneWaveBasis(M)
    corrections = [site_correction_pseudo(site, basis) for site in sites]
    corrections += [site_correction_odd(site, basis) for site in sites]
    return add_site_corrections(assemble_H_ps(params, setup, M), corrections, Method.PAW_PSEUDO_ODD, setup)


def atomic_projector_overlap(site: PawSite) -> np.ndarray:
    """⟨p̃_j, φ_k⟩ over the window; invertible in the regime where the VPAW map is."""
    y, w = site.setup.window_nodes()
    phi = np.array([p.atomic.window_value(y) for p in site.pseudos])
    return (site.projectors.value(y) * w) @ phi.T


def check_vpaw_assumption(site: PawSite) -> float:
    overlap = atomic_projector_overlap(site)
    cond = float(np.linalg.cond(overlap))
    if not cond <= site.setup.cond_limit:
        raise AssumptionViolated(
            f"⟨p̃_j, φ_k⟩ is numerically singular at eta={site.setup.eta}: cond={cond:.3e}",
            eta=site.setup.eta, cond=cond)
    return cond


def assemble_vpaw(params: ModelParams, sites: Sequence[PawSite], M: int) -> GalerkinSystem:
    """
    (Id + T)* H (Id + T) and (Id + T)*(Id + T) with T = Σ_I Σ_i g_i ⟨p̃_i, ·⟩, g_i = φ_i − φ̃_i.

    With R[i, n] = h(g_i, e_n), L[i, n] = ⟨g_i, e_n⟩, K = h(g_i, g_j), K_S = ⟨g_i, g_j⟩ per site:
    A = A_H + Σ_I (Rᴴ P + Pᴴ R + Pᴴ K P), B = Id + Σ_I (Lᴴ P + Pᴴ L + Pᴴ K_S P).
    Distinct sites do not interact since their windows are disjoint.
    """
    base = assemble_H(params, M)
    if not sites:
        return GalerkinSystem(A=base.A, B=base.B, method=Method.VPAW, M=M, params=params)
    setup = _setup_of(sites)
    basis = PlaneWaveBasis(M)
    A, B = base.A.copy(), base.B.copy()
    for site in sites:
        check_vpaw_assumption(site)
        y, w = setup.window_nodes(max_frequency=M)
        g = np.array([p.difference(y) for p in site.pseudos])
        dg = np.array([p.difference_derivative(y) for p in site.pseudos])
        g0 = np.array([p.atomic.window_value(0.0) - p.polynomial(0.0) for p in site.pseudos], dtype=float)

        x = site.position + y
        L = _fourier(g, x, w, basis.indices)
        R = (_fourier(dg, x, w, basis.indices) * (2j * np.pi * basis.indices)[None, :]
             - site.Z * np.outer(g0, np.exp(2j * np.pi * basis.indices * site.position)))
        K = (dg * w) @ dg.T - site.Z * np.outer(g0, g0)
        K_S = (g * w) @ g.T
        P = projector_fourier(site.projectors.value, site.position, setup, basis)
        PH = P.conj().T

        cross = R.conj().T @ P
        A += cross + cross.conj().T + PH @ (_symmetrized(K)[0] @ P)
        cross = L.conj().T @ P
        B += cross + cross.conj().T + PH @ (_symmetrized(K_S)[0] @ P)
    logging.debug(f"Assembled VPAW system of dimension {basis.dimension} for {len(sites)} sites")
    return GalerkinSystem(A=_hermitian(A), B=_hermitian(B), method=Method.VPAW, M=M, params=params, setup=setup)


def _setup_of(sites: Sequence[PawSite]) -> Optional[PawSetup]:
    return sites[0].setup if sites else None


def assemble(method: Method, params: ModelParams, setup: Optional[PawSetup], M: int) -> GalerkinSystem:
    """Build the sites `method` needs and assemble its system."""
    method = Method(method)
    if method is Method.DIRECT:
        return assemble_H(params, M)
    if setup is None:
        raise ConfigError(f"Method {method.value} needs a PAW setup")
    sites = build_sites(params, setup, with_odd=method is Method.PAW_PSEUDO_ODD)
    builders = {
        Method.PAW_TRUNC: assemble_paw_trunc,
        Method.PAW_PSEUDO: assemble_paw_pseudo,
        Method.PAW_PSEUDO_ODD: assemble_paw_pseudo_odd,
        Method.VPAW: assemble_vpaw,
    }
    return builders[method](params, sites, M)
