"""
Exact spectral data of the two-site operator

    H = -d²/dx² - Z0 Σ_k δ(x - k) - Za Σ_k δ(x - a - k)

on the unit period and of the single-site atomic operator H0 (one Dirac comb of
strength Z). Eigenvalues come from bracketed root finding on the transcendental
characteristic functions, eigenfunctions from the piecewise continuity, jump
and periodicity conditions.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Tuple, Union

import numpy as np
from scipy.linalg import null_space, svd
from scipy.optimize import brentq

from paw1d.exceptions import ConfigError, RootCountMismatch
from paw1d.quad import FunctionEvaluator, Partition, integrate

SCAN_STEP = 1e-3
SCAN_START = 1e-6
POSITIVE_SCAN_LIMIT = 1e4
ROOT_XTOL = 1e-14
ROOT_RTOL = 4 * np.finfo(float).eps
JUMP_RTOL = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """The physical model: sites at `origin` and `origin + a` with strengths Z0, Za."""
    a: float = 0.4
    Z0: float = 10.0
    Za: float = 10.0
    origin: float = 0.0

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise ConfigError(f"a must lie in (0,1), got {self.a}")
        if not self.Z0 > 0:
            raise ConfigError(f"Z0 must be positive, got {self.Z0}")
        if not self.Za > 0:
            raise ConfigError(f"Za must be positive, got {self.Za}")
        if not math.isfinite(self.origin):
            raise ConfigError(f"origin must be finite, got {self.origin}")

    @property
    def sites(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """(position, strength) of both Dirac sites."""
        return ((self.origin, self.Z0), (self.origin + self.a, self.Za))

    @property
    def max_eta(self) -> float:
        """Largest cut-off radius for which the two site windows do not overlap."""
        return min(self.a / 2, (1 - self.a) / 2)


class Branch(str, Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"


class AtomicKind(str, Enum):
    COSH = "cosh"
    COS = "cos"


@dataclass(frozen=True)
class ExactEigenpair:
    """One eigenpair of H.

    `coeffs` are (A1, B1, A2, B2) with ψ = A1 c(ωx) + B1 s(ωx) on [0, a] and
    ψ = A2 c(ωx) + B2 s(ωx) on [a, 1] (c, s = cosh, sinh or cos, sin), x measured
    from the first site. `local_coeffs` is the well-conditioned representation
    the evaluator uses. ψ has unit L² norm.
    """
    omega: float
    energy: float
    branch: Branch
    coeffs: Tuple[float, float, float, float]
    local_coeffs: Tuple[float, float, float, float]
    params: ModelParams
    residual: float


@dataclass(frozen=True)
class AtomicEigenpair:
    """An even eigenpair of H0: φ(u) = cosh(ω(u − ½)) or cos(ω(u − ½)), u = x mod 1."""
    omega: float
    energy: float
    mode: int
    Z: float
    kind: AtomicKind
    residual: float

    def value(self, u):
        phase = self.omega * (np.asarray(u, dtype=float) - 0.5)
        return np.cosh(phase) if self.kind is AtomicKind.COSH else np.cos(phase)

    def derivative(self, u, order: int = 1):
        """order-th derivative in u, valid on the open period (0, 1)."""
        phase = self.omega * (np.asarray(u, dtype=float) - 0.5)
        scale = self.omega ** order
        if self.kind is AtomicKind.COSH:
            return scale * (np.cosh(phase) if order % 2 == 0 else np.sinh(phase))
        return scale * np.cos(phase + order * math.pi / 2)

    def window_value(self, y):
        """φ at signed distance y from the site, |y| ≤ ½."""
        return self.value(np.abs(y))

    def window_derivative(self, y):
        """φ' at signed distance y; averages the one-sided slopes at y = 0."""
        y = np.asarray(y, dtype=float)
        return np.sign(y) * self.derivative(np.abs(y))


@dataclass(frozen=True)
class JumpResiduals:
    continuity_a: float
    periodicity: float
    jump_0: float
    jump_a: float

    def worst(self) -> float:
        return max(self.continuity_a, self.periodicity, self.jump_0, self.jump_a)


def _negative_terms(params: ModelParams, omega):
    """The three terms of the negative-branch characteristic function, divided by cosh ω."""
    omega = np.asarray(omega, dtype=float)
    decay = np.exp(-2 * omega)
    sech = 2 * np.exp(-omega) / (1 + decay)
    skew = abs(1 - 2 * params.a)
    ratio = (np.exp((skew - 1) * omega) + np.exp(-(skew + 1) * omega)) / (1 + decay)
    kinetic = 2 * omega ** 2 * (sech - 1)
    single = (params.Z0 + params.Za) * omega * np.tanh(omega)
    pair = -params.Z0 * params.Za * (1 - ratio) / 2
    return kinetic, single, pair


def _positive_terms(params: ModelParams, omega):
    omega = np.asarray(omega, dtype=float)
    kinetic = 2 * omega ** 2 * (1 - np.cos(omega))
    single = (params.Z0 + params.Za) * omega * np.sin(omega)
    pair = -params.Z0 * params.Za * np.sin(params.a * omega) * np.sin((1 - params.a) * omega)
    return kinetic, single, pair


def characteristic_negative(params: ModelParams, omega):
    """2ω²(1−cosh ω) + (Z0+Za)ω sinh ω − Z0 Za sinh(aω) sinh((1−a)ω); its zeros give E = −ω²."""
    omega = np.asarray(omega, dtype=float)
    return (2 * omega ** 2 * (1 - np.cosh(omega))
            + (params.Z0 + params.Za) * omega * np.sinh(omega)
            - params.Z0 * params.Za * np.sinh(params.a * omega) * np.sinh((1 - params.a) * omega))


def characteristic_positive(params: ModelParams, omega):
    """2ω²(1−cos ω) + (Z0+Za)ω sin ω − Z0 Za sin(aω) sin((1−a)ω); its zeros give E = +ω²."""
    return sum(_positive_terms(params, omega))


def _relative_residual(terms) -> float:
    scale = sum(abs(float(t)) for t in terms)
    return abs(float(sum(terms))) / scale if scale > 0 else 0.0


def _scan_brackets(func: Callable, grid: np.ndarray) -> List[Tuple[float, float]]:
    values = func(grid)
    brackets = []
    for i in np.flatnonzero(values[:-1] * values[1:] <= 0):
        if values[i] == 0 and i > 0:
            # counted already as the right end of the previous bracket
            continue
        brackets.append((float(grid[i]), float(grid[i + 1])))
    return brackets


def _refine(func: Callable, lo: float, hi: float) -> float:
    f_lo, f_hi = float(func(lo)), float(func(hi))
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    return brentq(func, lo, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)


def _piece_basis(branch: Branch, omega: float, length: float, t):
    """Values and slopes of the two local basis functions of a piece of given length."""
    t = np.asarray(t, dtype=float)
    if branch is Branch.NEGATIVE:
        left = np.exp(-omega * t)
        right = np.exp(-omega * (length - t))
        return (left, right), (-omega * left, omega * right)
    c, s = np.cos(omega * t), np.sin(omega * t)
    return (c, s), (-omega * s, omega * c)


def _coefficient_rows(params: ModelParams, branch: Branch, omega: float) -> np.ndarray:
    """Continuity at a, periodicity, jump at a and jump at 0 (last two scaled by 1/ω)."""
    lengths = (params.a, 1 - params.a)

    def row(piece: int, t: float, slope: bool = False) -> np.ndarray:
        values, slopes = _piece_basis(branch, omega, lengths[piece], t)
        entries = np.zeros(4)
        entries[2 * piece:2 * piece + 2] = slopes if slope else values
        return entries

    continuity_a = row(0, lengths[0]) - row(1, 0.0)
    periodicity = row(0, 0.0) - row(1, lengths[1])
    jump_a = (row(1, 0.0, True) - row(0, lengths[0], True) + params.Za * row(0, lengths[0])) / omega
    jump_0 = (row(0, 0.0, True) - row(1, lengths[1], True) + params.Z0 * row(0, 0.0)) / omega
    return np.vstack([continuity_a, periodicity, jump_a, jump_0])


def _solve_local_coefficients(rows: np.ndarray) -> np.ndarray:
    kernel = null_space(rows[:3], rcond=1e-10)
    if kernel.shape[1] == 1:
        return kernel[:, 0]
    logging.debug(f"Continuity system has a {kernel.shape[1]}-dimensional kernel, using all four conditions")
    _, _, vh = svd(rows)
    return vh[-1]


def _evaluate_local(branch: Branch, omega: float, local, a: float, s, slope: bool = False):
    """ψ or ψ' at s ∈ [0, 1] measured from the first site; s = 1 is the left limit at the site."""
    s = np.asarray(s, dtype=float)
    flat = np.atleast_1d(s)
    result = np.empty_like(flat)
    first = flat <= a
    for mask, start, length, coeffs in ((first, 0.0, a, local[:2]), (~first, a, 1 - a, local[2:])):
        values, slopes = _piece_basis(branch, omega, length, flat[mask] - start)
        basis = slopes if slope else values
        result[mask] = coeffs[0] * basis[0] + coeffs[1] * basis[1]
    return result.reshape(s.shape)


def _global_coeffs(branch: Branch, omega: float, local: np.ndarray, a: float) -> Tuple[float, ...]:
    if branch is Branch.NEGATIVE:
        def to_cosh_sinh(alpha, beta, length):
            tail = math.exp(-omega * length)
            return alpha + beta * tail, -alpha + beta * tail
        A1, B1 = to_cosh_sinh(local[0], local[1], a)
        A2s, B2s = to_cosh_sinh(local[2], local[3], 1 - a)
        c, s = math.cosh(omega * a), math.sinh(omega * a)
        return (A1, B1, A2s * c - B2s * s, -A2s * s + B2s * c)
    A1, B1, A2s, B2s = local
    c, s = math.cos(omega * a), math.sin(omega * a)
    return (A1, B1, A2s * c - B2s * s, A2s * s + B2s * c)


def _make_eigenpair(params: ModelParams, branch: Branch, omega: float, residual: float) -> ExactEigenpair:
    local = _solve_local_coefficients(_coefficient_rows(params, branch, omega))
    partition = Partition(0.0, 1.0, (params.a,)).refined(0.05)

    def psi(s):
        return _evaluate_local(branch, omega, local, params.a, s)

    norm = math.sqrt(integrate(lambda s: psi(s) ** 2, partition))
    local = local / norm
    total = integrate(psi, partition) / norm
    # ∫ψ > 0, or ψ at the first site > 0 when ψ integrates to zero
    sign = np.sign(total) if abs(total) > 1e-8 else np.sign(float(psi(0.0)))
    if sign == 0:
        sign = np.sign(local[np.argmax(np.abs(local))])
    local = sign * local
    energy = -omega ** 2 if branch is Branch.NEGATIVE else omega ** 2
    return ExactEigenpair(
        omega=float(omega),
        energy=float(energy),
        branch=branch,
        coeffs=tuple(float(c) for c in _global_coeffs(branch, omega, local, params.a)),
        local_coeffs=tuple(float(c) for c in local),
        params=params,
        residual=residual,
    )


def negative_spectrum(params: ModelParams) -> List[ExactEigenpair]:
    """The two negative eigenpairs of H, sorted so that E0 < E1."""
    omega_max = max(4 * (params.Z0 + params.Za), 50.0)
    grid = np.arange(SCAN_START, omega_max + SCAN_STEP, SCAN_STEP)

    def scaled(omega):
        return sum(_negative_terms(params, omega))

    brackets = _scan_brackets(scaled, grid)
    logging.debug(f"Negative branch brackets for {params}: {brackets}")
    if len(brackets) != 2:
        raise RootCountMismatch(
            f"Expected 2 negative eigenvalues for {params}, found {len(brackets)}",
            expected=2, found=len(brackets))
    pairs = []
    for lo, hi in brackets:
        omega = _refine(scaled, lo, hi)
        pairs.append(_make_eigenpair(params, Branch.NEGATIVE, omega,
                                     _relative_residual(_negative_terms(params, omega))))
    return sorted(pairs, key=lambda p: p.energy)


def _satisfies_all_conditions(pair: ExactEigenpair) -> bool:
    """The local solve drops the jump at 0; a genuine root satisfies it as well."""
    rows = _coefficient_rows(pair.params, pair.branch, pair.omega)
    local = np.array(pair.local_coeffs)
    scale = np.abs(rows[3]).max() * np.abs(local).max()
    return abs(float(rows[3] @ local)) <= JUMP_RTOL * scale


def positive_spectrum(params: ModelParams, count: int) -> List[ExactEigenpair]:
    """The first `count` positive eigenpairs of H in increasing order."""
    if count < 1:
        raise ConfigError(f"count must be at least 1, got {count}")

    def func(omega):
        return characteristic_positive(params, omega)

    omega_max = math.pi * (count + 3)
    pairs: List[ExactEigenpair] = []
    scanned = SCAN_START
    while len(pairs) < count:
        grid = np.arange(scanned, omega_max + SCAN_STEP, SCAN_STEP)
        for lo, hi in _scan_brackets(func, grid):
            omega = _refine(func, lo, hi)
            pair = _make_eigenpair(params, Branch.POSITIVE, omega,
                                   _relative_residual(_positive_terms(params, omega)))
            if not _satisfies_all_conditions(pair):
                logging.warning(f"Discarding spurious positive root ω={omega:.12g} for {params}")
                continue
            pairs.append(pair)
            if len(pairs) == count:
                break
        if len(pairs) < count:
            if omega_max >= POSITIVE_SCAN_LIMIT:
                raise RootCountMismatch(
                    f"Found only {len(pairs)} of {count} positive eigenvalues below ω={omega_max:g}",
                    expected=count, found=len(pairs))
            scanned = float(grid[-1])
            omega_max = min(2 * omega_max, POSITIVE_SCAN_LIMIT)
    logging.debug(f"Positive branch roots for {params}: {[p.omega for p in pairs]}")
    return pairs


def _cosh_condition(Z: float, omega):
    return 2 * omega * np.tanh(omega / 2) - Z


def _cos_condition(Z: float, omega):
    return 2 * omega * np.sin(omega / 2) + Z * np.cos(omega / 2)


def atomic_spectrum(Z: float, N: int) -> List[AtomicEigenpair]:
    """
    The first N even eigenpairs of H0.

    Mode 1 is the cosh mode, 2ω tanh(ω/2) = Z; modes 2..N are cos modes,
    2ω tan(ω/2) = −Z, with exactly one root in each (π(2k+1), 2π(k+1)).
    """
    if not Z > 0:
        raise ConfigError(f"Z must be positive, got {Z}")
    if N < 1:
        raise ConfigError(f"N must be at least 1, got {N}")

    lo, hi = Z / 2, Z
    while _cosh_condition(Z, hi) <= 0:
        hi *= 2
    omega = brentq(lambda w: _cosh_condition(Z, w), lo, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)
    pairs = [AtomicEigenpair(omega=float(omega), energy=float(-omega ** 2), mode=1, Z=Z,
                             kind=AtomicKind.COSH,
                             residual=abs(float(_cosh_condition(Z, omega))) / Z)]

    for k in range(N - 1):
        lo, hi = math.pi * (2 * k + 1), 2 * math.pi * (k + 1)
        f_lo, f_hi = _cos_condition(Z, lo), _cos_condition(Z, hi)
        if f_lo * f_hi > 0:
            raise RootCountMismatch(f"No cos-mode root of H0 in [{lo:g}, {hi:g}] for Z={Z}",
                                    expected=N, found=len(pairs))
        omega = brentq(lambda w: _cos_condition(Z, w), lo, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)
        scale = 2 * omega * abs(math.sin(omega / 2)) + Z * abs(math.cos(omega / 2))
        pairs.append(AtomicEigenpair(omega=float(omega), energy=float(omega ** 2), mode=k + 2, Z=Z,
                                     kind=AtomicKind.COS,
                                     residual=abs(float(_cos_condition(Z, omega))) / scale))
    logging.debug(f"Atomic spectrum Z={Z}: {[p.energy for p in pairs]}")
    return pairs


def jump_residuals(pair: ExactEigenpair) -> JumpResiduals:
    """Absolute defects of continuity at a, periodicity and both derivative jumps."""
    rows = _coefficient_rows(pair.params, pair.branch, pair.omega)
    continuity, periodicity, jump_a, jump_0 = rows @ np.array(pair.local_coeffs)
    return JumpResiduals(continuity_a=abs(float(continuity)), periodicity=abs(float(periodicity)),
                         jump_0=abs(float(jump_0)) * pair.omega, jump_a=abs(float(jump_a)) * pair.omega)


def eigenfunction_evaluator(pair: Union[ExactEigenpair, AtomicEigenpair]) -> FunctionEvaluator:
    """Periodic evaluator of ψ_k (kinks at both sites) or φ_i (kink at 0)."""
    if isinstance(pair, AtomicEigenpair):
        return FunctionEvaluator(value_fn=pair.value, derivative_fn=pair.derivative,
                                 kinks=(0.0,), name=f"phi_{pair.mode}")

    params = pair.params
    local = np.array(pair.local_coeffs)

    def from_first_site(u):
        s = np.asarray(u, dtype=float) - params.origin
        return np.where((s < 0) | (s > 1), np.mod(s, 1.0), s)

    kinks = tuple(sorted({params.origin % 1.0, (params.origin + params.a) % 1.0}))
    return FunctionEvaluator(
        value_fn=lambda u: _evaluate_local(pair.branch, pair.omega, local, params.a, from_first_site(u)),
        derivative_fn=lambda u: _evaluate_local(pair.branch, pair.omega, local, params.a,
                                                from_first_site(u), slope=True),
        kinks=kinks,
        name=f"psi_{pair.branch.value}_{pair.omega:.6g}",
    )
