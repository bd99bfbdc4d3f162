"""Smallest eigenpair of a dense Hermitian-definite problem A x = λ B x."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh, get_lapack_funcs, solve_triangular

from paw1d.exceptions import NoConvergence, NotPositiveDefinite

RESIDUAL_SCALE = 1e-8


@dataclass(eq=False)
class EigResult:
    """λ, the B-normalized eigenvector and ‖Ax − λBx‖ / ‖x‖."""
    eigenvalue: float
    vector: np.ndarray
    residual: float
    residual_bound: float

    @property
    def within_bound(self) -> bool:
        return self.residual <= self.residual_bound


def _cholesky_lower(B: np.ndarray) -> np.ndarray:
    potrf, = get_lapack_funcs(("potrf",), (B,))
    L, info = potrf(B, lower=True, clean=True, overwrite_a=False)
    if info > 0:
        raise NotPositiveDefinite(f"Overlap matrix is not positive definite (leading minor {info})", pivot=int(info))
    if info < 0:
        raise ValueError(f"Illegal argument {-info} passed to potrf")
    return L


def smallest_generalized(A: np.ndarray, B: np.ndarray) -> EigResult:
    """
    Reduce with the Cholesky factor B = L Lᴴ, solve the standard Hermitian problem
    L⁻¹ A L⁻ᴴ y = λ y for its lowest eigenpair and back-transform x = L⁻ᴴ y.

    The reported eigenvalue is the Rayleigh quotient of x, and x is scaled so
    that xᴴBx = 1 with its largest-magnitude entry real and positive.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    L = _cholesky_lower(B)
    half = solve_triangular(L, A, lower=True)
    C = solve_triangular(L, half.conj().T, lower=True)
    C = (C + C.conj().T) / 2
    try:
        _, vectors = eigh(C, subset_by_index=[0, 0])
    except LinAlgError as e:
        raise NoConvergence(f"Hermitian eigensolver failed: {e}")

    x = solve_triangular(L.conj().T, vectors[:, 0], lower=False)
    x = x / np.sqrt(np.real(np.vdot(x, B @ x)))
    pivot = np.argmax(np.abs(x))
    x = x * (np.abs(x[pivot]) / x[pivot])

    Ax, Bx = A @ x, B @ x
    eigenvalue = float(np.real(np.vdot(x, Ax)) / np.real(np.vdot(x, Bx)))
    residual = float(np.linalg.norm(Ax - eigenvalue * Bx) / np.linalg.norm(x))
    bound = RESIDUAL_SCALE * (np.max(np.abs(A)) + abs(eigenvalue) * np.max(np.abs(B)))
    if residual > bound:
        logging.warning(f"Eigen-residual {residual:.3e} exceeds {bound:.3e} (λ={eigenvalue:.12g})")
    return EigResult(eigenvalue=eigenvalue, vector=x, residual=residual, residual_bound=float(bound))
