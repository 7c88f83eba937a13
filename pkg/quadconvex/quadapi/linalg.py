"""Dense linear algebra over real symmetric and complex Hermitian matrices.

All rank and kernel decisions are driven by explicit relative thresholds, an
eigenvalue counts as zero when |lambda| <= tol * max(1, |lambda_max|).
"""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError, NotPositiveDefiniteError

_LOGGER: logging.Logger = logging.getLogger(__name__)

DEFAULT_RANK_TOL: float = 1e-8
HERMITIAN_TOL: float = 1e-9
# Vectors shorter than this fraction of the longest one count as zero
ZERO_VECTOR_TOL: float = 1e-14


@dataclass(frozen=True)
class EigDecomposition:
    """Spectral decomposition with ascending eigenvalues and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def lambda_min(self) -> float:
        """Smallest eigenvalue."""
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        """Largest eigenvalue."""
        return float(self.eigenvalues[-1])

    @property
    def scale(self) -> float:
        """Reference magnitude max(1, |lambda|_max) for relative thresholds."""
        return max(1.0, float(np.max(np.abs(self.eigenvalues), initial=0.0)))

    def zero_mask(self, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
        """Return a mask of the eigenvalues counted as zero."""
        return np.abs(self.eigenvalues) <= tol * self.scale

    def reconstruct(self) -> np.ndarray:
        """Return V diag(lambda) V*."""
        vecs = self.eigenvectors
        return (vecs * self.eigenvalues) @ vecs.conj().T


def _square(matrix) -> np.ndarray:
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"Expected a square matrix, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.complexfloating):
        arr = arr.astype(float)
    return arr


def hermitian_deviation(matrix) -> float:
    """Return max |M - M*| relative to max(1, max |M|)."""
    arr = _square(matrix)
    if arr.size == 0:
        return 0.0
    return float(np.max(np.abs(arr - arr.conj().T))) / max(1.0, float(np.max(np.abs(arr))))


def hermitian(matrix, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return the hermitian part (M + M*)/2 of a matrix that deviates at most tol from it."""
    arr = _square(matrix)
    deviation = hermitian_deviation(arr)
    if deviation > tol:
        raise InvalidInputError(
            f"Matrix is not hermitian, deviation {deviation:.3e} exceeds {tol:.1e}"
        )
    return (arr + arr.conj().T) / 2


def hermitian_eig(matrix, tol: float = HERMITIAN_TOL) -> EigDecomposition:
    """Return the full spectral decomposition of a hermitian matrix, eigenvalues ascending."""
    values, vectors = np.linalg.eigh(hermitian(matrix, tol))
    return EigDecomposition(eigenvalues=values, eigenvectors=vectors)


def rank_and_kernel(matrix, tol: float = DEFAULT_RANK_TOL) -> tuple[int, np.ndarray]:
    """Return the numerical rank and an orthonormal kernel basis (as columns)."""
    eig = hermitian_eig(matrix)
    zero = eig.zero_mask(tol)
    return int(np.count_nonzero(~zero)), eig.eigenvectors[:, zero]


def pseudo_inverse(matrix, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Return the Moore-Penrose pseudo-inverse by inverting the non-zero eigenvalues."""
    return spectral_pseudo_inverse(hermitian_eig(matrix), tol)


def spectral_pseudo_inverse(eig: EigDecomposition, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Return the pseudo-inverse from an existing decomposition."""
    keep = ~eig.zero_mask(tol)
    vecs = eig.eigenvectors[:, keep]
    return (vecs / eig.eigenvalues[keep]) @ vecs.conj().T


def factor_posdef(matrix, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Return the hermitian square root Lambda with Lambda* Lambda = A."""
    eig = hermitian_eig(matrix)
    if eig.lambda_min <= tol * eig.scale:
        raise NotPositiveDefiniteError(
            f"Smallest eigenvalue {eig.lambda_min:.3e} is not positive"
        )
    vecs = eig.eigenvectors
    return (vecs * np.sqrt(eig.eigenvalues)) @ vecs.conj().T


def generalized_lambda_min(matrix, factor: np.ndarray) -> float:
    """Return the smallest lambda making M - lambda * Lambda*Lambda singular, for hermitian positive definite Lambda."""
    inv = np.linalg.inv(factor)
    return hermitian_eig(inv @ np.asarray(matrix) @ inv, tol=1e-7).lambda_min


def kernel_vector_derivative(
    qinv: np.ndarray, qdot: np.ndarray, x0: np.ndarray
) -> np.ndarray:
    """Return the derivative of the unit kernel vector of a rank n-1 pencil, -Q^+ Qdot x0."""
    return -qinv @ (qdot @ x0)


def pseudo_inverse_derivative(
    qinv: np.ndarray, qdot: np.ndarray, x0: np.ndarray
) -> np.ndarray:
    """Return the derivative of Q^+ for a rank n-1 pencil with kernel vector x0."""
    qinv2 = qinv @ qinv
    return (
        -qinv @ qdot @ qinv
        + np.outer(x0, x0.conj() @ qdot @ qinv2)
        + np.outer(qinv2 @ qdot @ x0, x0.conj())
    )


def _unit_vectors(vectors, drop_zero: bool = False) -> list[np.ndarray] | None:
    """Normalize the vectors, numerically zero ones are dropped or make the result None."""
    arrays = [np.asarray(v, dtype=float).ravel() for v in vectors]
    norms = [float(np.linalg.norm(v)) for v in arrays]
    scale = max(norms, default=0.0)
    units = [v / n for v, n in zip(arrays, norms, strict=True) if n > ZERO_VECTOR_TOL * scale]
    if len(units) < len(arrays) and not drop_zero:
        return None
    return units


def collinearity_defect(*vectors) -> float:
    """Return the largest sine of the angle between the first vector and each other vector.

    Zero vectors are collinear with everything and are left out.
    """
    units = _unit_vectors(vectors, drop_zero=True)
    if not units or len(units) < 2:
        return 0.0
    ref = units[0]
    return max(float(np.linalg.norm(v - np.dot(ref, v) * ref)) for v in units[1:])


def independence_measure(*vectors) -> float:
    """Return the smallest singular value of the stacked unit vectors, 0 when they cannot be independent."""
    units = _unit_vectors(vectors)
    if not units or len(units) > units[0].size:
        return 0.0
    stacked = np.vstack(units)
    gram = stacked @ stacked.T
    return float(np.sqrt(max(0.0, float(np.linalg.eigvalsh(gram)[0]))))


def min_norm_solve(rows: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Return the least-norm least-squares solution of rows @ x = rhs."""
    solution, *_ = np.linalg.lstsq(np.asarray(rows, dtype=float), np.asarray(rhs, dtype=float), rcond=None)
    return solution


def unit(vector) -> np.ndarray:
    """Return the vector scaled to unit length."""
    arr = np.asarray(vector)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise InvalidInputError("Zero vector cannot be normalized")
    return arr / norm
