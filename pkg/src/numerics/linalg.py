"""Dense linear algebra used as ground truth for the matrix-free code paths."""

from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from src.config import settings
from src.errors import FactorizationError, InvalidArgumentError, SizeLimitError
from src.numerics.arrays import Matrix, Vector


def as_vector(values, n: Optional[int] = None) -> Vector:
    """Validate `values` as a finite 1-D float64 vector (of length n if given)."""
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim == 0:
        vector = vector.reshape(1)
    if vector.ndim != 1:
        raise InvalidArgumentError(f"expected a 1-D vector, got shape {vector.shape}")
    if n is not None and vector.shape[0] != n:
        raise InvalidArgumentError(f"expected length {n}, got {vector.shape[0]}")
    if not np.all(np.isfinite(vector)):
        raise InvalidArgumentError("vector has non-finite entries")
    return vector


def as_sym_matrix(values) -> Matrix:
    """Validate a square finite matrix and return (M + M^T) / 2.

    The average is exactly symmetric in floating point because addition
    commutes, so `out[i, j] == out[j, i]` holds bit for bit.
    """
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim == 0:
        matrix = matrix.reshape(1, 1)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidArgumentError("matrix has non-finite entries")
    return 0.5 * (matrix + matrix.T)


def check_dense_size(n: int, what: str = "dense oracle") -> None:
    if n > settings.MAX_DENSE_DIM:
        raise SizeLimitError(
            f"{what} limited to N <= {settings.MAX_DENSE_DIM}, got N = {n}"
        )


def dense_sym_eigh(m) -> Tuple[Vector, Matrix]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns `(eigenvalues, eigenvectors)` with eigenvectors as orthonormal
    columns. LAPACK's symmetric driver meets the residual contract
    ||M u - lambda u|| <= 1e-8 (1 + ||M||_2) with a wide margin.
    """
    matrix = as_sym_matrix(m)
    check_dense_size(matrix.shape[0])
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    # eigh sorts ascending
    return eigenvalues[::-1].copy(), eigenvectors[:, ::-1].copy()


def solve_spd(m, b) -> Vector:
    """Solve M x = b for symmetric positive definite M via Cholesky."""
    matrix = as_sym_matrix(m)
    rhs = np.asarray(b, dtype=np.float64)
    if rhs.shape[0] != matrix.shape[0]:
        raise InvalidArgumentError(
            f"rhs length {rhs.shape[0]} does not match matrix size {matrix.shape[0]}"
        )
    factor, info = lapack.dpotrf(matrix, lower=1, clean=1)
    if info > 0:
        # LAPACK reports the order of the failing leading minor (1-based)
        raise FactorizationError(pivot=info - 1)
    if info < 0:
        raise InvalidArgumentError(f"dpotrf rejected argument {-info}")
    return scipy.linalg.cho_solve((factor, True), rhs)


def spectral_norm(m) -> float:
    """||M||_2 of a symmetric matrix from its dense eigenvalues."""
    eigenvalues, _ = dense_sym_eigh(m)
    return float(np.max(np.abs(eigenvalues)))


def orthonormality_error(u: Matrix) -> float:
    """||U^T U - I||_F for a matrix of column vectors."""
    gram = u.T @ u
    return float(np.linalg.norm(gram - np.eye(gram.shape[0])))


def projector_distance(u: Matrix, v: Matrix) -> float:
    """||U U^T - V V^T||_F, the basis-independent distance between two spans."""
    return float(np.linalg.norm(u @ u.T - v @ v.T))


def gaussian_quartic_moment(b, sigma: float) -> float:
    """E[(z^T B z)^2] for z ~ N(0, sigma^2 I): 2 sigma^4 Tr(B^2) + sigma^4 Tr(B)^2."""
    matrix = as_sym_matrix(b)
    trace = float(np.trace(matrix))
    trace_sq = float(np.sum(matrix * matrix))
    return sigma**4 * (2.0 * trace_sq + trace * trace)
