"""Per-sample curvature matrices Q_i for the quadratic family."""

from abc import ABC, abstractmethod
from typing import Optional, Tuple

import numpy as np

from src.errors import InvalidArgumentError
from src.numerics.arrays import Matrix, Vector
from src.numerics.linalg import as_sym_matrix


class CurvatureOperator(ABC):
    """A symmetric PSD matrix that only needs products and quadratic forms."""

    dimension: int

    @abstractmethod
    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Q x for x of shape (N,) or (N, S)."""

    @abstractmethod
    def quad_rows(self, rows: Matrix) -> Vector:
        """r^T Q r for every row r of an (S, N) matrix."""

    @abstractmethod
    def to_dense(self) -> Matrix:
        pass

    def factor_form(self) -> Optional[Tuple[Matrix, Vector]]:
        """(F, t) with Q = F F^T + diag(t), or None for dense operators."""
        return None


class DenseCurvature(CurvatureOperator):
    def __init__(self, matrix):
        self.matrix = as_sym_matrix(matrix)
        self.dimension = self.matrix.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def quad_rows(self, rows: Matrix) -> Vector:
        return np.einsum("sn,sn->s", rows @ self.matrix, rows)

    def to_dense(self) -> Matrix:
        return self.matrix.copy()


class FactoredCurvature(CurvatureOperator):
    """Q = F F^T + diag(t) with F of shape (N, r); O(N r) storage."""

    def __init__(self, factor, diagonal):
        self.factor = np.asarray(factor, dtype=np.float64)
        self.diagonal = np.asarray(diagonal, dtype=np.float64)
        if self.factor.ndim != 2 or self.factor.shape[0] != self.diagonal.shape[0]:
            raise InvalidArgumentError(
                f"factor {self.factor.shape} and diagonal {self.diagonal.shape} disagree"
            )
        self.dimension = self.diagonal.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        low_rank = self.factor @ (self.factor.T @ x)
        if x.ndim == 1:
            return low_rank + self.diagonal * x
        return low_rank + self.diagonal[:, None] * x

    def quad_rows(self, rows: Matrix) -> Vector:
        projected = rows @ self.factor
        return np.einsum("sr,sr->s", projected, projected) + (rows * rows) @ self.diagonal

    def to_dense(self) -> Matrix:
        return self.factor @ self.factor.T + np.diag(self.diagonal)

    def factor_form(self) -> Optional[Tuple[Matrix, Vector]]:
        return self.factor, self.diagonal
