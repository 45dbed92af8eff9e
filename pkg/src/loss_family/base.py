"""
Loss Family

A growable collection of per-sample losses l_1..l_M over R^N. Empirical
quantities at sample count k always use the first k samples, so the sample
sets are nested. Public sample indices are 1-based.
"""

from abc import ABC, abstractmethod
from typing import Optional, Union

import numpy as np

from src.config import settings
from src.errors import InvalidArgumentError
from src.loss_family.specs import Weights
from src.numerics.arrays import Matrix, Vector
from src.numerics.linalg import as_sym_matrix, as_vector, check_dense_size

WeightsLike = Union[Weights, np.ndarray]


class LossFamily(ABC):
    """
    Base class for loss families.

    Subclasses implement the range-free kernels (`_losses`, `_batch_losses`,
    `_gradient`, `_hvp`) over a half-open sample range [start, stop), 0-based.
    This class owns validation, the 1-based public API and the increment
    identity.
    """

    kind: str = "abstract"

    def __init__(self, dimension: int, max_samples: int):
        if dimension < 1:
            raise InvalidArgumentError(f"dimension must be >= 1, got {dimension}")
        if max_samples < 1:
            raise InvalidArgumentError(f"max_samples must be >= 1, got {max_samples}")
        self._dimension = dimension
        self._max_samples = max_samples

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def max_samples(self) -> int:
        return self._max_samples

    # ========================================================================
    # Kernels
    # ========================================================================

    @abstractmethod
    def _losses(self, w: Vector, stop: int) -> Vector:
        """l_1(w)..l_stop(w)."""

    @abstractmethod
    def _batch_losses(self, points: Matrix, stop: int) -> Matrix:
        """(S, stop) matrix of l_i at every row of `points`."""

    @abstractmethod
    def _gradient(self, w: Vector, start: int, stop: int) -> Vector:
        """Mean gradient over samples [start, stop)."""

    @abstractmethod
    def _hvp(self, w: Vector, v: Vector, start: int, stop: int) -> Vector:
        """Mean Hessian-vector product over samples [start, stop)."""

    def _dense_hessian(self, w: Vector, start: int, stop: int) -> Matrix:
        columns = [
            self._hvp(w, np.eye(self.dimension)[j], start, stop)
            for j in range(self.dimension)
        ]
        return np.column_stack(columns)

    @abstractmethod
    def initial_weights(self) -> Weights:
        """Deterministic starting point for `minimize`."""

    @abstractmethod
    def minimize(
        self,
        k: int,
        init: Optional[WeightsLike] = None,
        tol: Optional[float] = None,
        max_iters: Optional[int] = None,
    ) -> Weights:
        """Minimizer of L_k with the achieved gradient norm in its provenance."""

    # ========================================================================
    # Validation
    # ========================================================================

    def check_sample(self, i: int) -> None:
        if not 1 <= i <= self._max_samples:
            raise InvalidArgumentError(
                f"sample index {i} out of range 1..{self._max_samples}"
            )

    def check_count(self, k: int, extra: int = 0) -> None:
        """Require 1 <= k and k + extra <= max_samples."""
        if k < 1 or k + extra > self._max_samples:
            raise InvalidArgumentError(
                f"sample count k={k} out of range (need 1 <= k and "
                f"k + {extra} <= {self._max_samples})"
            )

    def point(self, w: WeightsLike) -> Vector:
        """Unwrap Weights or an array into a validated length-N vector."""
        values = w.w if isinstance(w, Weights) else w
        return as_vector(values, self._dimension)

    def _direction(self, v) -> Vector:
        direction = as_vector(v, self._dimension)
        if not np.any(direction):
            raise InvalidArgumentError("hvp direction must be non-zero")
        return direction

    # ========================================================================
    # Public API
    # ========================================================================

    def per_sample_loss(self, i: int, w: WeightsLike) -> float:
        self.check_sample(i)
        return float(self._losses(self.point(w), i)[i - 1])

    def empirical_risk(self, k: int, w: WeightsLike) -> float:
        """L_k(w) = (1/k) sum_{i<=k} l_i(w)."""
        self.check_count(k)
        return float(np.mean(self._losses(self.point(w), k)))

    def gradient(self, k: int, w: WeightsLike) -> Vector:
        self.check_count(k)
        return self._gradient(self.point(w), 0, k)

    def sample_gradient(self, i: int, w: WeightsLike) -> Vector:
        self.check_sample(i)
        return self._gradient(self.point(w), i - 1, i)

    def hvp(self, k: int, w: WeightsLike, v) -> Vector:
        """
        H^(k)(w) v without forming the Hessian.

        Raises:
            InvalidArgumentError: If k is out of range or v is zero
        """
        self.check_count(k)
        return self._hvp(self.point(w), self._direction(v), 0, k)

    def sample_hvp(self, i: int, w: WeightsLike, v) -> Vector:
        self.check_sample(i)
        return self._hvp(self.point(w), self._direction(v), i - 1, i)

    def dense_hessian_oracle(self, k: int, w: WeightsLike) -> Matrix:
        """Materialized H^(k)(w), symmetrized; verification only (N <= 512)."""
        self.check_count(k)
        check_dense_size(self._dimension)
        return as_sym_matrix(self._dense_hessian(self.point(w), 0, k))

    def sample_dense_hessian(self, i: int, w: WeightsLike) -> Matrix:
        self.check_sample(i)
        check_dense_size(self._dimension)
        return as_sym_matrix(self._dense_hessian(self.point(w), i - 1, i))

    def increment(self, k: int, w: WeightsLike) -> float:
        """
        L_{k+1}(w) - L_k(w) through the one-sample identity.

        Evaluated as mean_i (l_{k+1}(w) - l_i(w)) / (k + 1), which equals
        (l_{k+1}(w) - L_k(w)) / (k + 1) and never subtracts two nearly equal
        risks. Identical samples give exactly 0.
        """
        self.check_count(k, extra=1)
        losses = self._losses(self.point(w), k + 1)
        return float(np.mean(losses[k] - losses[:k]) / (k + 1))

    def increments(self, k: int, points) -> Vector:
        """Increment identity at every row of an (S, N) matrix of probe points."""
        self.check_count(k, extra=1)
        batch = np.asarray(points, dtype=np.float64)
        if batch.ndim != 2 or batch.shape[1] != self._dimension:
            raise InvalidArgumentError(
                f"probe points must have shape (S, {self._dimension}), got {batch.shape}"
            )
        losses = self._batch_losses(batch, k + 1)
        return np.mean(losses[:, k : k + 1] - losses[:, :k], axis=1) / (k + 1)

    def loss_difference(self, k: int, w0: WeightsLike, delta) -> float:
        """True change L_k(w0 + delta) - L_k(w0)."""
        center = self.point(w0)
        step = as_vector(delta, self._dimension)
        return self.empirical_risk(k, center + step) - self.empirical_risk(k, center)

    def taylor_increment(self, k: int, w0: WeightsLike, delta) -> float:
        """Second-order model g^(k)(w0)^T delta + 1/2 delta^T H^(k)(w0) delta."""
        self.check_count(k)
        center = self.point(w0)
        step = as_vector(delta, self._dimension)
        linear = float(self._gradient(center, 0, k) @ step)
        if not np.any(step):
            return linear
        return linear + 0.5 * float(step @ self._hvp(center, step, 0, k))

    def _minimizer_defaults(self, tol: Optional[float], max_iters: Optional[int]):
        tol = settings.MINIMIZER_TOL if tol is None else tol
        max_iters = settings.MINIMIZER_MAX_ITERS if max_iters is None else max_iters
        if tol <= 0:
            raise InvalidArgumentError(f"tol must be > 0, got {tol}")
        if max_iters < 1:
            raise InvalidArgumentError(f"max_iters must be >= 1, got {max_iters}")
        return tol, max_iters
