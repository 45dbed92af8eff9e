"""
Quadratic Loss Family

l_i(w) = 1/2 (w - m_i)^T Q_i (w - m_i) + b_i with PSD Q_i. Gradients, Hessians
and the minimizer are exact, so every criterion identity can be checked
without approximation error.
"""

from typing import List, Optional, Sequence

import numpy as np

from src.config import settings
from src.errors import InvalidArgumentError
from src.logging_config import setup_logging
from src.loss_family.base import LossFamily, WeightsLike
from src.loss_family.curvature_ops import (CurvatureOperator, DenseCurvature,
                                           FactoredCurvature)
from src.loss_family.specs import Provenance, QuadraticFamilySpec, Weights
from src.numerics.arrays import Matrix, Vector
from src.numerics.linalg import as_vector, check_dense_size, solve_spd
from src.numerics.rng import RngStream

logger = setup_logging(service_name="loss_family")

REFINEMENT_STEPS = 2

# substream layout of a family seed
_CENTERS, _OFFSETS, _SHARED_BASIS, _SAMPLE_BASE = 0, 1, 2, 16


class QuadraticFamily(LossFamily):
    kind = "quadratic"

    def __init__(
        self,
        centers,
        curvatures: Sequence[CurvatureOperator],
        offsets=None,
        identical_samples: bool = False,
        spec: Optional[QuadraticFamilySpec] = None,
    ):
        centers = np.asarray(centers, dtype=np.float64)
        if centers.ndim != 2:
            raise InvalidArgumentError(f"centers must be (M, N), got {centers.shape}")
        max_samples, dimension = centers.shape
        super().__init__(dimension, max_samples)

        if len(curvatures) != max_samples:
            raise InvalidArgumentError(
                f"got {len(curvatures)} curvatures for {max_samples} centers"
            )
        for operator in curvatures:
            if operator.dimension != dimension:
                raise InvalidArgumentError(
                    f"curvature of size {operator.dimension} in a family of dimension {dimension}"
                )
        if offsets is None:
            offsets = np.zeros(max_samples)
        self._offsets = as_vector(offsets, max_samples)
        if not np.all(np.isfinite(centers)):
            raise InvalidArgumentError("centers have non-finite entries")

        self._centers = centers
        self._curvatures: List[CurvatureOperator] = list(curvatures)
        # every sample equals sample 1; kernels skip the averaging
        self._identical = identical_samples
        self.spec = spec

    # ========================================================================
    # Construction
    # ========================================================================

    @classmethod
    def from_arrays(cls, centers, curvatures, offsets=None) -> "QuadraticFamily":
        """
        Build a family from explicit arrays.

        Args:
            centers: (M, N) sample centers m_i
            curvatures: M symmetric PSD matrices Q_i (list or (M, N, N) array)
            offsets: optional M offsets b_i (zeros if omitted)
        """
        operators = [
            q if isinstance(q, CurvatureOperator) else DenseCurvature(q)
            for q in curvatures
        ]
        return cls(centers, operators, offsets)

    @classmethod
    def from_spec(cls, spec: QuadraticFamilySpec) -> "QuadraticFamily":
        """Draw the ensemble a spec describes; same spec, same family."""
        root = RngStream(spec.seed)
        n, count = spec.dimension, spec.max_samples
        generated = 1 if spec.identical_samples else count

        centers = spec.center_scale * root.substream(_CENTERS).generator().standard_normal(
            (generated, n)
        )
        if spec.offset_law == "alternating":
            offsets = spec.offset_scale * (-1.0) ** np.arange(1, generated + 1)
        else:
            offsets = spec.offset_scale * root.substream(_OFFSETS).generator().standard_normal(
                generated
            )

        shared = None
        if spec.spectrum == "top_heavy" and spec.d_true > 0:
            draw = root.substream(_SHARED_BASIS).generator().standard_normal((n, spec.d_true))
            shared = np.linalg.qr(draw)[0]

        operators = [
            _draw_curvature(spec, root.substream(_SAMPLE_BASE + i), shared)
            for i in range(generated)
        ]
        if spec.identical_samples:
            centers = np.repeat(centers, count, axis=0)
            offsets = np.repeat(offsets, count)
            operators = operators * count

        logger.info(
            f"Built quadratic family: N={n}, M={count}, spectrum={spec.spectrum}, seed={spec.seed}"
        )
        return cls(centers, operators, offsets, spec.identical_samples, spec)

    # ========================================================================
    # Kernels
    # ========================================================================

    def _range(self, start: int, stop: int) -> range:
        return range(start, start + 1) if self._identical else range(start, stop)

    def _losses(self, w: Vector, stop: int) -> Vector:
        residuals = w[None, :] - self._centers[:stop]
        quads = np.array(
            [
                self._curvatures[i].quad_rows(residuals[i : i + 1])[0]
                for i in range(stop)
            ]
        )
        return 0.5 * quads + self._offsets[:stop]

    def _batch_losses(self, points: Matrix, stop: int) -> Matrix:
        if self._identical:
            first = 0.5 * self._curvatures[0].quad_rows(points - self._centers[0])
            return np.repeat((first + self._offsets[0])[:, None], stop, axis=1)
        losses = np.empty((points.shape[0], stop))
        for i in range(stop):
            residuals = points - self._centers[i]
            losses[:, i] = 0.5 * self._curvatures[i].quad_rows(residuals) + self._offsets[i]
        return losses

    def _gradient(self, w: Vector, start: int, stop: int) -> Vector:
        indices = self._range(start, stop)
        total = sum(self._curvatures[i].matvec(w - self._centers[i]) for i in indices)
        return total / len(indices)

    def _hvp(self, w: Vector, v: Vector, start: int, stop: int) -> Vector:
        indices = self._range(start, stop)
        return sum(self._curvatures[i].matvec(v) for i in indices) / len(indices)

    def _dense_hessian(self, w: Vector, start: int, stop: int) -> Matrix:
        indices = self._range(start, stop)
        return sum(self._curvatures[i].to_dense() for i in indices) / len(indices)

    def curvature(self, i: int) -> CurvatureOperator:
        self.check_sample(i)
        return self._curvatures[i - 1]

    def center(self, i: int) -> Vector:
        self.check_sample(i)
        return self._centers[i - 1].copy()

    def offset(self, i: int) -> float:
        self.check_sample(i)
        return float(self._offsets[i - 1])

    # ========================================================================
    # Operations
    # ========================================================================

    def loss_difference(self, k: int, w0: WeightsLike, delta) -> float:
        """
        L_k(w0 + delta) - L_k(w0) from the per-sample residuals.

        Sample i changes by 1/2 delta^T Q_i (r_i + r_i'), with r_i = w0 - m_i
        and r_i' = r_i + delta. No risk is subtracted from another, so small
        steps lose no digits to cancellation.
        """
        self.check_count(k)
        center = self.point(w0)
        step = as_vector(delta, self.dimension)
        indices = self._range(0, k)
        total = 0.0
        for i in indices:
            before = center - self._centers[i]
            total += 0.5 * float(step @ self._curvatures[i].matvec(2.0 * before + step))
        return total / len(indices)

    def initial_weights(self) -> Weights:
        return Weights(np.zeros(self.dimension))

    def minimize(
        self,
        k: int,
        init: Optional[WeightsLike] = None,
        tol: Optional[float] = None,
        max_iters: Optional[int] = None,
    ) -> Weights:
        """
        Exact minimizer of L_k: solves (sum Q_i) w = sum Q_i m_i.

        `init` and `max_iters` are accepted for interface parity and ignored.
        Dense Cholesky for N <= MAX_DENSE_DIM, Woodbury on the stacked factors
        otherwise, followed by iterative refinement.

        Raises:
            FactorizationError: If the summed curvature is not positive definite
        """
        self.check_count(k)
        tol, _ = self._minimizer_defaults(tol, max_iters)
        indices = self._range(0, k)
        operators = [self._curvatures[i] for i in indices]
        rhs = sum(self._curvatures[i].matvec(self._centers[i]) for i in indices)

        if self.dimension <= settings.MAX_DENSE_DIM:
            total = sum(op.to_dense() for op in operators)

            def solve(b):
                return solve_spd(total, b)

            def apply(x):
                return total @ x

        else:
            solve = _woodbury_solver(operators, self.dimension)

            def apply(x):
                return sum(op.matvec(x) for op in operators)

        w = solve(rhs)
        for _ in range(REFINEMENT_STEPS):
            w = w + solve(rhs - apply(w))

        grad_norm = float(np.linalg.norm(self._gradient(w, 0, k)))
        converged = grad_norm <= tol
        if not converged:
            logger.warning(
                f"Quadratic minimizer for k={k} reached ||g||={grad_norm:.3e} > tol={tol:.1e}"
            )
        return Weights(
            w,
            Provenance(kind="minimizer", k=k, grad_norm=grad_norm, converged=converged),
        )


def _draw_curvature(
    spec: QuadraticFamilySpec, stream: RngStream, shared: Optional[Matrix]
) -> CurvatureOperator:
    generator = stream.generator()
    n = spec.dimension

    if spec.spectrum == "isotropic":
        scale = generator.uniform(spec.top_min, spec.top_max)
        return FactoredCurvature(np.zeros((n, 0)), np.full(n, scale + spec.ridge))

    if spec.spectrum == "dense":
        draw = generator.standard_normal((n, n))
        matrix = spec.top_max * (draw @ draw.T) / n + spec.ridge * np.eye(n)
        return DenseCurvature(matrix)

    tail = generator.uniform(spec.tail_min, spec.tail_max, n) + spec.ridge
    if shared is None:
        return FactoredCurvature(np.zeros((n, 0)), tail)

    d_true = shared.shape[1]
    base = np.linspace(spec.top_max, spec.top_min, d_true)
    eigenvalues = base * (1.0 + spec.top_jitter * generator.uniform(-1.0, 1.0, d_true))
    # drift is relative to unit columns
    drift = spec.direction_drift * generator.standard_normal((n, d_true)) / np.sqrt(n)
    directions = np.linalg.qr(shared + drift)[0]
    return FactoredCurvature(directions * np.sqrt(eigenvalues), tail)


def _woodbury_solver(operators: Sequence[CurvatureOperator], n: int):
    """Solver for (diag(T) + F F^T) x = b with T, F stacked over the operators."""
    diagonal = np.zeros(n)
    factors = []
    for operator in operators:
        form = operator.factor_form()
        if form is None:
            # dense curvature leaves no low-rank structure to exploit
            check_dense_size(n, "dense curvature minimizer")
        factor, tail = form
        diagonal += tail
        factors.append(factor)
    stacked = np.hstack(factors)
    scaled = stacked / diagonal[:, None]
    capacitance = np.eye(stacked.shape[1]) + stacked.T @ scaled

    def solve(b: Vector) -> Vector:
        base = b / diagonal
        if stacked.shape[1] == 0:
            return base
        correction = solve_spd(capacitance, stacked.T @ base)
        return base - scaled @ correction

    return solve
