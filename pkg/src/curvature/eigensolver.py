"""
Principal curvature subspace

Deflated, shifted power iteration on Hessian-vector products. The operator is
shifted by mu >= ||H||_2 so that power iteration (which finds the largest
magnitude) returns the algebraically largest eigenvalues, including for
indefinite Hessians.
"""

import time
from typing import List, Optional, Tuple

import numpy as np

from src.curvature.models import EigSolverConfig, SubspaceBasis
from src.curvature.operators import CountingOperator, HvpFn
from src.errors import ConvergenceError, InvalidArgumentError
from src.logging_config import setup_logging
from src.numerics.arrays import Vector
from src.numerics.linalg import as_sym_matrix, dense_sym_eigh
from src.numerics.rng import RngStream

logger = setup_logging(service_name="curvature")

SHIFT_FACTOR = 1.1


def _unit(v: Vector) -> Vector:
    return v / np.linalg.norm(v)


def _orthogonalize(v: Vector, found: List[Vector]) -> Vector:
    # two passes of classical Gram-Schmidt restore orthogonality to rounding
    for _ in range(2):
        for u in found:
            v = v - (u @ v) * u
    return v


def _random_start(rng: RngStream, n: int, found: List[Vector]) -> Vector:
    v = _orthogonalize(rng.generator().standard_normal(n), found)
    return _unit(v)


def _as_counting(hvp_fn, n: int) -> CountingOperator:
    return hvp_fn if isinstance(hvp_fn, CountingOperator) else CountingOperator(hvp_fn, n)


def estimate_shift(operator: CountingOperator, n: int, rng: RngStream, probes: int) -> float:
    """Lower estimate of ||H||_2 from `probes` plain power iterations."""
    v = _unit(rng.generator().standard_normal(n))
    estimate = 0.0
    for _ in range(probes):
        hv = operator(v)
        norm = float(np.linalg.norm(hv))
        estimate = max(estimate, abs(float(v @ hv)), norm)
        if norm == 0.0:
            break
        v = hv / norm
    return estimate


def top_d_eigenpairs(hvp_fn: HvpFn, n: int, cfg: EigSolverConfig) -> SubspaceBasis:
    """
    Extract the top-D eigenpairs (algebraic order) of a symmetric operator.

    Args:
        hvp_fn: v -> H v on R^n; wrapped in a CountingOperator if it is not one
        n: operator dimension
        cfg: solver settings

    Returns:
        SubspaceBasis with certified residuals and the number of HVPs used

    Raises:
        InvalidArgumentError: If D > n
        ConvergenceError: If any pair misses the tolerance within max_iters;
            the error carries the pairs extracted so far and their residuals
    """
    if cfg.D > n:
        raise InvalidArgumentError(f"D = {cfg.D} exceeds the dimension n = {n}")

    operator = _as_counting(hvp_fn, n)
    calls_before = operator.calls
    root = RngStream(cfg.seed)
    started = time.perf_counter()

    estimate = estimate_shift(operator, n, root.substream(0), cfg.shift_probes)
    mu = SHIFT_FACTOR * estimate if estimate > 0 else 1.0

    found: List[Vector] = []
    eigenvalues: List[float] = []
    residuals: List[float] = []
    total_iterations = 0

    for j in range(cfg.D):
        v, iterations, converged = _power_iterate(
            operator, n, mu, found, eigenvalues, cfg, root.substream(j + 1)
        )
        total_iterations += iterations

        # certification with a fresh product
        hv = operator(v)
        value = float(v @ hv)
        residual = float(np.linalg.norm(hv - value * v))
        reference = abs(eigenvalues[0]) if eigenvalues else abs(value)
        found.append(v)
        eigenvalues.append(value)
        residuals.append(residual)

        if not converged or residual > cfg.tol * (1.0 + reference):
            partial = _assemble(
                found[:-1], eigenvalues[:-1], residuals[:-1], total_iterations,
                operator.calls - calls_before, time.perf_counter() - started, cfg.tol,
                certified=False,
            )
            raise ConvergenceError(
                f"eigenpair {j + 1} of {cfg.D} not converged after {iterations} iterations "
                f"(residual {residual:.3e}, tol {cfg.tol:.1e})",
                partial_basis=partial,
                residuals=residuals,
            )
        logger.debug(
            f"eigenpair {j + 1}/{cfg.D}: lambda={value:.6g}, residual={residual:.2e}, "
            f"iterations={iterations}"
        )

    basis = _assemble(
        found, eigenvalues, residuals, total_iterations,
        operator.calls - calls_before, time.perf_counter() - started, cfg.tol,
    )
    logger.info(
        f"Top-{cfg.D} eigenpairs of n={n}: lambda_1={basis.eigenvalues[0]:.6g}, "
        f"max residual={basis.residuals.max():.2e}, hvp calls={basis.hvp_calls}"
    )
    return basis


def _power_iterate(
    operator: CountingOperator,
    n: int,
    mu: float,
    found: List[Vector],
    eigenvalues: List[float],
    cfg: EigSolverConfig,
    rng: RngStream,
) -> Tuple[Vector, int, bool]:
    """Power iteration on H + mu I restricted to the complement of `found`."""
    v = _random_start(rng, n, found)
    previous: Optional[float] = None
    for iteration in range(1, cfg.max_iters + 1):
        hv = operator(v)
        value = float(v @ hv)
        residual = float(np.linalg.norm(hv - value * v))
        reference = abs(eigenvalues[0]) if eigenvalues else abs(value)
        if (
            previous is not None
            and abs(value - previous) <= cfg.tol * max(1.0, abs(value))
            and residual <= cfg.tol * (1.0 + reference)
        ):
            return v, iteration, True
        y = _orthogonalize(hv + mu * v, found)
        v = _unit(y)
        previous = value
    return v, cfg.max_iters, False


def _assemble(
    found, eigenvalues, residuals, iterations, calls, wall_time, tol, certified=True
) -> SubspaceBasis:
    n = found[0].shape[0] if found else 0
    order = np.argsort(-np.asarray(eigenvalues, dtype=np.float64), kind="stable")
    vectors = np.asarray(found, dtype=np.float64).reshape(len(found), n)
    return SubspaceBasis(
        vectors=vectors[order],
        eigenvalues=np.asarray(eigenvalues, dtype=np.float64)[order],
        residuals=np.asarray(residuals, dtype=np.float64)[order],
        iterations_used=iterations,
        hvp_calls=calls,
        wall_time=wall_time,
        tol=tol,
        method="power",
        certified=certified,
    )


def hvp_call_count(basis: SubspaceBasis) -> int:
    """HVPs spent building `basis` (shift probes + iterations + certification)."""
    return basis.hvp_calls


def dense_subspace(hessian, D: int, tol: float = 0.0) -> SubspaceBasis:
    """Top-D pairs of a materialized symmetric matrix via the dense oracle."""
    matrix = as_sym_matrix(hessian)
    if D > matrix.shape[0]:
        raise InvalidArgumentError(f"D = {D} exceeds the dimension n = {matrix.shape[0]}")
    started = time.perf_counter()
    values, vectors = dense_sym_eigh(matrix)
    top = vectors[:, :D]
    residuals = np.linalg.norm(matrix @ top - top * values[:D], axis=0)
    return SubspaceBasis(
        vectors=top.T.copy(),
        eigenvalues=values[:D].copy(),
        residuals=residuals,
        wall_time=time.perf_counter() - started,
        tol=tol,
        method="dense",
    )


def symmetry_defect(hvp_fn: HvpFn, n: int, rng: RngStream, probes: int = 5) -> float:
    """max over random (u, v) of |u^T (H v) - v^T (H u)| / (||u|| ||v||)."""
    generator = rng.generator()
    worst = 0.0
    for _ in range(probes):
        u = generator.standard_normal(n)
        v = generator.standard_normal(n)
        defect = abs(float(u @ hvp_fn(v)) - float(v @ hvp_fn(u)))
        worst = max(worst, defect / (np.linalg.norm(u) * np.linalg.norm(v)))
    return worst


def spectral_norm_estimate(hvp_fn: HvpFn, n: int, rng: RngStream, iters: int = 100) -> float:
    """Power-iteration estimate of ||H||_2 (a lower bound that tightens with iters)."""
    return estimate_shift(_as_counting(hvp_fn, n), n, rng, iters)

