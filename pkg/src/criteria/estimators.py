"""
Stabilization criteria estimators

Point criterion, Monte Carlo criteria under full-space and subspace Gaussian
probes, surrogate coefficient assembly and the quadratic Monte Carlo. All Monte
Carlo paths share `_probe_draws`, so a subspace probe with p = 2 and the direct
estimator see the same draws for the same seed.
"""

from typing import Optional

import numpy as np

from src.config import settings
from src.criteria.closed_forms import gaussian_moment_value
from src.criteria.models import CriterionEstimate, ProbeSpec, SurrogateCoefficients
from src.criteria.monte_carlo import gaussian_block, mean_and_error, run_blocks
from src.curvature.models import SubspaceBasis
from src.errors import InvalidArgumentError
from src.loss_family import LossFamily, Weights, WeightsLike
from src.numerics.arrays import Matrix, Vector
from src.numerics.linalg import as_sym_matrix, check_dense_size


def _check_basis(f: LossFamily, basis: SubspaceBasis) -> None:
    if basis.dimension != f.dimension:
        raise InvalidArgumentError(
            f"basis dimension {basis.dimension} does not match family dimension {f.dimension}"
        )


def _samples(samples: Optional[int]) -> int:
    return settings.MC_SAMPLES if samples is None else samples


def _probe_draws(
    f: LossFamily,
    k: int,
    center: Vector,
    sigma: float,
    vectors: Optional[Matrix],
    p: float,
    samples: int,
    seed: int,
    threads: int,
) -> Vector:
    """|increment|^p at center + z (full space) or center + U z (rows of `vectors`)."""
    dim = f.dimension if vectors is None else vectors.shape[0]

    def evaluate(index: int, rows: int) -> Vector:
        z = gaussian_block(seed, index, rows, dim, sigma)
        points = center + (z if vectors is None else z @ vectors)
        return np.abs(f.increments(k, points)) ** p

    return run_blocks(evaluate, samples, threads)


# ============================================================================
# Point and Monte Carlo criteria
# ============================================================================


def delta1(f: LossFamily, k: int, w_star: WeightsLike) -> CriterionEstimate:
    """|L_{k+1}(w*) - L_k(w*)|, the criterion under a point-mass probe."""
    return CriterionEstimate(
        value=abs(f.increment(k, w_star)), estimator="delta1", k=k, p=1.0
    )


def delta_p_mc(
    f: LossFamily,
    k: int,
    probe: ProbeSpec,
    p: float = 2.0,
    samples: Optional[int] = None,
    seed: int = 0,
    threads: int = 1,
) -> CriterionEstimate:
    """
    Monte Carlo estimate of E_q |L_{k+1}(w) - L_k(w)|^p.

    Raises:
        InvalidArgumentError: If p < 1, the probe is a point mass, k is out of
            range or the probe basis does not match the family
    """
    if p < 1:
        raise InvalidArgumentError(f"p must be >= 1, got {p}")
    if probe.kind == "point":
        raise InvalidArgumentError("point probes have no Monte Carlo estimate; use delta1")
    f.check_count(k, extra=1)
    center = f.point(probe.center)
    vectors = None
    if probe.kind == "subspace_gaussian":
        _check_basis(f, probe.basis)
        vectors = probe.basis.vectors
    samples = _samples(samples)
    draws = _probe_draws(f, k, center, probe.sigma, vectors, p, samples, seed, threads)
    value, error = mean_and_error(draws)
    return CriterionEstimate(
        value=value,
        estimator="delta_p_mc",
        samples=samples,
        std_error=error,
        seed=seed,
        sigma=probe.sigma,
        k=k,
        D=None if vectors is None else vectors.shape[0],
        p=p,
    )


def direct_mc(
    f: LossFamily,
    k: int,
    w_star: WeightsLike,
    basis: SubspaceBasis,
    sigma: float,
    samples: Optional[int] = None,
    seed: int = 0,
    threads: int = 1,
) -> CriterionEstimate:
    """Mean squared increment at w* + U_D z, z ~ N(0, sigma^2 I_D)."""
    _check_basis(f, basis)
    probe = ProbeSpec(
        kind="subspace_gaussian", center=f.point(w_star), sigma=sigma, basis=basis
    )
    estimate = delta_p_mc(f, k, probe, 2.0, samples, seed, threads)
    return estimate.model_copy(update={"estimator": "direct_mc"})


# ============================================================================
# Surrogate coefficients
# ============================================================================


def _grad_norm(f: LossFamily, k: int, w_star: WeightsLike, center: Vector) -> float:
    if isinstance(w_star, Weights) and w_star.provenance.grad_norm is not None:
        return w_star.achieved_grad_norm
    return float(np.linalg.norm(f.gradient(k, center)))


def surrogate_coeffs(
    f: LossFamily,
    k: int,
    w_star: WeightsLike,
    basis: SubspaceBasis,
    sigma: float = 1.0,
) -> SurrogateCoefficients:
    """
    Assemble (a_k, c_k, B_k) on the span of `basis`.

    a_k comes from the increment identity, c_k from one gradient of L_{k+1}
    projected onto U_D, and B_k from D products with each of H^(k+1) and H^(k).
    Only D x D storage is used for B_k.
    """
    f.check_count(k, extra=1)
    _check_basis(f, basis)
    center = f.point(w_star)
    a = f.increment(k, center)
    c = basis.vectors @ f.gradient(k + 1, center)
    differences = np.column_stack(
        [f.hvp(k + 1, center, u) - f.hvp(k, center, u) for u in basis.vectors]
    )
    return SurrogateCoefficients(
        a=a,
        c=c,
        B=as_sym_matrix(basis.vectors @ differences),
        sigma=sigma,
        k=k,
        achieved_grad_norm=_grad_norm(f, k, w_star, center),
        hvp_calls=2 * basis.D,
    )


def surrogate_coeffs_single_sample(
    f: LossFamily,
    k: int,
    w_star: WeightsLike,
    basis: SubspaceBasis,
    sigma: float = 1.0,
) -> SurrogateCoefficients:
    """Same coefficients with B_k from (H_{k+1} - H^(k)) / (k + 1)."""
    f.check_count(k, extra=1)
    _check_basis(f, basis)
    center = f.point(w_star)
    differences = np.column_stack(
        [
            (f.sample_hvp(k + 1, center, u) - f.hvp(k, center, u)) / (k + 1)
            for u in basis.vectors
        ]
    )
    return SurrogateCoefficients(
        a=f.increment(k, center),
        c=basis.vectors @ f.gradient(k + 1, center),
        B=as_sym_matrix(basis.vectors @ differences),
        sigma=sigma,
        k=k,
        achieved_grad_norm=_grad_norm(f, k, w_star, center),
        hvp_calls=2 * basis.D,
    )


def quad_mc(
    coeffs: SurrogateCoefficients,
    samples: Optional[int] = None,
    seed: int = 0,
    threads: int = 1,
) -> CriterionEstimate:
    """Monte Carlo of (a + c^T z + 1/2 z^T B z)^2; cost does not depend on N."""
    samples = _samples(samples)

    def evaluate(index: int, rows: int) -> Vector:
        z = gaussian_block(seed, index, rows, coeffs.D, coeffs.sigma)
        quadratic = np.einsum("sd,sd->s", z @ coeffs.B, z)
        return np.square(coeffs.a + z @ coeffs.c + 0.5 * quadratic)

    value, error = mean_and_error(run_blocks(evaluate, samples, threads))
    return CriterionEstimate(
        value=value,
        estimator="quad_mc",
        samples=samples,
        std_error=error,
        seed=seed,
        sigma=coeffs.sigma,
        k=coeffs.k,
        D=coeffs.D,
    )


def full_space_gm(f: LossFamily, k: int, w_star: WeightsLike, sigma: float) -> CriterionEstimate:
    """Gaussian-moment formula with U = I_N: the exact full-space criterion of a quadratic."""
    f.check_count(k, extra=1)
    check_dense_size(f.dimension, "full-space Gaussian moment")
    center = f.point(w_star)
    difference = f.dense_hessian_oracle(k + 1, center) - f.dense_hessian_oracle(k, center)
    value = gaussian_moment_value(
        f.increment(k, center),
        f.gradient(k + 1, center),
        as_sym_matrix(difference),
        sigma,
    )
    return CriterionEstimate(value=value, estimator="full_space_gm", sigma=sigma, k=k)
