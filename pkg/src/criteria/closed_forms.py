"""
Closed-form criteria

Expectations of the squared quadratic surrogate under a Gaussian probe, the
spectral special case, and the brute-force check that the top-curvature
subspace maximizes the pure quadratic criterion.
"""

import itertools
import math
from typing import Sequence, Tuple

import numpy as np

from src.criteria.models import CriterionEstimate, SurrogateCoefficients
from src.errors import InvalidArgumentError, NumericalError, SizeLimitError
from src.numerics.arrays import Vector
from src.numerics.linalg import as_vector

MAX_EXTREMALITY_DIM = 20
NEGATIVE_GUARD = 1e-12


def gaussian_moment_value(a: float, c: Vector, b: np.ndarray, sigma: float) -> float:
    """
    E[(a + c^T z + 1/2 z^T B z)^2] for z ~ N(0, sigma^2 I):

        a^2 + a sigma^2 Tr B + sigma^2 ||c||^2 + sigma^4 / 4 (2 ||B||_F^2 + (Tr B)^2)

    Raises:
        NumericalError: If rounding drives the sum below -1e-12 times its scale
    """
    trace = float(np.trace(b))
    frobenius_sq = float(np.sum(b * b))
    c_sq = float(c @ c)
    s2 = sigma * sigma
    quartic = 0.25 * s2 * s2 * (2.0 * frobenius_sq + trace * trace)
    cross = a * s2 * trace
    value = a * a + cross + s2 * c_sq + quartic
    scale = a * a + abs(cross) + s2 * c_sq + quartic
    if value < -NEGATIVE_GUARD * scale:
        raise NumericalError(
            f"Gaussian-moment value {value:.3e} is negative beyond rounding (scale {scale:.3e})"
        )
    return max(value, 0.0)


def gm_closed_form(coeffs: SurrogateCoefficients) -> CriterionEstimate:
    value = gaussian_moment_value(coeffs.a, coeffs.c, coeffs.B, coeffs.sigma)
    return CriterionEstimate(
        value=value,
        estimator="gm_closed_form",
        sigma=coeffs.sigma,
        k=coeffs.k,
        D=coeffs.D,
    )


def spectral_closed_form(deltas, sigma: float) -> CriterionEstimate:
    """sigma^4 / 4 (2 sum delta_i^2 + (sum delta_i)^2) for a diagonal B."""
    values = as_vector(deltas)
    total = float(np.sum(values))
    s2 = sigma * sigma
    value = 0.25 * s2 * s2 * (2.0 * float(np.sum(values * values)) + total * total)
    return CriterionEstimate(
        value=value, estimator="spectral_closed_form", sigma=sigma, D=values.shape[0]
    )


def eigenvalue_increments(coeffs: SurrogateCoefficients) -> Vector:
    """diag(B_k): the per-direction curvature increments delta_i."""
    return np.diag(coeffs.B).copy()


def stable_directions_defect(coeffs: SurrogateCoefficients) -> float:
    """||offdiag(B_k)||_F / ||B_k||_F; 0 when the spectral closed form is exact."""
    total = float(np.linalg.norm(coeffs.B))
    if total == 0.0:
        return 0.0
    off_diagonal = coeffs.B - np.diag(np.diag(coeffs.B))
    return float(np.linalg.norm(off_diagonal)) / total


def subset_objective(deltas, index_set: Sequence[int]) -> float:
    """F(I) = 2 sum_{i in I} delta_i^2 + (sum_{i in I} delta_i)^2 for 1-based I."""
    values = as_vector(deltas)
    chosen = [float(values[i - 1]) for i in index_set]
    total = math.fsum(chosen)
    return 2.0 * math.fsum(x * x for x in chosen) + total * total


def extremality_argmax(all_deltas, D: int, sigma: float = 1.0) -> Tuple[Tuple[int, ...], float]:
    """
    Brute-force the size-D index set maximizing the pure quadratic criterion.

    Ties keep the lexicographically smallest set. For sorted non-negative
    increments the winner is always {1, ..., D}; anything else is reported as
    a numerical failure.

    Returns:
        (1-based index set, sigma^4 / 4 * F of that set)

    Raises:
        InvalidArgumentError: If the increments are unsorted or negative, or D is out of range
        SizeLimitError: If there are more than 20 increments
    """
    values = as_vector(all_deltas)
    n = values.shape[0]
    if n > MAX_EXTREMALITY_DIM:
        raise SizeLimitError(
            f"extremality brute force limited to N <= {MAX_EXTREMALITY_DIM}, got N = {n}"
        )
    if np.any(values < 0):
        raise InvalidArgumentError("eigenvalue increments must be non-negative")
    if np.any(np.diff(values) > 0):
        raise InvalidArgumentError("eigenvalue increments must be sorted non-increasing")
    if not 1 <= D <= n:
        raise InvalidArgumentError(f"D must be in 1..{n}, got {D}")

    best_set: Tuple[int, ...] = ()
    best_value = -math.inf
    for combo in itertools.combinations(range(1, n + 1), D):
        objective = subset_objective(values, combo)
        if objective > best_value:
            best_set, best_value = combo, objective

    expected = tuple(range(1, D + 1))
    if best_set != expected:
        raise NumericalError(f"extremality violated: argmax {best_set} instead of {expected}")
    s2 = sigma * sigma
    return best_set, 0.25 * s2 * s2 * best_value
