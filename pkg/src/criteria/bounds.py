"""Empirical constants and the O(k^-2) rate bound on the subspace criterion."""

import numpy as np

from src.config import settings
from src.criteria.models import BoundConstants, TermBounds
from src.curvature.eigensolver import spectral_norm_estimate
from src.errors import InvalidArgumentError
from src.loss_family import LossFamily, WeightsLike
from src.logging_config import setup_logging
from src.numerics.linalg import spectral_norm
from src.numerics.rng import RngStream

logger = setup_logging(service_name="criteria")


def empirical_bound_constants(
    f: LossFamily, k: int, w_star: WeightsLike, iters: int = 100, seed: int = 0
) -> BoundConstants:
    """
    M_l = max_{i<=k+1} |l_i(w*)|, M_g = ||g_{k+1}(w*)||, M_H = max_{i<=k+1} ||H_i(w*)||_2.

    Per-sample spectral norms come from the dense oracle when N <= MAX_DENSE_DIM
    and from `iters` power iterations on per-sample HVPs otherwise.
    """
    f.check_count(k, extra=1)
    center = f.point(w_star)
    count = k + 1

    m_loss = max(abs(f.per_sample_loss(i, center)) for i in range(1, count + 1))
    m_grad = float(np.linalg.norm(f.sample_gradient(count, center)))

    dense = f.dimension <= settings.MAX_DENSE_DIM
    root = RngStream(seed)
    norms = []
    for i in range(1, count + 1):
        if dense:
            norms.append(spectral_norm(f.sample_dense_hessian(i, center)))
        else:
            norms.append(
                spectral_norm_estimate(
                    lambda v, i=i: f.sample_hvp(i, center, v),
                    f.dimension,
                    root.substream(i),
                    iters,
                )
            )
    constants = BoundConstants(M_l=m_loss, M_g=m_grad, M_H=max(norms))
    logger.debug(
        f"Bound constants at k={k}: M_l={constants.M_l:.4g}, M_g={constants.M_g:.4g}, "
        f"M_H={constants.M_H:.4g} ({'dense' if dense else 'power iteration'})"
    )
    return constants


def term_bounds(constants: BoundConstants, sigma: float, D: int, k: int) -> TermBounds:
    """
    Bounds on each piece of the surrogate:

        |a_k| <= 2 M_l / (k+1)
        sigma^2 ||c_k||^2 <= sigma^2 M_g^2 / (k+1)^2
        E[(z^T B_k z)^2] <= 4 sigma^4 (D^2 + 2D) M_H^2 / (k+1)^2

    `total` combines them with (x + y + z)^2 <= 3 (x^2 + y^2 + z^2).
    """
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    if D < 1:
        raise InvalidArgumentError(f"D must be >= 1, got {D}")
    denominator = float((k + 1) ** 2)
    s2 = sigma * sigma
    value_bound = 2.0 * constants.M_l / (k + 1)
    linear_bound = s2 * constants.M_g**2 / denominator
    quadratic_bound = 4.0 * s2 * s2 * (D * D + 2 * D) * constants.M_H**2 / denominator
    return TermBounds(
        value_bound=value_bound,
        linear_bound=linear_bound,
        quadratic_bound=quadratic_bound,
        total=rate_bound(constants, sigma, D, k),
    )


def rate_bound(constants: BoundConstants, sigma: float, D: int, k: int) -> float:
    """(12 M_l^2 + 3 sigma^2 M_g^2 + 3 sigma^4 (D^2 + 2D) M_H^2) / (k+1)^2."""
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    s2 = sigma * sigma
    numerator = (
        12.0 * constants.M_l**2
        + 3.0 * s2 * constants.M_g**2
        + 3.0 * s2 * s2 * (D * D + 2 * D) * constants.M_H**2
    )
    return numerator / float((k + 1) ** 2)
