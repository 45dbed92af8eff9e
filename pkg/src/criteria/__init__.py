from src.criteria.bounds import empirical_bound_constants, rate_bound, term_bounds
from src.criteria.closed_forms import (eigenvalue_increments,
                                       extremality_argmax,
                                       gaussian_moment_value, gm_closed_form,
                                       spectral_closed_form,
                                       stable_directions_defect,
                                       subset_objective)
from src.criteria.estimators import (delta1, delta_p_mc, direct_mc,
                                     full_space_gm, quad_mc, surrogate_coeffs,
                                     surrogate_coeffs_single_sample)
from src.criteria.models import (BoundConstants, CriterionEstimate,
                                 EstimatorKind, ProbeSpec,
                                 SurrogateCoefficients, TermBounds)

__all__ = [
    "BoundConstants",
    "CriterionEstimate",
    "EstimatorKind",
    "ProbeSpec",
    "SurrogateCoefficients",
    "TermBounds",
    "delta1",
    "delta_p_mc",
    "direct_mc",
    "eigenvalue_increments",
    "empirical_bound_constants",
    "extremality_argmax",
    "full_space_gm",
    "gaussian_moment_value",
    "gm_closed_form",
    "quad_mc",
    "rate_bound",
    "spectral_closed_form",
    "stable_directions_defect",
    "subset_objective",
    "surrogate_coeffs",
    "surrogate_coeffs_single_sample",
    "term_bounds",
]
