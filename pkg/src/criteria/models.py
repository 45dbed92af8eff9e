"""Value types exchanged by the criteria estimators."""

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.curvature.models import SubspaceBasis
from src.numerics.arrays import FloatArray

EstimatorKind = Literal[
    "delta1",
    "delta_p_mc",
    "direct_mc",
    "quad_mc",
    "gm_closed_form",
    "spectral_closed_form",
    "full_space_gm",
]


class ProbeSpec(BaseModel):
    """The probing law q around a center point."""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    kind: Literal["point", "full_gaussian", "subspace_gaussian"]
    center: FloatArray
    sigma: float = Field(0.0, ge=0)
    basis: Optional[SubspaceBasis] = None

    @model_validator(mode="after")
    def check_probe(self) -> "ProbeSpec":
        if self.kind != "point" and self.sigma <= 0:
            raise ValueError("gaussian probes need sigma > 0")
        if self.kind == "subspace_gaussian":
            if self.basis is None:
                raise ValueError("subspace_gaussian requires a basis")
            if self.basis.dimension != self.center.shape[0]:
                raise ValueError(
                    f"basis dimension {self.basis.dimension} does not match "
                    f"center dimension {self.center.shape[0]}"
                )
        return self


class SurrogateCoefficients(BaseModel):
    """
    Compressed quadratic model of the increment on the probe subspace:

        L_{k+1}(w* + U z) - L_k(w* + U z) ~ a + c^T z + 1/2 z^T B z
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    a: float
    c: FloatArray
    B: FloatArray
    sigma: float = Field(1.0, gt=0)
    k: int = Field(1, ge=1)
    achieved_grad_norm: float = 0.0
    hvp_calls: int = 0

    @model_validator(mode="after")
    def check_shapes(self) -> "SurrogateCoefficients":
        d = self.c.shape[0] if self.c.ndim == 1 else -1
        if self.B.shape != (d, d):
            raise ValueError(f"B must be {d} x {d} to match c, got {self.B.shape}")
        if not np.array_equal(self.B, self.B.T):
            raise ValueError("B must be symmetric")
        return self

    @property
    def D(self) -> int:
        return int(self.c.shape[0])


class CriterionEstimate(BaseModel):
    model_config = ConfigDict(extra="forbid")

    value: float = Field(ge=0)
    estimator: EstimatorKind
    samples: int = Field(0, ge=0)
    std_error: float = Field(0.0, ge=0)
    seed: Optional[int] = None
    sigma: Optional[float] = None
    k: Optional[int] = None
    D: Optional[int] = None
    p: float = 2.0


class BoundConstants(BaseModel):
    """Empirical M_l, M_g, M_H at a minimizer."""

    model_config = ConfigDict(extra="forbid")

    M_l: float = Field(ge=0, allow_inf_nan=False)
    M_g: float = Field(ge=0, allow_inf_nan=False)
    M_H: float = Field(ge=0, allow_inf_nan=False)


class TermBounds(BaseModel):
    """Per-term pieces of the rate bound; `total` is the rate bound itself.

    `value_bound` bounds |a_k|, `linear_bound` bounds sigma^2 ||c_k||^2 and
    `quadratic_bound` bounds E[(z^T B_k z)^2].
    """

    model_config = ConfigDict(extra="forbid")

    value_bound: float
    linear_bound: float
    quadratic_bound: float
    total: float
