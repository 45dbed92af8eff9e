"""Eigensolver configuration and the principal-subspace result type."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.config import settings
from src.numerics.arrays import FloatArray, Matrix


class EigSolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    D: int = Field(ge=1)
    max_iters: int = Field(default_factory=lambda: settings.EIG_MAX_ITERS, ge=1)
    tol: float = Field(default_factory=lambda: settings.EIG_TOL, gt=0)
    # power iterations spent estimating ||H||_2 for the shift
    shift_probes: int = Field(default_factory=lambda: settings.EIG_SHIFT_PROBES, ge=1)
    seed: int = Field(0, ge=0)


class SubspaceBasis(BaseModel):
    """
    Top-D eigenpairs of a symmetric operator.

    `vectors` holds u_1..u_D as rows (D x N, the sidecar payload layout);
    `eigenvalues` are descending by algebraic value and `residuals[i]` is
    ||H u_i - lambda_i u_i||_2 measured with a fresh product.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    vectors: FloatArray
    eigenvalues: FloatArray
    residuals: FloatArray
    iterations_used: int = 0
    hvp_calls: int = 0
    wall_time: float = 0.0
    tol: float = 0.0
    method: Literal["power", "dense", "cache"] = "power"
    certified: bool = True

    @model_validator(mode="after")
    def check_shapes(self) -> "SubspaceBasis":
        if self.vectors.ndim != 2:
            raise ValueError(f"vectors must be D x N, got shape {self.vectors.shape}")
        count = self.vectors.shape[0]
        if self.eigenvalues.shape != (count,) or self.residuals.shape != (count,):
            raise ValueError("eigenvalues and residuals must have one entry per vector")
        if np.any(np.diff(self.eigenvalues) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        return self

    @property
    def D(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def u(self) -> Matrix:
        """U_D as an N x D matrix of orthonormal columns."""
        return self.vectors.T

    def leading(self, d: int) -> "SubspaceBasis":
        """The first d pairs; the span of a prefix is itself a principal subspace."""
        return self.model_copy(
            update={
                "vectors": self.vectors[:d],
                "eigenvalues": self.eigenvalues[:d],
                "residuals": self.residuals[:d],
            }
        )
