"""JSON-serializable family specs and the weights/provenance value types."""

import hashlib
from dataclasses import dataclass, field
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from src.numerics.arrays import Vector


class QuadraticFamilySpec(BaseModel):
    """Ensemble config for l_i(w) = 1/2 (w - m_i)^T Q_i (w - m_i) + b_i."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["quadratic"] = "quadratic"
    dimension: int = Field(64, ge=1)
    max_samples: int = Field(65, ge=2)

    # CURVATURE
    # top_heavy: d_true dominant directions shared up to a small drift,
    # eigenvalues spread over [top_min, top_max], flat tail on the rest.
    # isotropic: Q_i = s_i I. dense: random Wishart (small N only).
    spectrum: Literal["top_heavy", "isotropic", "dense"] = "top_heavy"
    d_true: int = Field(5, ge=0)
    top_min: float = Field(1.0, gt=0)
    top_max: float = Field(10.0, gt=0)
    top_jitter: float = Field(0.05, ge=0, lt=1)
    direction_drift: float = Field(0.05, ge=0)
    tail_min: float = Field(0.0, ge=0)
    tail_max: float = Field(0.01, ge=0)
    # Added to every Q_i so the mean curvature is PD and minimize is exact.
    ridge: float = Field(1e-6, gt=0)

    # CENTERS AND OFFSETS
    center_scale: float = Field(1.0, ge=0)
    offset_scale: float = Field(1.0, ge=0)
    # alternating: b_i = (-1)^i * offset_scale
    offset_law: Literal["gaussian", "alternating"] = "gaussian"

    identical_samples: bool = False
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_ranges(self) -> "QuadraticFamilySpec":
        if self.d_true > self.dimension:
            raise ValueError("d_true cannot exceed dimension")
        if self.top_min > self.top_max:
            raise ValueError("top_min must be <= top_max")
        if self.tail_min > self.tail_max:
            raise ValueError("tail_min must be <= tail_max")
        if self.spectrum == "dense" and self.dimension > 512:
            raise ValueError("dense spectrum is limited to dimension <= 512")
        return self


class MlpFamilySpec(BaseModel):
    """Tiny regression MLP with squared-error per-sample losses."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["mlp"] = "mlp"
    layer_sizes: List[int] = Field(default_factory=lambda: [4, 16, 1])
    # smooth so every per-sample loss is C^2
    activation: Literal["tanh", "softplus"] = "tanh"
    max_samples: int = Field(65, ge=2)
    input_scale: float = Field(1.0, gt=0)
    noise: float = Field(0.1, ge=0)
    target_scale: float = Field(1.0, gt=0)
    init_scale: float = Field(0.5, gt=0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_layers(self) -> "MlpFamilySpec":
        if len(self.layer_sizes) < 2:
            raise ValueError("layer_sizes needs an input and an output layer")
        if any(size < 1 for size in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if self.layer_sizes[-1] != 1:
            raise ValueError("the output layer must have a single unit")
        return self

    @property
    def dimension(self) -> int:
        sizes = self.layer_sizes
        return sum(sizes[i + 1] * sizes[i] + sizes[i + 1] for i in range(len(sizes) - 1))


FamilySpec = Annotated[
    Union[QuadraticFamilySpec, MlpFamilySpec], Field(discriminator="kind")
]
family_spec_adapter = TypeAdapter(FamilySpec)


def family_hash(spec: Union[QuadraticFamilySpec, MlpFamilySpec]) -> str:
    """SHA-256 of the canonical JSON form of a spec."""
    return hashlib.sha256(spec.model_dump_json().encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Provenance:
    """Where a weight vector came from.

    Minimizers record the gradient norm they actually reached: the surrogate
    assumes g^(k)(w*) = 0, which holds only up to this value.
    """

    kind: Literal["initial", "minimizer"] = "initial"
    k: Optional[int] = None
    grad_norm: Optional[float] = None
    converged: bool = True
    iterations: int = 0


@dataclass(frozen=True)
class Weights:
    w: Vector
    provenance: Provenance = field(default_factory=Provenance)

    @property
    def dimension(self) -> int:
        return int(self.w.shape[0])

    @property
    def achieved_grad_norm(self) -> float:
        return float(self.provenance.grad_norm or 0.0)

    @classmethod
    def initial(cls, w) -> "Weights":
        return cls(np.asarray(w, dtype=np.float64).copy())
