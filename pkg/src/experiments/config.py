"""Sweep configuration for the experiment runner."""

import json
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.config import settings
from src.errors import ConfigError
from src.loss_family import FamilySpec, format_validation_error

ExperimentKind = Literal["decay", "ratio", "proxy_validity", "estimators", "fidelity"]
SweepEstimator = Literal["delta1", "delta_p_mc", "direct_mc", "quad_mc", "gm_closed_form"]


def _ascending(values: list) -> bool:
    return all(a < b for a, b in zip(values, values[1:]))


class SolverConfig(BaseModel):
    """Family plus the minimizer and eigensolver settings every run needs."""

    model_config = ConfigDict(extra="forbid")

    family: FamilySpec
    seed: int = Field(0, ge=0)

    # SOLVERS
    minimizer_tol: float = Field(default_factory=lambda: settings.MINIMIZER_TOL, gt=0)
    minimizer_max_iters: int = Field(default_factory=lambda: settings.MINIMIZER_MAX_ITERS, ge=1)
    eig_tol: float = Field(default_factory=lambda: settings.EIG_TOL, gt=0)
    eig_max_iters: int = Field(default_factory=lambda: settings.EIG_MAX_ITERS, ge=1)


class SweepConfig(SolverConfig):
    """
    One experiment over a (k, D, sigma) grid.

    The family spec is inline so a config file fully determines the run.
    """

    experiment: ExperimentKind

    # GRIDS
    k_grid: List[int] = Field(default_factory=lambda: [8])
    D_grid: List[int] = Field(default_factory=lambda: [10])
    sigma_grid: List[float] = Field(default_factory=lambda: [1e-4, 1e-3, 1e-2])
    # Monte Carlo sample count per estimate, and the grid for convergence runs
    S: int = Field(default_factory=lambda: settings.MC_SAMPLES, ge=2)
    S_grid: List[int] = Field(default_factory=lambda: [100, 1000, 10000])
    estimators: List[SweepEstimator] = Field(
        default_factory=lambda: ["delta1", "delta_p_mc", "direct_mc", "quad_mc", "gm_closed_form"]
    )

    # EXPERIMENT SPECIFIC
    proxy_draws: int = Field(64, ge=2)
    timing_repeats: int = Field(default_factory=lambda: settings.TIMING_REPEATS, ge=1)
    slope_k_min: Optional[int] = Field(None, ge=1)
    threads: int = Field(1, ge=1)

    @model_validator(mode="after")
    def check_grids(self) -> "SweepConfig":
        for name in ("k_grid", "D_grid", "sigma_grid", "S_grid"):
            values = getattr(self, name)
            if not values:
                raise ValueError(f"{name} must not be empty")
            if not _ascending(values):
                raise ValueError(f"{name} must be sorted strictly ascending")
        if self.k_grid[0] < 1:
            raise ValueError("k_grid entries must be >= 1")
        if self.k_grid[-1] + 1 > self.family.max_samples:
            raise ValueError(
                f"max(k_grid) + 1 = {self.k_grid[-1] + 1} exceeds family max_samples "
                f"{self.family.max_samples}"
            )
        if self.D_grid[0] < 1 or self.D_grid[-1] > self.family.dimension:
            raise ValueError(f"D_grid entries must lie in 1..{self.family.dimension}")
        if self.sigma_grid[0] <= 0:
            raise ValueError("sigma_grid entries must be > 0")
        if self.S_grid[0] < 2:
            raise ValueError("S_grid entries must be >= 2")
        return self


def read_json(path: Union[str, Path]) -> dict:
    """Load a JSON object from disk, mapping I/O and syntax failures to ConfigError."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object, got {type(data).__name__}")
    return data


def parse_sweep_config(data: dict) -> SweepConfig:
    try:
        return SweepConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid sweep config: {format_validation_error(exc)}") from exc


def load_sweep_config(path: Union[str, Path]) -> SweepConfig:
    return parse_sweep_config(read_json(path))
