"""Pydantic models for CLI invocations, criterion configs and run manifests."""

import argparse
from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import (BaseModel, ConfigDict, Field, ValidationError,
                      field_validator, model_validator)

from src.config import settings
from src.criteria.models import EstimatorKind
from src.errors import ConfigError
from src.experiments.config import SolverConfig
from src.loss_family import format_validation_error

Subcommand = Literal["gen-family", "subspace", "criterion", "experiment"]

SEED_LIMIT = 2**64
LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


class CliConfig(BaseModel):
    """One parsed invocation."""

    model_config = ConfigDict(extra="forbid")

    subcommand: Optional[Subcommand] = None
    config_path: Optional[Path] = None
    out_dir: Optional[Path] = None
    seed: Optional[int] = Field(None, ge=0, lt=SEED_LIMIT)
    overrides: List[str] = Field(default_factory=list)
    force: bool = False
    threads: Optional[int] = Field(None, ge=1)
    cache_dir: Optional[Path] = None
    check: bool = False
    quick: bool = False
    determinism_check: bool = False
    log_level: Optional[str] = None

    @field_validator("log_level")
    def check_log_level(cls, v: Optional[str]) -> Optional[str]:
        if v is None:
            return v
        if v.upper() not in LOG_LEVELS:
            raise ValueError(f"log level must be one of {sorted(LOG_LEVELS)}")
        return v.upper()

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> "CliConfig":
        data = {
            "subcommand": getattr(args, "command", None),
            "config_path": getattr(args, "config", None),
            "out_dir": getattr(args, "out", None),
            "seed": getattr(args, "seed", None),
            "overrides": getattr(args, "overrides", None) or [],
            "force": getattr(args, "force", False),
            "threads": getattr(args, "threads", None),
            "cache_dir": getattr(args, "cache_dir", None),
            "check": getattr(args, "check", False),
            "quick": getattr(args, "quick", False),
            "determinism_check": getattr(args, "determinism_check", False),
            "log_level": getattr(args, "log_level", None),
        }
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(f"invalid arguments: {format_validation_error(exc)}") from exc

    def resolved_seed(self) -> Optional[int]:
        """--seed first, then STABKIT_SEED; None leaves the config's own seed."""
        return self.seed if self.seed is not None else settings.STABKIT_SEED


class CriterionConfig(SolverConfig):
    """Single-cell criterion evaluation at one (k, D, sigma)."""

    k: int = Field(8, ge=1)
    D: int = Field(10, ge=1)
    sigma: float = Field(1e-3, gt=0)
    S: int = Field(default_factory=lambda: settings.MC_SAMPLES, ge=2)
    p: float = Field(2.0, ge=1)
    estimators: List[EstimatorKind] = Field(
        default_factory=lambda: ["delta1", "direct_mc", "quad_mc", "gm_closed_form"]
    )

    @model_validator(mode="after")
    def check_cell(self) -> "CriterionConfig":
        if self.k + 1 > self.family.max_samples:
            raise ValueError(
                f"k + 1 = {self.k + 1} exceeds family max_samples {self.family.max_samples}"
            )
        if self.D > self.family.dimension:
            raise ValueError(f"D must lie in 1..{self.family.dimension}")
        if not self.estimators:
            raise ValueError("estimators must not be empty")
        return self


def parse_criterion_config(data: dict) -> CriterionConfig:
    try:
        return CriterionConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid criterion config: {format_validation_error(exc)}") from exc


class OutputFile(BaseModel):
    path: str
    sha256: str
    bytes: int


class RunManifest(BaseModel):
    """Contents of `run.json`."""

    model_config = ConfigDict(extra="forbid")

    command: str
    argv: List[str]
    config_hash: str = ""
    seed: Optional[int] = None
    versions: Dict[str, str]
    settings: dict = Field(default_factory=dict)
    wall_time: float = 0.0
    cache_hits: int = 0
    cache_misses: int = 0
    outputs: List[OutputFile] = Field(default_factory=list)


class CheckResult(BaseModel):
    """One row of the property-suite table."""

    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0
