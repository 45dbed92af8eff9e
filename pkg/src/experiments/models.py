"""Summary and bookkeeping types shared by the experiment runners."""

import hashlib
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Protocol, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.curvature.models import SubspaceBasis
from src.experiments.config import SolverConfig
from src.loss_family import Weights, family_hash

T = TypeVar("T")


class TimingStats(BaseModel):
    """Median of repeated wall-clock measurements with their spread, in seconds."""

    model_config = ConfigDict(extra="forbid")

    median: float
    min: float
    max: float
    repeats: int

    @classmethod
    def single(cls, seconds: float) -> "TimingStats":
        return cls(median=seconds, min=seconds, max=seconds, repeats=1)


def timed(fn: Callable[[], T], repeats: int = 1) -> Tuple[T, TimingStats]:
    """Run `fn` `repeats` times on the monotonic clock; returns the last result."""
    samples = []
    result = None
    for _ in range(repeats):
        started = time.perf_counter()
        result = fn()
        samples.append(time.perf_counter() - started)
    return result, TimingStats(
        median=float(np.median(samples)),
        min=float(min(samples)),
        max=float(max(samples)),
        repeats=repeats,
    )


class SubspaceKey(BaseModel):
    """
    Identity of a cached principal subspace.

    `point` is the SHA-256 of the float64 bytes of the weights the Hessian is
    taken at, so minimizer settings and warm starts are part of the identity.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    family_hash: str
    k: int
    D: int
    point: str
    eig_tol: float
    eig_max_iters: int
    seed: int

    @classmethod
    def for_point(cls, cfg: SolverConfig, k: int, D: int, w: Weights) -> "SubspaceKey":
        point = hashlib.sha256(np.ascontiguousarray(w.w, dtype=np.float64).tobytes()).hexdigest()
        return cls(
            family_hash=family_hash(cfg.family),
            k=k,
            D=D,
            point=point,
            eig_tol=cfg.eig_tol,
            eig_max_iters=cfg.eig_max_iters,
            seed=cfg.seed,
        )

    def digest(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()

    def stem(self) -> str:
        return f"{self.family_hash[:16]}-k{self.k}-D{self.D}-{self.digest()[:16]}"


class SubspaceStore(Protocol):
    def load(self, key: SubspaceKey) -> Optional[SubspaceBasis]: ...

    def save(self, key: SubspaceKey, basis: SubspaceBasis) -> None: ...


class ExperimentSummary(BaseModel):
    """Machine-readable outcome of one sweep, written next to its CSV."""

    model_config = ConfigDict(extra="forbid")

    experiment: str
    seed: int
    config_hash: str = ""
    records: int = 0
    slopes: Dict[str, Optional[float]] = {}
    timings: Dict[str, TimingStats] = {}
    checks: Dict[str, bool] = {}
    term_bounds: Dict[str, Dict[str, float]] = {}
    flags: List[str] = []
    cache_hits: int = 0
    cache_misses: int = 0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


@dataclass
class RunContext:
    """Mutable side channel a runner fills while it produces records."""

    store: Optional[SubspaceStore] = None
    slopes: Dict[str, Optional[float]] = field(default_factory=dict)
    timings: Dict[str, TimingStats] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    term_bounds: Dict[str, Dict[str, float]] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)
    cache_hits: int = 0
    cache_misses: int = 0

    def flag(self, message: str) -> None:
        if message not in self.flags:
            self.flags.append(message)
