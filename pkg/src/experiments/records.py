"""
Experiment records and their CSV form

One row per (experiment, k, D, sigma, estimator, S). Floats are written in
Python's shortest round-trip form, so reading a file back gives the same
records bit for bit.
"""

import csv
from pathlib import Path
from typing import Iterable, List, Union

from pydantic import BaseModel, ConfigDict, Field

from src.errors import InvalidArgumentError

RECORD_FIELDS = (
    "experiment",
    "k",
    "D",
    "sigma",
    "estimator",
    "S",
    "value",
    "std_error",
    "stage1_s",
    "stage2_s",
    "stage3_s",
    "hvp_calls",
    "seed",
)
TIMING_FIELDS = ("stage1_s", "stage2_s", "stage3_s")


class ExperimentRecord(BaseModel):
    """A single measurement; D = 0 and sigma = 0 mark criteria without a probe subspace or scale."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: str
    k: int = Field(ge=1)
    D: int = Field(0, ge=0)
    sigma: float = Field(0.0, ge=0)
    estimator: str
    S: int = Field(0, ge=0)
    value: float = Field(ge=0)
    std_error: float = Field(0.0, ge=0)
    stage1_s: float = Field(0.0, ge=0)
    stage2_s: float = Field(0.0, ge=0)
    stage3_s: float = Field(0.0, ge=0)
    hvp_calls: int = Field(0, ge=0)
    seed: int = 0

    def sort_key(self):
        return (self.experiment, self.k, self.D, self.sigma, self.estimator, self.S)

    def without_timings(self) -> "ExperimentRecord":
        return self.model_copy(update={name: 0.0 for name in TIMING_FIELDS})


def sort_records(records: Iterable[ExperimentRecord]) -> List[ExperimentRecord]:
    return sorted(records, key=ExperimentRecord.sort_key)


def _cell(value) -> str:
    # repr is the shortest string that round-trips a float
    return repr(value) if isinstance(value, float) else str(value)


def write_records_csv(
    records: Iterable[ExperimentRecord], path: Union[str, Path], zero_timings: bool = False
) -> Path:
    """Write sorted records; `zero_timings` blanks the stage columns for byte comparisons."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sort_records(records)
    if zero_timings:
        rows = [record.without_timings() for record in rows]
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=RECORD_FIELDS, lineterminator="\n")
        writer.writeheader()
        for record in rows:
            writer.writerow({name: _cell(getattr(record, name)) for name in RECORD_FIELDS})
    return path


def read_records_csv(path: Union[str, Path]) -> List[ExperimentRecord]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != RECORD_FIELDS:
            raise InvalidArgumentError(f"unexpected CSV header in {path}: {reader.fieldnames}")
        return [ExperimentRecord.model_validate(row) for row in reader]
