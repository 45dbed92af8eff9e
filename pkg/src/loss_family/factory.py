"""Build families from specs and read/write spec JSON files."""

import json
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from src.errors import ConfigError
from src.loss_family.base import LossFamily
from src.loss_family.mlp import MlpFamily
from src.loss_family.quadratic import QuadraticFamily
from src.loss_family.specs import (MlpFamilySpec, QuadraticFamilySpec,
                                   family_spec_adapter)

AnyFamilySpec = Union[QuadraticFamilySpec, MlpFamilySpec]


def build_family(spec: AnyFamilySpec) -> LossFamily:
    if isinstance(spec, QuadraticFamilySpec):
        return QuadraticFamily.from_spec(spec)
    if isinstance(spec, MlpFamilySpec):
        return MlpFamily.from_spec(spec)
    raise ConfigError(f"unsupported family spec type {type(spec).__name__}")


def format_validation_error(exc: ValidationError) -> str:
    """One line per problem: `<dotted.location>: <message>`."""
    problems = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"]) or "<root>"
        problems.append(f"{location}: {error['msg']}")
    return "; ".join(problems)


def parse_family_spec(data: dict) -> AnyFamilySpec:
    try:
        return family_spec_adapter.validate_python(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid family spec: {format_validation_error(exc)}") from exc


def load_family_spec(path: Union[str, Path]) -> AnyFamilySpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"family spec not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_family_spec(data)


def dump_family_spec(spec: AnyFamilySpec) -> str:
    """Canonical, stable text form (sorted keys, trailing newline)."""
    return json.dumps(spec.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
