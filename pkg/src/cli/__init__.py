from src.cli.app import build_parser, main
from src.cli.cache import SubspaceCache, subspace_cache
from src.cli.checks import SUITE, SuiteOptions, run_property_suite
from src.cli.models import (CheckResult, CliConfig, CriterionConfig,
                            RunManifest, parse_criterion_config)
from src.cli.outputs import OutputDir
from src.cli.overrides import apply_overrides, config_hash, parse_override

__all__ = [
    "SUITE",
    "CheckResult",
    "CliConfig",
    "CriterionConfig",
    "OutputDir",
    "RunManifest",
    "SubspaceCache",
    "SuiteOptions",
    "apply_overrides",
    "build_parser",
    "config_hash",
    "main",
    "parse_criterion_config",
    "parse_override",
    "run_property_suite",
    "subspace_cache",
]
