"""
stabkit command line

Exit codes: 0 on success, 1 on usage errors (usage text on stderr), 2 on
runtime errors with a single `error: <category>: <detail>` line on stderr.
"""

import argparse
import sys
from typing import List, Optional

from src.cli.commands import COMMANDS, run_check, run_command
from src.cli.models import CliConfig
from src.errors import PropertyCheckError, StabkitError
from src.logging_config import setup_logging

logger = setup_logging(service_name="cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    def __init__(self, message: str, usage: str):
        self.usage = usage
        super().__init__(message)


class StabkitArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(message, self.format_usage())


def _common_options() -> argparse.ArgumentParser:
    # SUPPRESS so a flag given before the subcommand is not reset by the subparser
    common = StabkitArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--check", action="store_true", help="Run the property suite")
    common.add_argument("--quick", action="store_true", help="Reduced sizes for --check")
    common.add_argument(
        "--determinism-check",
        action="store_true",
        help="Zero timing columns; with --check, rerun sweeps and compare CSV bytes",
    )
    common.add_argument("--force", action="store_true", help="Overwrite existing results")
    common.add_argument("--threads", type=int, help="Monte Carlo worker threads")
    common.add_argument("--seed", type=int, help="Seed (falls back to STABKIT_SEED)")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        metavar="KEY=VALUE",
        help="Override a config field; dotted keys, JSON values (repeatable)",
    )
    common.add_argument("--cache-dir", help="Subspace cache directory")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--log-level", help="Logging level for this run")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = StabkitArgumentParser(
        prog="stabkit",
        description="Loss-landscape stabilization criteria",
        parents=[common],
    )
    subparsers = parser.add_subparsers(dest="command", parser_class=StabkitArgumentParser)
    descriptions = {
        "gen-family": "Validate a family spec and write its canonical JSON",
        "subspace": "Build or load the top-D Hessian subspace at the minimizer",
        "criterion": "Evaluate criteria at one (k, D, sigma) cell",
        "experiment": "Run a sweep and write its records CSV",
    }
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=descriptions[name], parents=[common])
        sub.add_argument("--config", required=True, help="JSON config file")
    return parser


def parse_cli(argv: List[str]) -> CliConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) is None and not getattr(args, "check", False):
        raise UsageError("a subcommand or --check is required", parser.format_usage())
    return CliConfig.from_namespace(args)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cli = parse_cli(argv)
    except UsageError as exc:
        sys.stderr.write(exc.usage)
        sys.stderr.write(f"stabkit: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except StabkitError as exc:
        return _fail(exc)

    if cli.log_level:
        setup_logging(log_level=cli.log_level, force_reload=True)

    try:
        if cli.check:
            print(run_check(cli, argv))
        else:
            run_command(cli, argv)
    except PropertyCheckError as exc:
        print(exc.table)
        return _fail(exc)
    except StabkitError as exc:
        return _fail(exc)
    except OSError as exc:
        logger.exception("I/O failure")
        return _fail_line("io", str(exc))
    return EXIT_OK


def _fail(exc: StabkitError) -> int:
    logger.error(f"{type(exc).__name__}: {exc}")
    return _fail_line(exc.category, str(exc))


def _fail_line(category: str, detail: str) -> int:
    detail = " ".join(detail.split())
    sys.stderr.write(f"error: {category}: {detail}\n")
    return EXIT_RUNTIME
