import logging
import logging.config
from pathlib import Path
from typing import Optional

from src.config import settings

try:
    from pythonjsonlogger import jsonlogger  # type: ignore  # noqa: F401

    JSON_LOGS_AVAILABLE = True
except ImportError:
    JSON_LOGS_AVAILABLE = False

ROOT_LOGGER = "stabkit"

FORMATTERS = {
    "console": {
        "format": "%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        "datefmt": "%H:%M:%S",
    },
    "file": {
        "format": "%(asctime)s %(levelname)s %(name)s pid=%(process)d %(module)s.%(funcName)s:%(lineno)d %(message)s",
    },
    "json": {
        "()": "pythonjsonlogger.jsonlogger.JsonFormatter",
        "fmt": "%(asctime)s %(levelname)s %(name)s %(funcName)s %(message)s",
    },
}

_configured = False


def _rotating_file(level: str, filename: str, formatter: str) -> dict:
    directory = Path(settings.LOG_DIR)
    directory.mkdir(parents=True, exist_ok=True)
    return {
        "class": "logging.handlers.RotatingFileHandler",
        "level": level,
        "formatter": formatter,
        "filename": str(directory / filename),
        "maxBytes": 5 * 1024 * 1024,
        "backupCount": 3,
        "encoding": "utf-8",
    }


def _build_config(level: str, log_file: str, console_only: bool) -> dict:
    json_lines = JSON_LOGS_AVAILABLE and settings.LOG_JSON
    handlers = {
        # stdout carries the --check table; diagnostics go to stderr
        "console": {
            "class": "logging.StreamHandler",
            "level": level,
            "formatter": "json" if json_lines else "console",
            "stream": "ext://sys.stderr",
        }
    }
    if not console_only:
        handlers["file"] = _rotating_file(level, log_file, "json" if json_lines else "file")

    formatters = {name: fmt for name, fmt in FORMATTERS.items() if name != "json" or json_lines}
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": formatters,
        "handlers": handlers,
        "loggers": {
            ROOT_LOGGER: {"handlers": list(handlers), "level": level, "propagate": False},
        },
    }


def setup_logging(
    service_name: str = ROOT_LOGGER,
    log_level: Optional[str] = None,
    log_file: Optional[str] = None,
    to_stdout: Optional[bool] = None,
    force_reload: bool = False,
) -> logging.Logger:
    """Configure logging once for the whole package and return a module logger.

    Handlers hang off the `stabkit` logger and every service logger is its
    child, so calls from many modules never stack handlers. `to_stdout`
    (default `LOG_TO_STDOUT`) skips the rotating file handler.
    `force_reload=True` rebuilds the handlers, which the CLI does once it has
    parsed `--log-level`.
    """
    global _configured

    if not _configured or force_reload:
        level = (log_level or settings.LOG_LEVEL).upper()
        console_only = settings.LOG_TO_STDOUT if to_stdout is None else to_stdout
        logging.config.dictConfig(_build_config(level, log_file or settings.LOG_FILE, console_only))
        _configured = True

    if service_name == ROOT_LOGGER:
        return logging.getLogger(ROOT_LOGGER)
    return logging.getLogger(f"{ROOT_LOGGER}.{service_name}")
