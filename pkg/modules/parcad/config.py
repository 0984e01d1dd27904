"""Environment-driven defaults for the CLI and the pipeline configuration."""

from __future__ import annotations

import logging
import os

from .errors import ConfigError

DEFAULT_WORKERS = 1
DEFAULT_CELL_CAP = 1_000_000
DEFAULT_CLAUSE_BUDGET = 10_000
DEFAULT_CLAUSE_TIMEOUT = 0

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)-5s - %(message)s"


def env_int(name: str, default: int, *, allow_zero: bool = False) -> int:
    raw_value = os.environ.get(name)
    if raw_value is None or raw_value.strip() == "":
        return default
    try:
        value = int(raw_value)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {raw_value!r}") from exc
    if value < 0 or (value == 0 and not allow_zero):
        raise ConfigError(f"{name} must be positive")
    return value


def default_workers() -> int:
    return env_int("PARCAD_WORKERS", DEFAULT_WORKERS)


def default_cell_cap() -> int:
    return env_int("PARCAD_CELL_CAP", DEFAULT_CELL_CAP)


def default_clause_budget() -> int:
    return env_int("PARCAD_CLAUSE_BUDGET", DEFAULT_CLAUSE_BUDGET)


def default_clause_timeout() -> float | None:
    """Per-clause timeout in seconds; 0 disables it."""
    seconds = env_int("PARCAD_CLAUSE_TIMEOUT", DEFAULT_CLAUSE_TIMEOUT, allow_zero=True)
    return float(seconds) if seconds else None


def default_log_level() -> str:
    level = os.environ.get("PARCAD_LOG_LEVEL", "WARNING").upper()
    if level not in logging.getLevelNamesMapping():
        raise ConfigError(f"PARCAD_LOG_LEVEL must be a logging level name, got {level!r}")
    return level


def configure_logging(level: str | int) -> logging.Logger:
    """Install one stream handler on the package logger; idempotent."""
    logger = logging.getLogger("parcad")
    if not any(getattr(handler, "_parcad", False) for handler in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._parcad = True  # type: ignore[attr-defined]
        logger.addHandler(handler)
        logger.propagate = False
    logger.setLevel(level)
    return logger
