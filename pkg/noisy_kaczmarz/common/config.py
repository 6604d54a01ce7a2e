"""
Runtime settings read from the environment.

These are process-level knobs (default output directory, worker count, log
level). Experiment parameters live in ``noisy_kaczmarz.config_loader``.
"""

import os
from pathlib import Path
from typing import Mapping, Optional

from pydantic import BaseModel, Field

from noisy_kaczmarz.common.logger import get_logger

logger = get_logger(__name__)

ENV_OUT_DIR = "NOISY_KACZMARZ_OUT_DIR"
ENV_WORKERS = "NOISY_KACZMARZ_WORKERS"
ENV_LOG_LEVEL = "NOISY_KACZMARZ_LOG_LEVEL"

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
_MAX_WORKERS = 64


def _default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))


def _read_workers(env: Mapping[str, str]) -> int:
    raw_value = env.get(ENV_WORKERS)
    if raw_value is None or not raw_value.strip():
        return _default_workers()
    try:
        workers = int(raw_value)
    except ValueError:
        logger.warning(f"Invalid {ENV_WORKERS}='{raw_value}', using {_default_workers()}")
        return _default_workers()
    if workers < 1 or workers > _MAX_WORKERS:
        logger.warning(f"{ENV_WORKERS} out of range ({workers}), clamping to [1, {_MAX_WORKERS}]")
        workers = max(1, min(_MAX_WORKERS, workers))
    return workers


def _read_log_level(env: Mapping[str, str]) -> str:
    raw_value = env.get(ENV_LOG_LEVEL, "WARNING").strip().upper()
    if raw_value not in _LOG_LEVELS:
        logger.warning(f"Invalid {ENV_LOG_LEVEL}='{raw_value}', defaulting to WARNING")
        return "WARNING"
    return raw_value


class RuntimeSettings(BaseModel):
    """
    Process-wide defaults.

    Attributes:
        out_dir: Directory that commands write into when ``--out`` is absent.
        workers: Default size of the trial worker pool.
        log_level: Level name passed to ``configure_logging``.
    """

    out_dir: Path = Field(default=Path("results"))
    workers: int = Field(default_factory=_default_workers, ge=1)
    log_level: str = Field(default="WARNING")

    @classmethod
    def from_env(cls, env: Optional[Mapping[str, str]] = None) -> "RuntimeSettings":
        """
        Build settings from environment variables, falling back to defaults
        (with a warning) on malformed values.
        """
        source = os.environ if env is None else env
        out_dir = source.get(ENV_OUT_DIR, "").strip() or "results"
        return cls(
            out_dir=Path(out_dir),
            workers=_read_workers(source),
            log_level=_read_log_level(source),
        )
