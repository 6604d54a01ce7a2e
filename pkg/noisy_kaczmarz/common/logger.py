"""
Structured logging utilities.

Library modules log through ``get_logger(__name__)`` and never install
handlers themselves; the CLI calls ``configure_logging`` once at startup.
Experiment lifecycle events go through ``StructuredLogger`` as JSON lines.
"""

import json
import logging
import math
import sys
from datetime import datetime
from typing import Any, Optional

_PACKAGE_LOGGER = "noisy_kaczmarz"
_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, "tolist") and callable(value.tolist):
        # numpy scalars and arrays
        return _jsonable(value.tolist())
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class StructuredLogger:
    """
    Structured logger that outputs JSON-formatted records.

    Each call emits a single line holding the message and any keyword fields,
    so trial outcomes can be grepped or loaded straight into a dataframe.
    """

    def __init__(self, name: str, level: Optional[int] = None):
        """
        Initialize structured logger.

        Args:
            name: Logger name.
            level: Optional level override; by default the level is inherited
                from the package logger configured by the CLI.
        """
        self.logger = logging.getLogger(name)
        if level is not None:
            self.logger.setLevel(level)

    def _log(self, level: int, message: str, **kwargs: Any) -> None:
        if not self.logger.isEnabledFor(level):
            return
        log_data = {
            "timestamp": datetime.now().isoformat(),
            "message": message,
            **{key: _jsonable(value) for key, value in kwargs.items()},
        }
        self.logger.log(level, json.dumps(log_data, sort_keys=True))

    def info(self, message: str, **kwargs: Any) -> None:
        """Log info message with structured data."""
        self._log(logging.INFO, message, **kwargs)

    def error(self, message: str, **kwargs: Any) -> None:
        """Log error message with structured data."""
        self._log(logging.ERROR, message, **kwargs)

    def warning(self, message: str, **kwargs: Any) -> None:
        """Log warning message with structured data."""
        self._log(logging.WARNING, message, **kwargs)

    def debug(self, message: str, **kwargs: Any) -> None:
        """Log debug message with structured data."""
        self._log(logging.DEBUG, message, **kwargs)


def get_logger(name: str) -> logging.Logger:
    """
    Get a standard Python logger.

    Args:
        name: Logger name, normally ``__name__``.

    Returns:
        Logger instance.
    """
    return logging.getLogger(name)


def configure_logging(level: str = "WARNING") -> None:
    """
    Attach a single stream handler to the package logger.

    Calling this more than once only updates the level and rebinds the
    handler to the current stderr.

    Args:
        level: Level name (DEBUG, INFO, WARNING, ERROR).
    """
    root = logging.getLogger(_PACKAGE_LOGGER)
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    root.setLevel(numeric)
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT))
        root.addHandler(handler)
    for handler in root.handlers:
        handler.setLevel(numeric)
        if type(handler) is logging.StreamHandler:
            handler.setStream(sys.stderr)
