"""
Common utilities: errors, logging, runtime settings and telemetry.
"""

import importlib
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from noisy_kaczmarz.common.config import RuntimeSettings
    from noisy_kaczmarz.common.errors import (
        ConfigError,
        ConvergenceError,
        DimensionMismatchError,
        DomainError,
        ErrorCode,
        FileFormatError,
        NoisyKaczmarzError,
        ParameterError,
        RowIndexError,
    )
    from noisy_kaczmarz.common.logger import StructuredLogger, configure_logging, get_logger
    from noisy_kaczmarz.common.telemetry import get_tracer, record_trial, setup_telemetry

_LAZY_IMPORTS = {
    "RuntimeSettings": ("noisy_kaczmarz.common.config", "RuntimeSettings"),
    "ErrorCode": ("noisy_kaczmarz.common.errors", "ErrorCode"),
    "NoisyKaczmarzError": ("noisy_kaczmarz.common.errors", "NoisyKaczmarzError"),
    "ParameterError": ("noisy_kaczmarz.common.errors", "ParameterError"),
    "DimensionMismatchError": ("noisy_kaczmarz.common.errors", "DimensionMismatchError"),
    "DomainError": ("noisy_kaczmarz.common.errors", "DomainError"),
    "ConvergenceError": ("noisy_kaczmarz.common.errors", "ConvergenceError"),
    "RowIndexError": ("noisy_kaczmarz.common.errors", "RowIndexError"),
    "ConfigError": ("noisy_kaczmarz.common.errors", "ConfigError"),
    "FileFormatError": ("noisy_kaczmarz.common.errors", "FileFormatError"),
    "get_logger": ("noisy_kaczmarz.common.logger", "get_logger"),
    "configure_logging": ("noisy_kaczmarz.common.logger", "configure_logging"),
    "StructuredLogger": ("noisy_kaczmarz.common.logger", "StructuredLogger"),
    "setup_telemetry": ("noisy_kaczmarz.common.telemetry", "setup_telemetry"),
    "get_tracer": ("noisy_kaczmarz.common.telemetry", "get_tracer"),
    "record_trial": ("noisy_kaczmarz.common.telemetry", "record_trial"),
}


def __getattr__(name: str) -> Any:
    if name in _LAZY_IMPORTS:
        module_name, attr_name = _LAZY_IMPORTS[name]
        module = importlib.import_module(module_name)
        value = getattr(module, attr_name)
        globals()[name] = value
        return value
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")


def __dir__() -> list[str]:
    return sorted(list(globals().keys()) + list(_LAZY_IMPORTS.keys()))


__all__ = list(_LAZY_IMPORTS.keys())
