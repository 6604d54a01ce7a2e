"""
Error codes and exception types shared across the package.

Every exception raised on purpose by the library carries an ``ErrorCode`` so the
CLI and structured logs can report a stable identifier next to the message.
"""

from enum import Enum
from typing import Optional


class ErrorCode(str, Enum):
    PARAMETER_INVALID = "PARAMETER_INVALID"
    DOMAIN_ERROR = "DOMAIN_ERROR"
    NON_CONVERGENCE = "NON_CONVERGENCE"
    DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
    INDEX_OUT_OF_RANGE = "INDEX_OUT_OF_RANGE"
    ZERO_ROW = "ZERO_ROW"
    K_MAX_EXCEEDS_ROWS = "K_MAX_EXCEEDS_ROWS"
    BOUND_DEGENERATE = "BOUND_DEGENERATE"
    CONFIG_INVALID = "CONFIG_INVALID"
    FILE_FORMAT_INVALID = "FILE_FORMAT_INVALID"
    UNKNOWN_POLICY = "UNKNOWN_POLICY"


class NoisyKaczmarzError(Exception):
    """Base class for all library errors."""

    default_code: ErrorCode = ErrorCode.PARAMETER_INVALID

    def __init__(self, message: str, code: Optional[ErrorCode] = None):
        self.code = code or self.default_code
        self.message = message
        super().__init__(f"[{self.code.value}] {message}")


class ParameterError(NoisyKaczmarzError, ValueError):
    """Invalid argument value (negative variance, k_max > m, zero row...)."""


class DimensionMismatchError(ParameterError):
    default_code = ErrorCode.DIMENSION_MISMATCH


class DomainError(NoisyKaczmarzError, ValueError):
    """Argument outside the mathematical domain of a function."""

    default_code = ErrorCode.DOMAIN_ERROR


class ConvergenceError(NoisyKaczmarzError, RuntimeError):
    """An iterative method hit its iteration cap."""

    default_code = ErrorCode.NON_CONVERGENCE


class RowIndexError(NoisyKaczmarzError, IndexError):
    default_code = ErrorCode.INDEX_OUT_OF_RANGE


class ConfigError(NoisyKaczmarzError, ValueError):
    default_code = ErrorCode.CONFIG_INVALID


class FileFormatError(NoisyKaczmarzError, ValueError):
    default_code = ErrorCode.FILE_FORMAT_INVALID
