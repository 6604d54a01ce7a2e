"""
Unit tests for errors, structured logging, runtime settings and telemetry.
"""

import json
import logging
import math
from pathlib import Path

import numpy as np
import pytest

from noisy_kaczmarz.common.config import (
    ENV_LOG_LEVEL,
    ENV_OUT_DIR,
    ENV_WORKERS,
    RuntimeSettings,
)
from noisy_kaczmarz.common.errors import (
    ConfigError,
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    ErrorCode,
    NoisyKaczmarzError,
    ParameterError,
    RowIndexError,
)
from noisy_kaczmarz.common.logger import StructuredLogger, configure_logging
from noisy_kaczmarz.common.telemetry import get_tracer, record_trial, telemetry_endpoint_from_env

pytestmark = pytest.mark.unit


def test_error_codes_and_hierarchy():
    err = DimensionMismatchError("bad shape")
    assert err.code == ErrorCode.DIMENSION_MISMATCH
    assert str(err) == "[DIMENSION_MISMATCH] bad shape"
    assert isinstance(err, ParameterError) and isinstance(err, ValueError)
    assert isinstance(ConvergenceError("x"), RuntimeError)
    assert isinstance(RowIndexError("x"), IndexError)
    assert DomainError("x").code == ErrorCode.DOMAIN_ERROR
    assert ConfigError("x").code == ErrorCode.CONFIG_INVALID
    custom = ParameterError("zero row", code=ErrorCode.ZERO_ROW)
    assert custom.code == ErrorCode.ZERO_ROW
    assert custom.message == "zero row"
    assert all(issubclass(cls, NoisyKaczmarzError) for cls in (ConfigError, DomainError))


def test_structured_logger_emits_json(caplog):
    """Test one JSON line per event, with numpy values and non-finite floats converted."""
    events = StructuredLogger("noisy_kaczmarz.test_events")
    with caplog.at_level(logging.INFO, logger="noisy_kaczmarz.test_events"):
        events.info(
            "trial_finished",
            trial=np.int64(3),
            errors=np.array([1.5, 0.25]),
            gap=float("nan"),
            nested={"k": (1, 2), "inf": math.inf},
        )
        events.debug("hidden")
    messages = [record.getMessage() for record in caplog.records]
    assert len(messages) == 1
    payload = json.loads(messages[0])
    assert payload["message"] == "trial_finished"
    assert payload["trial"] == 3
    assert payload["errors"] == [1.5, 0.25]
    assert payload["gap"] is None
    assert payload["nested"] == {"inf": None, "k": [1, 2]}
    assert "timestamp" in payload


def test_configure_logging_is_idempotent():
    package = logging.getLogger("noisy_kaczmarz")
    before = list(package.handlers)
    try:
        configure_logging("INFO")
        configure_logging("debug")
        assert package.level == logging.DEBUG
        assert len(package.handlers) == max(1, len(before))
        configure_logging("bogus")
        assert package.level == logging.WARNING
    finally:
        for handler in list(package.handlers):
            if handler not in before:
                package.removeHandler(handler)
        package.setLevel(logging.NOTSET)


def test_runtime_settings_from_env():
    settings = RuntimeSettings.from_env(
        {ENV_OUT_DIR: "/tmp/runs", ENV_WORKERS: "3", ENV_LOG_LEVEL: "info"}
    )
    assert settings.out_dir == Path("/tmp/runs")
    assert settings.workers == 3
    assert settings.log_level == "INFO"


def test_runtime_settings_fallbacks(caplog):
    """Test defaults and warnings on malformed values."""
    defaults = RuntimeSettings.from_env({})
    assert defaults.out_dir == Path("results")
    assert 1 <= defaults.workers <= 4
    assert defaults.log_level == "WARNING"
    with caplog.at_level(logging.WARNING, logger="noisy_kaczmarz.common.config"):
        bad = RuntimeSettings.from_env({ENV_WORKERS: "many", ENV_LOG_LEVEL: "loud"})
        clamped = RuntimeSettings.from_env({ENV_WORKERS: "1000"})
    assert bad.workers == defaults.workers
    assert bad.log_level == "WARNING"
    assert clamped.workers == 64
    assert any("Invalid" in record.getMessage() for record in caplog.records)


def test_telemetry_is_noop_until_configured(monkeypatch):
    """Test that tracing and metrics are safe without an exporter."""
    monkeypatch.delenv("OTEL_EXPORTER_OTLP_ENDPOINT", raising=False)
    assert telemetry_endpoint_from_env() is None
    record_trial(0.5, experiment="unit")
    with get_tracer().start_as_current_span("unit-span") as span:
        span.set_attribute("trials", 1)
    monkeypatch.setenv("OTEL_EXPORTER_OTLP_ENDPOINT", " http://collector:4317 ")
    assert telemetry_endpoint_from_env() == "http://collector:4317"
