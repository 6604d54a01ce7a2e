"""
OpenTelemetry tracing and metrics for experiment runs.

Nothing is exported unless ``setup_telemetry`` is called (the CLI does so
when ``OTEL_EXPORTER_OTLP_ENDPOINT`` is set). Until then ``get_tracer``
returns the API's no-op tracer and the ``record_*`` helpers do nothing.
"""

import os
from typing import Optional

from opentelemetry import metrics, trace
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
from opentelemetry.sdk.metrics.view import ExplicitBucketHistogramAggregation, View
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor
from opentelemetry.sdk.trace.sampling import TraceIdRatioBased

from noisy_kaczmarz.common.logger import get_logger

logger = get_logger(__name__)

ENV_ENDPOINT = "OTEL_EXPORTER_OTLP_ENDPOINT"
ENV_SAMPLE_RATE = "OTEL_SAMPLE_RATE"

_tracer_provider: Optional[TracerProvider] = None
_tracer: Optional[trace.Tracer] = None
_meter_provider: Optional[MeterProvider] = None
_meter: Optional[metrics.Meter] = None

_trials_counter: Optional[metrics.Counter] = None
_trial_seconds_histogram: Optional[metrics.Histogram] = None


def _get_trace_sample_rate() -> float:
    """
    Get trace sampling rate from environment.

    Uses OTEL_SAMPLE_RATE, defaults to 1.0 (experiment runs are few and long).
    Values outside [0, 1] are clamped.
    """
    raw_value = os.getenv(ENV_SAMPLE_RATE, "1.0")
    try:
        rate = float(raw_value)
    except ValueError:
        logger.warning(f"Invalid {ENV_SAMPLE_RATE}='{raw_value}', defaulting to 1.0")
        return 1.0

    if rate < 0.0 or rate > 1.0:
        logger.warning(f"{ENV_SAMPLE_RATE} out of range ({rate}), clamping to [0.0, 1.0]")
        rate = max(0.0, min(1.0, rate))
    return rate


def telemetry_endpoint_from_env() -> Optional[str]:
    endpoint = os.getenv(ENV_ENDPOINT, "").strip()
    return endpoint or None


def setup_telemetry(
    service_name: str = "noisy-kaczmarz",
    otlp_endpoint: str = "http://localhost:4317",
) -> trace.Tracer:
    """
    Install OTLP span and metric exporters.

    Args:
        service_name: Value of the ``service.name`` resource attribute.
        otlp_endpoint: OTLP gRPC endpoint; overridden by OTEL_EXPORTER_OTLP_ENDPOINT.

    Returns:
        Tracer for experiment spans, or a no-op tracer if setup fails.
    """
    global _tracer_provider, _tracer, _meter_provider, _meter
    global _trials_counter, _trial_seconds_histogram

    try:
        from opentelemetry.exporter.otlp.proto.grpc.metric_exporter import OTLPMetricExporter
        from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter

        endpoint_from_env = telemetry_endpoint_from_env()
        if endpoint_from_env:
            otlp_endpoint = endpoint_from_env
            logger.info(f"Using OTLP endpoint from env {ENV_ENDPOINT}={otlp_endpoint}")

        from noisy_kaczmarz import __version__

        resource = Resource.create({
            "service.name": service_name,
            "service.version": __version__,
        })

        sample_rate = _get_trace_sample_rate()
        _tracer_provider = TracerProvider(resource=resource, sampler=TraceIdRatioBased(sample_rate))
        _tracer_provider.add_span_processor(
            BatchSpanProcessor(OTLPSpanExporter(endpoint=otlp_endpoint, insecure=True))
        )
        trace.set_tracer_provider(_tracer_provider)
        _tracer = trace.get_tracer(__name__)

        metric_reader = PeriodicExportingMetricReader(
            OTLPMetricExporter(endpoint=otlp_endpoint, insecure=True),
            export_interval_millis=5000,
        )
        trial_buckets = [0.01, 0.05, 0.1, 0.25, 0.5, 1, 2.5, 5, 10, 30]
        views = [
            View(
                instrument_name="kaczmarz_trial_seconds",
                aggregation=ExplicitBucketHistogramAggregation(boundaries=trial_buckets),
            )
        ]
        _meter_provider = MeterProvider(resource=resource, metric_readers=[metric_reader], views=views)
        metrics.set_meter_provider(_meter_provider)
        _meter = metrics.get_meter(__name__)

        _trials_counter = _meter.create_counter(
            name="kaczmarz_trials_total",
            description="Completed solver trials",
            unit="1",
        )
        _trial_seconds_histogram = _meter.create_histogram(
            name="kaczmarz_trial_seconds",
            description="Wall time of one trial (all policies)",
            unit="s",
        )

        logger.info(
            f"OpenTelemetry initialized for '{service_name}' "
            f"with OTLP endpoint {otlp_endpoint} (sample_rate={sample_rate})"
        )
        return _tracer

    except Exception as e:
        logger.error(f"Failed to setup OpenTelemetry: {e}", exc_info=True)
        return trace.NoOpTracer()


def shutdown_telemetry() -> None:
    """Flush and shut down providers installed by ``setup_telemetry``."""
    global _tracer_provider, _meter_provider
    if _tracer_provider is not None:
        _tracer_provider.shutdown()
        _tracer_provider = None
    if _meter_provider is not None:
        _meter_provider.shutdown()
        _meter_provider = None


def get_tracer() -> trace.Tracer:
    """
    Get the global tracer instance.

    Returns:
        Tracer instance; a no-op tracer when telemetry was never set up.
    """
    global _tracer
    if _tracer is None:
        _tracer = trace.get_tracer(__name__)
    return _tracer


def record_trial(seconds: float, experiment: str) -> None:
    """
    Record one finished trial.

    Args:
        seconds: Wall time of the trial.
        experiment: Experiment name, used as the only metric attribute.
    """
    if _trials_counter is None or _trial_seconds_histogram is None:
        return
    attributes = {"experiment": experiment}
    _trials_counter.add(1, attributes)
    _trial_seconds_histogram.record(seconds, attributes)
