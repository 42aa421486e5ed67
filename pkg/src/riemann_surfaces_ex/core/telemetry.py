"""OpenTelemetry instrumentation configuration for the Riemann surface toolkit."""
from __future__ import annotations

import logging
import os

from opentelemetry import metrics, trace
from opentelemetry.exporter.otlp.proto.http.metric_exporter import OTLPMetricExporter
from opentelemetry.exporter.otlp.proto.http.trace_exporter import OTLPSpanExporter
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor

from riemann_surfaces_ex import __version__

logger = logging.getLogger(__name__)

_tracer_provider: TracerProvider | None = None
_meter_provider: MeterProvider | None = None


def setup_telemetry(service_name: str = "riemann-surfaces-cli") -> None:
    """Set up OpenTelemetry tracing and metrics for one CLI process.

    Exporters are attached only when ``OTEL_EXPORTER_OTLP_ENDPOINT`` is set;
    without it the providers record locally and nothing leaves the process.

    Args:
        service_name: Name of the service for telemetry.
    """
    global _tracer_provider, _meter_provider

    if _tracer_provider is not None:
        logger.debug("OpenTelemetry already configured for this process")
        return

    # Create resource with service information
    resource = Resource.create({
        "service.name": service_name,
        "service.version": __version__,
        "deployment.environment": os.getenv("RS_ENVIRONMENT", "local"),
    })

    endpoint = os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT")

    _tracer_provider = setup_tracing(resource, endpoint)
    _meter_provider = setup_metrics(resource, endpoint)

    if endpoint:
        logger.info(f"OpenTelemetry exporting to {endpoint} for {service_name}")
    else:
        logger.debug(f"OpenTelemetry configured without exporter for {service_name}")


def setup_tracing(resource: Resource, endpoint: str | None) -> TracerProvider:
    """Configure tracing, with an OTLP exporter when an endpoint is known.

    Args:
        resource: OpenTelemetry resource with service information.
        endpoint: Base URL of the OTLP collector, or None.

    Returns:
        The installed tracer provider.
    """
    tracer_provider = TracerProvider(resource=resource)

    if endpoint:
        otlp_exporter = OTLPSpanExporter(
            endpoint=f"{endpoint.rstrip('/')}/v1/traces",
            timeout=10
        )
        tracer_provider.add_span_processor(BatchSpanProcessor(otlp_exporter))

    trace.set_tracer_provider(tracer_provider)
    return tracer_provider


def setup_metrics(resource: Resource, endpoint: str | None) -> MeterProvider:
    """Configure metrics collection, with an OTLP exporter when an endpoint is known.

    Args:
        resource: OpenTelemetry resource with service information.
        endpoint: Base URL of the OTLP collector, or None.

    Returns:
        The installed meter provider.
    """
    readers = []
    if endpoint:
        otlp_exporter = OTLPMetricExporter(
            endpoint=f"{endpoint.rstrip('/')}/v1/metrics",
            timeout=10
        )
        readers.append(PeriodicExportingMetricReader(
            exporter=otlp_exporter,
            export_interval_millis=10000
        ))

    meter_provider = MeterProvider(resource=resource, metric_readers=readers)
    metrics.set_meter_provider(meter_provider)
    return meter_provider


def shutdown_telemetry() -> None:
    """Flush the providers installed by :func:`setup_telemetry`; the SDK shuts them down at exit."""
    if _tracer_provider is not None:
        _tracer_provider.force_flush()
    if _meter_provider is not None:
        _meter_provider.force_flush()


def get_tracer(name: str) -> trace.Tracer:
    """Get a tracer for creating custom spans.

    Args:
        name: Name of the tracer (typically module name).

    Returns:
        Tracer instance.
    """
    return trace.get_tracer(name)


def get_meter(name: str) -> metrics.Meter:
    """Get a meter for creating custom metrics.

    Args:
        name: Name of the meter (typically module name).

    Returns:
        Meter instance.
    """
    return metrics.get_meter(name)
