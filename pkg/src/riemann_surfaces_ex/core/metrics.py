"""Custom metrics for monitoring the Riemann surface toolkit."""
from __future__ import annotations

import time
from contextlib import contextmanager
from typing import Generator

from opentelemetry import metrics

from riemann_surfaces_ex.core.telemetry import get_meter

# Get meter for custom metrics
meter = get_meter(__name__)

# Command metrics
command_duration = meter.create_histogram(
    name="riemann_command_duration_seconds",
    description="CLI command duration in seconds",
    unit="s"
)

command_count = meter.create_counter(
    name="riemann_command_count",
    description="Total number of CLI commands run",
    unit="1"
)

error_count = meter.create_counter(
    name="riemann_error_count",
    description="Total number of failed commands by exit code",
    unit="1"
)

# Path tracking metrics
tracker_steps = meter.create_counter(
    name="riemann_tracker_accepted_steps",
    description="Accepted predictor-corrector steps",
    unit="1"
)

tracker_rejections = meter.create_counter(
    name="riemann_tracker_rejected_steps",
    description="Rejected predictor-corrector steps (step halvings)",
    unit="1"
)

monodromy_duration = meter.create_histogram(
    name="riemann_monodromy_duration_seconds",
    description="Time spent computing all loop permutations of a curve",
    unit="s"
)

# Quadrature metrics
quadrature_nodes = meter.create_histogram(
    name="riemann_quadrature_nodes",
    description="Node count at which a segment integral converged",
    unit="1"
)

bilinear_residual = meter.create_histogram(
    name="riemann_bilinear_residual",
    description="Relative residual of the first bilinear relation",
    unit="1"
)

# Jacobi inversion metrics
newton_iterations = meter.create_histogram(
    name="riemann_newton_iterations",
    description="Newton iterations per continuation increment",
    unit="1"
)


@contextmanager
def measure_duration(histogram: metrics.Histogram, attributes: dict[str, str] | None = None) -> Generator[None, None, None]:
    """Context manager to measure duration and record to histogram.

    Args:
        histogram: The histogram to record duration to.
        attributes: Optional attributes to add to the measurement.

    Yields:
        None
    """
    start_time = time.time()
    try:
        yield
    finally:
        duration = time.time() - start_time
        histogram.record(duration, attributes=attributes or {})


def record_command(command: str, exit_code: int, duration: float) -> None:
    """Record CLI command metrics.

    Args:
        command: The CLI verb.
        exit_code: Process exit code of the command.
        duration: Command duration in seconds.
    """
    attributes = {
        "command": command,
        "exit_code": str(exit_code)
    }

    command_count.add(1, attributes)
    command_duration.record(duration, attributes)

    if exit_code != 0:
        error_count.add(1, attributes)


def record_tracking(accepted: int, rejected: int, path_kind: str) -> None:
    """Record step statistics of one continuation.

    Args:
        accepted: Number of accepted steps.
        rejected: Number of rejected steps.
        path_kind: Kind of path tracked (segment_chain, loop_around).
    """
    attributes = {"path_kind": path_kind}
    tracker_steps.add(accepted, attributes)
    tracker_rejections.add(rejected, attributes)


def record_quadrature(nodes: int, rule: str) -> None:
    """Record the node count a quadrature converged at.

    Args:
        nodes: Number of nodes used.
        rule: Quadrature rule (gauss_chebyshev, gauss_legendre, trapezoid).
    """
    quadrature_nodes.record(nodes, {"rule": rule})


def record_bilinear_residual(residual: float, genus: int) -> None:
    """Record the first bilinear relation residual of a period matrix.

    Args:
        residual: Relative residual ||Omega Q Omega^T|| / ||Omega||^2.
        genus: Genus of the curve.
    """
    bilinear_residual.record(residual, {"genus": str(genus)})


def record_newton(iterations: int, genus: int) -> None:
    """Record the Newton iterations spent on one continuation increment.

    Args:
        iterations: Iterations used.
        genus: Genus of the curve.
    """
    newton_iterations.record(iterations, {"genus": str(genus)})
