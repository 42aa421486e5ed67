"""Process lifespan management for CLI invocations."""
from __future__ import annotations

import logging
from contextlib import contextmanager
from typing import Iterator

from riemann_surfaces_ex import __version__
from riemann_surfaces_ex.core.config import Settings
from riemann_surfaces_ex.core.logging import setup_logging
from riemann_surfaces_ex.core.telemetry import setup_telemetry, shutdown_telemetry

logger = logging.getLogger(__name__)


@contextmanager
def session(settings: Settings, service_name: str = "riemann-surfaces-cli") -> Iterator[Settings]:
    """Set up logging and telemetry for one command, tear them down afterwards.

    Args:
        settings: Resolved runtime settings.
        service_name: Service name reported to OpenTelemetry.

    Yields:
        The settings, unchanged.
    """
    # ========== STARTUP ==========
    setup_logging(settings.log_level)
    logger.info(f"🚀 Riemann surface toolkit {__version__} starting up...")

    setup_telemetry(service_name)
    logger.info("📊 OpenTelemetry instrumentation enabled")

    if settings.seed is not None:
        logger.info(f"🎲 Random seed fixed to {settings.seed}")

    try:
        yield settings
    finally:
        # ========== SHUTDOWN ==========
        logger.info("👋 Shutting down...")
        shutdown_telemetry()
        logger.info("✅ Shutdown complete.")
