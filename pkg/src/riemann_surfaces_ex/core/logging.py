from __future__ import annotations

import logging
import sys


def setup_logging(level: str = "INFO") -> None:
    """Sets up logging for the toolkit.

    Configures the logging level and format, and adds a console handler on
    stderr so that JSON written to stdout stays machine-readable.

    Args:
        level: Name of the root logging level (e.g. "INFO", "DEBUG").
    """
    # Configure the root logger
    root_logger = logging.getLogger()

    # Clear any existing handlers
    root_logger.handlers.clear()

    numeric_level = logging.getLevelName(level.upper())
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO
    root_logger.setLevel(numeric_level)

    # Create console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(numeric_level)

    # Create formatter and add it to the handler
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    console_handler.setFormatter(formatter)

    # Add the handler to the root logger
    root_logger.addHandler(console_handler)

    # Exporter internals are noisy at INFO
    logging.getLogger("opentelemetry").setLevel(logging.WARNING)
    logging.getLogger("urllib3").setLevel(logging.WARNING)
