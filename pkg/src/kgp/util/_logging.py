"""
Logging configuration for the kgp command line
"""

from __future__ import annotations

import logging
import os
import sys

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(
    level: str = "INFO",
    format_str: str | None = None,
    log_file: str | None = None,
) -> logging.Logger:
    """
    Configure logging for a command-line run. The library never calls this.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        format_str: Custom format string for log messages
        log_file: Path to write logs to, in addition to stderr

    Returns:
        The `kgp` package logger
    """
    if not format_str:
        format_str = DEFAULT_FORMAT

    numeric_level = getattr(logging, level.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"Invalid log level: {level}")

    # stdout carries the command summaries
    logging.basicConfig(
        level=numeric_level,
        format=format_str,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)

        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(logging.Formatter(format_str))
        logging.getLogger().addHandler(file_handler)

    logger = logging.getLogger("kgp")
    logger.setLevel(numeric_level)
    return logger
