"""
Logging configuration for development and production runs.
"""

import logging
import sys
from typing import Optional

from .config import get_logging_config

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_development_logging(level: str = "DEBUG") -> None:
    """
    Configure logging for development with detailed output on stdout.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
    """
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format=LOG_FORMAT,
        datefmt=DATE_FORMAT,
        handlers=[logging.StreamHandler(sys.stdout)],
        force=True,
    )

    # Bisection and chaining are chatty at DEBUG; integration segments even more
    logging.getLogger("utils.speed_solver").setLevel(logging.DEBUG)
    logging.getLogger("utils.phase_plane").setLevel(logging.INFO)


def setup_production_logging(level: str = "INFO") -> None:
    """
    Configure logging for batch runs. Messages go to stderr so that stdout
    carries only the one-line command summary.

    Args:
        level: Logging level (INFO, WARNING, ERROR)
    """
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format=LOG_FORMAT,
        datefmt=DATE_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def configure_logging() -> str:
    """
    Pick the logging setup from TERRACE_LOG.

    Returns:
        The effective level name
    """
    config = get_logging_config()
    level = config["level"]

    if level == "DEBUG":
        setup_development_logging(level)
    else:
        setup_production_logging(level)

    if config["invalid"]:
        get_logger(__name__).warning(
            f"Unknown TERRACE_LOG value '{config['raw']}', falling back to INFO"
        )

    return level


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Get a logger instance with the specified name.

    Args:
        name: Logger name, defaults to calling module name

    Returns:
        Logger instance
    """
    return logging.getLogger(name)
