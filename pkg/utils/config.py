"""
Environment and experiment-file configuration for the terrace solver.
Handles loading of environment variables and JSON experiment bundles.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()

LOG_LEVELS = {"error": "ERROR", "warning": "WARNING", "info": "INFO", "debug": "DEBUG"}

TOLERANCE_ENV = {
    "tol_ode": "TERRACE_TOL_ODE",
    "tol_c": "TERRACE_TOL_C",
    "tol_snap": "TERRACE_TOL_SNAP",
    "tol_profile": "TERRACE_TOL_PROFILE",
}

CONFIG_BLOCKS = ("reaction", "tolerances", "pde", "output")


def get_logging_config() -> Dict[str, Any]:
    """Get the logging level requested through TERRACE_LOG."""
    raw = os.getenv("TERRACE_LOG", "info")
    level = LOG_LEVELS.get(raw.strip().lower())
    return {
        "raw": raw,
        "level": level or "INFO",
        "invalid": level is None,
    }


def get_tolerance_defaults() -> Dict[str, float]:
    """Get tolerance overrides from the environment (only the ones that are set)."""
    overrides = {}
    for name, var in TOLERANCE_ENV.items():
        value = os.getenv(var)
        if value is None or value == "":
            continue
        try:
            overrides[name] = float(value)
        except ValueError:
            raise ConfigError(f"{var} must be a number, got '{value}'")
    return overrides


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Load a JSON experiment bundle.

    A bundle may carry the blocks `reaction` (inline reaction document or a path
    relative to the bundle), `tolerances`, `pde` and `output`.

    Args:
        path: Path of the bundle

    Returns:
        Dictionary with the recognised blocks

    Raises:
        ConfigError: If the file is missing, is not JSON, or has unknown blocks
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {path}")

    try:
        document = json.loads(config_path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}")

    if not isinstance(document, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")

    unknown = sorted(set(document) - set(CONFIG_BLOCKS))
    if unknown:
        raise ConfigError(
            f"Unknown config blocks {unknown}. Supported blocks: {list(CONFIG_BLOCKS)}"
        )

    reaction = document.get("reaction")
    if isinstance(reaction, str) and not Path(reaction).is_absolute():
        document["reaction"] = str(config_path.parent / reaction)

    return document


def validate_config(config: Dict[str, Any], read_paths: Optional[List[str]] = None) -> None:
    """
    Validate a merged run configuration.

    Args:
        config: Merged configuration with a `tolerances` mapping
        read_paths: Input files that must exist

    Raises:
        ConfigError: Listing every invalid field
    """
    problems = []

    for name, value in config.get("tolerances", {}).items():
        if not isinstance(value, (int, float)) or not value > 0:
            problems.append(f"{name} must be > 0 (got {value})")

    for path in read_paths or []:
        if not Path(path).is_file():
            problems.append(f"input file not found: {path}")

    if problems:
        raise ConfigError(f"Invalid configuration: {'; '.join(problems)}")
