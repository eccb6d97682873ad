"""
Machine-readable outputs: JSON descriptors and CSV tables.

All floats are written with 17 significant digits so values survive a
write/read cycle bit for bit. Tables go through pandas.
"""

import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd

from .logging_config import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"


def format_float(value: float) -> str:
    if not math.isfinite(value):
        return "null"
    text = FLOAT_FORMAT % value
    # Keep integral values recognisable as floats
    if all(ch not in text for ch in ".en"):
        text += ".0"
    return text


def to_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """
    JSON text with 17-significant-digit floats. Key order is preserved, so equal
    inputs give byte-identical output.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)

    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [f"{pad}{to_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def write_json(obj: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(obj) + "\n")
    logger.debug(f"Wrote {path}")
    return path


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write a table with its header and no index."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {path} ({len(frame)} rows)")
    return path


def read_table(path: Union[str, Path], columns: tuple) -> pd.DataFrame:
    """
    Read a CSV table and check it carries the expected header.

    Raises:
        ValueError: If a column is missing
    """
    frame = pd.read_csv(path)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ValueError(f"{path} is missing columns {missing}; found {list(frame.columns)}")
    return frame[list(columns)].astype(float)
