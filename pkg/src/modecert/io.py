"""Reading samples and writing JSON reports."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DegenerateSample, ParseError
from .sample import Sample

__all__ = ["read_sample", "parse_sample_text", "dumps", "write_json", "to_jsonable"]


def parse_sample_text(text: str) -> Sample:
    """One number per line; blank lines and lines starting with ``#`` are skipped."""
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        # tolerate a trailing comma from single-column CSV exports
        token = line.rstrip(",").strip()
        try:
            v = float(token)
        except ValueError:
            raise ParseError(f"not a number: {raw!r}", lineno) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value: {raw!r}", lineno)
        values.append(v)
    if len(set(values)) < 2:
        raise DegenerateSample(f"need at least two distinct observations, got {len(set(values))}")
    return Sample.from_data(values)


def read_sample(path) -> Sample:
    return parse_sample_text(Path(path).read_text())


def to_jsonable(obj):
    """Convert numpy containers and scalars to plain Python objects."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return format(x, ".17g")


def _encode(obj, indent, level) -> str:
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            # numeric vectors stay on one line
            return "[" + ", ".join(_encode(v, None, 0) for v in obj) + "]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with every float written at 17 significant digits.

    ``json.loads`` of the output gives back bit-identical doubles.
    """
    return _encode(to_jsonable(obj), indent, 0)


def write_json(obj, path=None) -> str:
    text = dumps(obj) + "\n"
    if path is None:
        print(text, end="")
    else:
        Path(path).write_text(text)
    return text
