"""Deterministic JSON rendering with full-precision floats.

Checkpoints, embedding tables, histories, and reports are written through
this module so that a given in-memory value always produces identical
bytes. Floats are rendered in scientific notation with 18 significant
digits, which round-trips float64 exactly; ``json.loads`` parses them
back without loss.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .errors import DataError


def format_float(x: float) -> str:
    """Render a finite float in scientific notation (17 digits after the point)."""
    if not math.isfinite(x):
        raise DataError(f"cannot serialize non-finite value {x!r}")
    return f"{x:.17e}"


def render(value: Any, indent: int = 0, _level: int = 0) -> str:
    """Serialize nested dicts/lists/scalars to JSON text.

    Dict key order is preserved (callers construct in a fixed order), so
    output bytes are a pure function of the value.
    """
    pad = " " * (indent * (_level + 1)) if indent else ""
    close_pad = " " * (indent * _level) if indent else ""
    sep = ",\n" if indent else ", "
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k))}: {render(v, indent, _level + 1)}"
            for k, v in value.items()
        ]
        body = sep.join(items)
        return "{\n" + body + "\n" + close_pad + "}" if indent else "{" + body + "}"
    if isinstance(value, (list, tuple)):
        if len(value) == 0:
            return "[]"
        items = [f"{pad}{render(v, indent, _level + 1)}" for v in value]
        body = sep.join(items)
        return "[\n" + body + "\n" + close_pad + "]" if indent else "[" + body + "]"
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    raise TypeError(f"unsupported type for JSON rendering: {type(value)!r}")


def parse(text: str) -> Any:
    """Parse JSON text, rejecting non-finite numbers."""
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON: {exc}") from exc
    _reject_non_finite(value)
    return value


def _reject_non_finite(value: Any) -> None:
    if isinstance(value, float) and not math.isfinite(value):
        raise DataError("non-finite number in JSON input")
    if isinstance(value, dict):
        for v in value.values():
            _reject_non_finite(v)
    elif isinstance(value, list):
        for v in value:
            _reject_non_finite(v)
