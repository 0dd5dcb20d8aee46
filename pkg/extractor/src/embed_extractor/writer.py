"""Embedding table serialization in the shared line-oriented format.

Contract with the core toolkit: first line ``{"dimension": D,
"source_tag": ...}``, then one ``{"concept", "label", "vector"}`` object
per line, numbers in scientific notation with 18 significant digits
(lossless for float64). Output lands atomically: content goes to a
``.tmp`` sibling first and is renamed into place, so consumers never see
a partial table.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DimensionError, ExtractorError


def _vector_json(vector: Sequence[float]) -> str:
    parts = []
    for x in vector:
        value = float(x)
        if not math.isfinite(value):
            raise ExtractorError(f"non-finite embedding component {value!r}")
        parts.append(f"{value:.17e}")
    return "[" + ", ".join(parts) + "]"


def header_line(dimension: int, source_tag: str) -> str:
    return f'{{"dimension": {int(dimension)}, "source_tag": {json.dumps(source_tag)}}}'


def record_line(concept: str, label: str, vector: Sequence[float], dimension: int) -> str:
    if len(vector) != dimension:
        raise DimensionError(
            f"vector for ({concept!r}, {label!r}) has length {len(vector)}, expected {dimension}"
        )
    return (
        f'{{"concept": {json.dumps(concept)}, "label": {json.dumps(label)}, '
        f'"vector": {_vector_json(vector)}}}'
    )


def table_text(
    rows: Iterable[tuple[str, str, Sequence[float]]], dimension: int, source_tag: str
) -> str:
    lines = [header_line(dimension, source_tag)]
    lines.extend(record_line(concept, label, vector, dimension) for concept, label, vector in rows)
    return "\n".join(lines) + "\n"


def atomic_write(path: str | os.PathLike, content: str) -> None:
    """Write via a temp sibling and rename; never leaves a partial file."""
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    try:
        tmp.write_text(content, encoding="utf-8")
        os.replace(tmp, target)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
