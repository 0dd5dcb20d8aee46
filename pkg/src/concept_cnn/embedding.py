"""Embedding tables and instance encoding.

Table file format (line-oriented UTF-8, the contract with external
extractors): the first line is a header object ``{"dimension": D,
"source_tag": "..."}``; each following line is one record ``{"concept":
..., "label": ..., "vector": [...]}``. Numbers are written in decimal
scientific notation with 18 significant digits, so vectors round-trip at
full float64 precision.

Tables are immutable after construction (arrays are write-protected) and
are never trained: the embedding layer is fixed by design. Vectors are
loaded verbatim; no normalization is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ConceptVocabulary, EncounterRecord
from .errors import DataError, DimensionMismatchError
from . import jsontext


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class EmbeddingTable:
    """Map (concept_id, label) -> fixed-length float64 vector."""

    dimension: int
    source_tag: str
    vectors: dict[tuple[str, str], np.ndarray]

    def __post_init__(self):
        if self.dimension < 1:
            raise DataError(f"dimension must be positive, got {self.dimension}")
        for key, vec in self.vectors.items():
            if vec.shape != (self.dimension,):
                raise DimensionMismatchError(
                    f"vector for {key!r} has length {vec.shape[0] if vec.ndim == 1 else vec.shape}, "
                    f"expected {self.dimension}"
                )
            if not np.all(np.isfinite(vec)):
                raise DataError(f"non-finite values in vector for {key!r}")

    def vector(self, concept_id: str, label: str) -> np.ndarray:
        try:
            return self.vectors[(concept_id, label)]
        except KeyError:
            raise DataError(
                f"embedding table {self.source_tag!r} has no vector for "
                f"({concept_id!r}, {label!r})"
            ) from None

    def assert_covers(self, vocab: ConceptVocabulary) -> None:
        missing = [p for p in vocab.pairs() if p not in self.vectors]
        if missing:
            raise DataError(
                f"embedding table {self.source_tag!r} missing {len(missing)} "
                f"(concept, label) pairs, first: {missing[0]!r}"
            )

    def to_text(self) -> str:
        lines = [jsontext.render({"dimension": self.dimension, "source_tag": self.source_tag})]
        for (concept, label), vec in self.vectors.items():
            lines.append(
                jsontext.render({"concept": concept, "label": label, "vector": list(map(float, vec))})
            )
        return "\n".join(lines) + "\n"


def build_one_hot_table(vocab: ConceptVocabulary) -> EmbeddingTable:
    """One unit basis vector per (concept, label) pair, indexed in vocabulary order."""
    dim = vocab.one_hot_dimension
    vectors: dict[tuple[str, str], np.ndarray] = {}
    for hot, pair in enumerate(vocab.pairs()):
        v = np.zeros(dim)
        v[hot] = 1.0
        vectors[pair] = _freeze(v)
    return EmbeddingTable(dim, "one-hot", vectors)


def load_embedding_table(file_content: str) -> EmbeddingTable:
    """Parse a table file, validating dimensions, finiteness, and key uniqueness."""
    lines = [ln for ln in file_content.splitlines() if ln.strip()]
    if not lines:
        raise DataError("empty embedding table file")
    header = jsontext.parse(lines[0])
    if not isinstance(header, dict) or "dimension" not in header or "source_tag" not in header:
        raise DataError("embedding table header must carry 'dimension' and 'source_tag'")
    dimension = header["dimension"]
    if not isinstance(dimension, int) or dimension < 1:
        raise DataError(f"invalid dimension {dimension!r} in embedding table header")
    vectors: dict[tuple[str, str], np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        row = jsontext.parse(line)
        if not isinstance(row, dict) or not {"concept", "label", "vector"} <= row.keys():
            raise DataError(f"line {lineno}: expected concept/label/vector record")
        key = (str(row["concept"]), str(row["label"]))
        if key in vectors:
            raise DataError(f"line {lineno}: duplicate (concept, label) key {key!r}")
        vec = np.asarray(row["vector"], dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] != dimension:
            raise DimensionMismatchError(
                f"line {lineno}: vector length {vec.shape[0] if vec.ndim == 1 else vec.shape} "
                f"does not match header dimension {dimension}"
            )
        if not np.all(np.isfinite(vec)):
            raise DataError(f"line {lineno}: non-finite vector component")
        vectors[key] = _freeze(vec)
    return EmbeddingTable(dimension, str(header["source_tag"]), vectors)


def save_embedding_table(table: EmbeddingTable) -> str:
    return table.to_text()


@dataclass(frozen=True)
class EncodedInstance:
    """CNN input: one embedding row per vocabulary concept, plus the outcome."""

    matrix: np.ndarray  # (num_concepts, dimension), read-only
    outcome: int


def encode_instance(
    record: EncounterRecord, vocab: ConceptVocabulary, table: EmbeddingTable
) -> EncodedInstance:
    """Stack the vector of each assigned (concept, label) in vocabulary order."""
    rows = [table.vector(c, record.assignments[c]) for c in vocab.concept_ids]
    return EncodedInstance(_freeze(np.stack(rows)), record.outcome)


def encode_dataset(
    records: list[EncounterRecord], vocab: ConceptVocabulary, table: EmbeddingTable
) -> list[EncodedInstance]:
    return [encode_instance(r, vocab, table) for r in records]


def stack_instances(instances: list[EncodedInstance]) -> tuple[np.ndarray, np.ndarray]:
    """Batch instances into (matrices (N, C, D), outcomes (N,)) arrays."""
    if not instances:
        raise DataError("cannot stack an empty instance list")
    matrices = np.stack([inst.matrix for inst in instances])
    outcomes = np.array([inst.outcome for inst in instances], dtype=np.int64)
    return matrices, outcomes
