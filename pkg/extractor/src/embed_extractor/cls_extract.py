"""[CLS]-token embeddings from a pretrained transformer checkpoint.

Vectors come from the final hidden layer's [CLS] position, the model's
aggregate representation of the whole phrase, with the model in eval mode
so repeated runs are deterministic. The encoder is injectable so tests
can substitute a recorded stand-in instead of downloading checkpoints.
"""

from __future__ import annotations

from typing import Callable, Sequence

from .errors import DimensionError, ExtractorError
from .writer import table_text

Encoder = Callable[[list[str]], list[list[float]]]


def transformer_cls_encoder(model_identifier: str) -> Encoder:
    """Build the default encoder on top of transformers/torch."""
    try:
        import torch
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:  # pragma: no cover - environment-dependent
        raise ExtractorError(
            "transformers and torch are required for CLS extraction "
            "(install the 'cls' extra)"
        ) from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_identifier)
        model = AutoModel.from_pretrained(model_identifier)
    except Exception as exc:
        raise ExtractorError(f"cannot resolve model {model_identifier!r}: {exc}") from exc
    model.eval()

    def encode(texts: list[str]) -> list[list[float]]:
        try:
            batch = tokenizer(texts, return_tensors="pt", padding=True, truncation=True)
        except Exception as exc:
            raise ExtractorError(f"tokenization failed: {exc}") from exc
        with torch.no_grad():
            hidden = model(**batch).last_hidden_state
        return [row.tolist() for row in hidden[:, 0, :]]

    return encode


def extract_cls_embeddings(
    model_identifier: str,
    phrases: Sequence[tuple[str, str, str]],
    encoder: Encoder | None = None,
    batch_size: int = 16,
) -> str:
    """Embed every phrase and return the table file content.

    The header dimension is the model's hidden size, taken from the first
    returned vector and enforced on all the rest.
    """
    if not phrases:
        raise ExtractorError("no phrases to embed")
    encode = encoder if encoder is not None else transformer_cls_encoder(model_identifier)
    vectors: list[list[float]] = []
    texts = [text for _, _, text in phrases]
    for start in range(0, len(texts), batch_size):
        vectors.extend(encode(texts[start : start + batch_size]))
    if len(vectors) != len(phrases):
        raise ExtractorError(
            f"encoder returned {len(vectors)} vectors for {len(phrases)} phrases"
        )
    dimension = len(vectors[0])
    if dimension < 1:
        raise DimensionError("encoder returned empty vectors")
    rows = [
        (concept, label, vector)
        for (concept, label, _), vector in zip(phrases, vectors)
    ]
    return table_text(rows, dimension, model_identifier)
