"""Hosted embeddings API client: batched requests, retry with backoff.

Requests are sent in batches; transient failures (429 rate limits, 5xx,
network errors) retry with exponential backoff up to a fixed attempt
budget, while auth rejections and quota exhaustion fail immediately. The
table is assembled in memory and written atomically only after every
batch succeeded, so a failed run leaves no partial output behind.

Credentials come from the ``credentials`` argument or the
``OPENAI_API_KEY`` environment variable.
"""

from __future__ import annotations

import os
import time
from typing import Callable, Sequence

import httpx

from .errors import AuthError, DimensionError, QuotaError, ServiceError
from .writer import atomic_write, table_text

DEFAULT_ENDPOINT = "https://api.openai.com/v1/embeddings"
CREDENTIALS_ENV_VAR = "OPENAI_API_KEY"

MODEL_DIMENSIONS = {
    "text-embedding-3-small": 1536,
    "text-embedding-3-large": 3072,
}

RETRYABLE_STATUSES = {429, 500, 502, 503, 504}
MAX_BACKOFF_SECONDS = 8.0


def _resolve_credentials(credentials: str | None) -> str:
    key = credentials or os.environ.get(CREDENTIALS_ENV_VAR, "")
    if not key:
        raise AuthError(
            f"no API credentials: pass them explicitly or set {CREDENTIALS_ENV_VAR}"
        )
    return key


def _request_batch(
    client: httpx.Client,
    endpoint: str,
    key: str,
    model_identifier: str,
    texts: list[str],
    max_attempts: int,
    sleep: Callable[[float], None],
) -> list[list[float]]:
    last_error: Exception | None = None
    for attempt in range(1, max_attempts + 1):
        try:
            response = client.post(
                endpoint,
                headers={"Authorization": f"Bearer {key}"},
                json={"model": model_identifier, "input": texts},
            )
        except httpx.TransportError as exc:
            last_error = exc
        else:
            if response.status_code == 200:
                data = response.json()["data"]
                ordered = sorted(data, key=lambda item: item["index"])
                return [item["embedding"] for item in ordered]
            if response.status_code in (401, 403):
                raise AuthError(f"credentials rejected ({response.status_code})")
            if response.status_code == 429 and "insufficient_quota" in response.text:
                raise QuotaError("API quota exhausted")
            if response.status_code not in RETRYABLE_STATUSES:
                raise ServiceError(
                    f"embedding request failed ({response.status_code}): {response.text[:200]}"
                )
            last_error = ServiceError(
                f"transient failure ({response.status_code}): {response.text[:200]}"
            )
        if attempt < max_attempts:
            sleep(min(0.5 * 2 ** (attempt - 1), MAX_BACKOFF_SECONDS))
    raise ServiceError(f"giving up after {max_attempts} attempts: {last_error}")


def extract_api_embeddings(
    model_identifier: str,
    phrases: Sequence[tuple[str, str, str]],
    credentials: str | None,
    out_path: str | os.PathLike,
    endpoint: str = DEFAULT_ENDPOINT,
    batch_size: int = 64,
    max_attempts: int = 5,
    expected_dimension: int | None = None,
    transport: httpx.BaseTransport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> int:
    """Embed every phrase through the API and write the table to out_path.

    Returns the embedding dimension. The expectation defaults to the known
    size of the named model; any vector deviating from it is an error.
    """
    if not phrases:
        raise ServiceError("no phrases to embed")
    key = _resolve_credentials(credentials)
    expected = expected_dimension or MODEL_DIMENSIONS.get(model_identifier)
    texts = [text for _, _, text in phrases]
    vectors: list[list[float]] = []
    with httpx.Client(transport=transport, timeout=30.0) as client:
        for start in range(0, len(texts), batch_size):
            batch = texts[start : start + batch_size]
            vectors.extend(
                _request_batch(client, endpoint, key, model_identifier, batch, max_attempts, sleep)
            )
    if len(vectors) != len(phrases):
        raise ServiceError(f"API returned {len(vectors)} vectors for {len(phrases)} phrases")
    dimension = expected or len(vectors[0])
    for (concept, label, _), vector in zip(phrases, vectors):
        if len(vector) != dimension:
            raise DimensionError(
                f"vector for ({concept!r}, {label!r}) has length {len(vector)}, "
                f"expected {dimension}"
            )
    rows = [
        (concept, label, vector)
        for (concept, label, _), vector in zip(phrases, vectors)
    ]
    atomic_write(out_path, table_text(rows, dimension, model_identifier))
    return dimension
