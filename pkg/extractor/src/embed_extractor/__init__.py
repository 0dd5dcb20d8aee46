"""Embedding-table extractor: transformer [CLS] vectors or a hosted API,
emitted in the shared table format the core toolkit loads."""

__version__ = "0.1.0"

from .api_extract import MODEL_DIMENSIONS, extract_api_embeddings
from .cls_extract import extract_cls_embeddings, transformer_cls_encoder
from .errors import (
    AuthError,
    DimensionError,
    ExtractorError,
    QuotaError,
    ServiceError,
    TemplateError,
)
from .phrases import PhraseTemplates, Vocabulary, concept_text, render_phrases
from .writer import atomic_write, table_text
