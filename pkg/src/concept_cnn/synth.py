"""Synthetic two-site encounter generator and companion embedding tables.

Stands in for private cross-site EHR data. The generative story: a latent
binary outcome is drawn at the site's prevalence; positive cases light up
"signal" findings with probability sigmoid(signal_strength), negatives
with sigmoid(-signal_strength). Each synonym pair routes that signal
site-specifically: the source site only ever expresses the pair's first
concept, the target site only its second, which is exactly the vocabulary
mismatch that semantic embeddings are supposed to bridge. Label noise
then flips each binary finding independently at ``noise_rate``.

``build_synthetic_semantic_table`` produces the matching "semantic" table:
every (concept, label) pair gets a random unit vector, except that
synonym-pair concepts get vectors at a fixed cosine (0.97) to their
partner, so a model trained against source concepts responds to the
target site's synonyms. Contrast with the one-hot table, where the pair
concepts are orthogonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .data import (
    AGE_GROUP_LABELS,
    BINARY_LABELS,
    ConceptEntry,
    ConceptVocabulary,
    EncounterRecord,
    binary_entry,
)
from .embedding import EmbeddingTable, _freeze
from .errors import DataError

DEFAULT_SYNONYM_PAIRS = (
    ("myalgia", "muscle_pain"),
    ("pyrexia", "fever"),
    ("rhinorrhea", "runny_nose"),
)

_BACKGROUND_FINDINGS = (
    "cough", "headache", "fatigue", "sore_throat", "nausea",
    "chills", "sneezing", "dizziness", "wheezing",
)

PAIR_COSINE = 0.97

_WINDOW_START = date(2008, 6, 1)
_WINDOW_END = date(2015, 5, 31)


def default_synthetic_vocabulary() -> ConceptVocabulary:
    """Synonym-pair concepts, background findings, and an age group column."""
    entries = [binary_entry(c) for pair in DEFAULT_SYNONYM_PAIRS for c in pair]
    entries += [binary_entry(c) for c in _BACKGROUND_FINDINGS]
    entries.append(ConceptEntry("age_group", AGE_GROUP_LABELS))
    return ConceptVocabulary(tuple(entries))


@dataclass(frozen=True)
class SynthConfig:
    n_source: int = 2000
    n_target: int = 2000
    prevalence_source: float = 0.15
    prevalence_target: float = 0.15
    synonym_pairs: tuple[tuple[str, str], ...] = DEFAULT_SYNONYM_PAIRS
    signal_strength: float = 2.0
    noise_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_source < 1 or self.n_target < 1:
            raise DataError("site sizes must be >= 1")
        for p in (self.prevalence_source, self.prevalence_target):
            if not 0.0 < p < 1.0:
                raise DataError(f"prevalence must be in (0, 1), got {p}")
        if self.signal_strength < 0:
            raise DataError("signal_strength must be >= 0")
        if not 0.0 <= self.noise_rate < 1.0:
            raise DataError(f"noise_rate must be in [0, 1), got {self.noise_rate}")
        for a, b in self.synonym_pairs:
            if a == b:
                raise DataError(f"synonym pair ({a!r}, {b!r}) must name distinct concepts")


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _check_pairs(cfg: SynthConfig, vocab: ConceptVocabulary) -> None:
    seen: set[str] = set()
    for a, b in cfg.synonym_pairs:
        for c in (a, b):
            entry = vocab.entry(c)  # raises on unknown concept
            if entry.labels != BINARY_LABELS:
                raise DataError(f"synonym concept {c!r} must be a binary P/A finding")
            if c in seen:
                raise DataError(f"concept {c!r} appears in more than one synonym pair")
            seen.add(c)


def _generate_site(
    rng: np.random.Generator,
    n: int,
    prevalence: float,
    signal_concepts: frozenset[str],
    vocab: ConceptVocabulary,
    cfg: SynthConfig,
    prefix: str,
) -> list[EncounterRecord]:
    n_days = (_WINDOW_END - _WINDOW_START).days + 1
    p_on_pos = _sigmoid(cfg.signal_strength)
    p_on_neg = _sigmoid(-cfg.signal_strength)
    records = []
    for k in range(n):
        outcome = int(rng.random() < prevalence)
        admit = _WINDOW_START + timedelta(days=int(rng.integers(n_days)))
        assignments: dict[str, str] = {}
        for entry in vocab.entries:
            if entry.labels == BINARY_LABELS:
                if entry.concept_id in signal_concepts:
                    p_on = p_on_pos if outcome else p_on_neg
                    label = "P" if rng.random() < p_on else "A"
                else:
                    label = "A"
                if cfg.noise_rate > 0.0 and rng.random() < cfg.noise_rate:
                    label = "P" if label == "A" else "A"
            else:
                label = entry.labels[int(rng.integers(len(entry.labels)))]
            assignments[entry.concept_id] = label
        records.append(EncounterRecord(f"{prefix}{k:06d}", admit, outcome, assignments))
    return records


def generate_synthetic_sites(
    cfg: SynthConfig, vocab: ConceptVocabulary
) -> tuple[list[EncounterRecord], list[EncounterRecord]]:
    """Deterministically generate (source, target) encounter lists.

    Admission dates are uniform over June 2008 - May 2015 so the generated
    CSVs work with date-based splitting. The whole output is a pure
    function of (cfg, vocab): one PCG64 stream, source site first.
    """
    _check_pairs(cfg, vocab)
    rng = np.random.default_rng(cfg.seed)
    source_signal = frozenset(a for a, _ in cfg.synonym_pairs)
    target_signal = frozenset(b for _, b in cfg.synonym_pairs)
    source = _generate_site(
        rng, cfg.n_source, cfg.prevalence_source, source_signal, vocab, cfg, "SRC"
    )
    target = _generate_site(
        rng, cfg.n_target, cfg.prevalence_target, target_signal, vocab, cfg, "TGT"
    )
    return source, target


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def build_synthetic_semantic_table(
    vocab: ConceptVocabulary,
    synonym_pairs: tuple[tuple[str, str], ...],
    dimension: int = 32,
    seed: int = 0,
) -> EmbeddingTable:
    """Random unit vectors, with synonym partners pinned at cosine 0.97."""
    if dimension < 2:
        raise DataError("semantic table dimension must be >= 2")
    rng = np.random.default_rng(seed)
    partner_of = {b: a for a, b in synonym_pairs}
    vectors: dict[tuple[str, str], np.ndarray] = {}
    # Base vectors first (fixed draw order), then the pinned partners.
    for entry in vocab.entries:
        if entry.concept_id in partner_of:
            continue
        for label in entry.labels:
            vectors[(entry.concept_id, label)] = _unit(rng.standard_normal(dimension))
    sin_part = math.sqrt(1.0 - PAIR_COSINE**2)
    for entry in vocab.entries:
        if entry.concept_id not in partner_of:
            continue
        base_concept = partner_of[entry.concept_id]
        for label in entry.labels:
            base = vectors[(base_concept, label)]
            g = rng.standard_normal(dimension)
            ortho = _unit(g - (g @ base) * base)
            vectors[(entry.concept_id, label)] = PAIR_COSINE * base + sin_part * ortho
    ordered = {pair: _freeze(vectors[pair]) for pair in vocab.pairs()}
    return EmbeddingTable(dimension, "synthetic-semantic", ordered)
