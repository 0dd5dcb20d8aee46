"""Concept vocabulary, encounter records, and dataset splitting.

Encounter CSV contract (UTF-8, comma separated): header row names
``encounter_id``, ``admit_date``, ``outcome``, then any subset of concept
columns; dates are ``YYYYMMDD``; outcome is 0 (negative) or 1 (positive).
A concept column may be omitted entirely or left empty per row, in which
case the concept's default label applies: binary findings (labels exactly
P/A) default to "A", concepts carrying a "No info" label default to that,
and anything else (e.g. age group) must be present.

Vocabulary files are JSON: ``{"concepts": [{"id": ..., "labels": [...]}]}``.
Entry order is normative: row i of every encoded instance corresponds to
concept i, and one-hot indices are assigned by vocabulary order then label
order.

Seeded splitting uses NumPy's PCG64 generator (``numpy.random.default_rng``)
so that splits reproduce across runs and implementations.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, datetime

import numpy as np

from .errors import DataError
from . import jsontext

BINARY_LABELS = ("P", "A")
NO_INFO_LABEL = "No info"

TEMPERATURE_LABELS = ("High grade", "Low grade", "Inconsequential", "No info")
AGE_GROUP_LABELS = ("0-5", "6-64", "65+")

# Influenza-surveillance findings, one per binary concept. Alphabetical so
# the ordering is reproducible from the name list alone.
INFLUENZA_FINDINGS = (
    "abdominal_pain", "anorexia", "apnea", "arthralgia", "barking_cough",
    "bronchiolitis", "bronchitis", "chest_pain", "chills", "conjunctivitis",
    "cough", "crackles", "croup", "cyanosis", "decreased_activity",
    "dehydration", "diaphoresis", "diarrhea", "dizziness", "dyspnea",
    "ear_pain", "facial_pain", "fatigue", "fever",
    "generalized_aches_and_pains", "grunting", "headache", "hemoptysis",
    "hoarseness", "hypothermia", "hypoxemia", "infiltrate", "irritability",
    "lethargy", "lymphadenopathy", "malaise", "muscle_pain", "myalgia",
    "nasal_congestion", "nasal_flaring", "nausea", "neck_pain",
    "nuchal_rigidity", "otitis_media", "pallor", "paroxysmal_cough",
    "pharyngitis", "photophobia", "pleuritic_chest_pain", "pneumonia",
    "poor_feeding", "productive_cough", "rales", "retractions", "rhinorrhea",
    "rigors", "seizure", "sinus_tenderness", "sneezing", "sore_throat",
    "sputum_production", "stridor", "stuffy_nose", "tachypnea",
    "toxic_appearance", "viral_syndrome", "vomiting", "weakness", "wheezing",
)


@dataclass(frozen=True)
class ConceptEntry:
    concept_id: str
    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.concept_id:
            raise DataError("concept_id must be non-empty")
        if len(self.labels) < 2:
            raise DataError(
                f"concept {self.concept_id!r} needs at least 2 labels, got {len(self.labels)}"
            )
        if len(set(self.labels)) != len(self.labels):
            raise DataError(f"concept {self.concept_id!r} has duplicate labels")
        if any(not lab for lab in self.labels):
            raise DataError(f"concept {self.concept_id!r} has an empty label")

    @property
    def default_label(self) -> str | None:
        """Label assumed when an encounter does not mention this concept."""
        if self.labels == BINARY_LABELS:
            return "A"
        if NO_INFO_LABEL in self.labels:
            return NO_INFO_LABEL
        return None


@dataclass(frozen=True)
class ConceptVocabulary:
    """Ordered concept list; defines instance row order and one-hot layout."""

    entries: tuple[ConceptEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise DataError("vocabulary must contain at least one concept")
        ids = [e.concept_id for e in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({c for c in ids if ids.count(c) > 1})
            raise DataError(f"duplicate concept ids: {dupes}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def concept_ids(self) -> tuple[str, ...]:
        return tuple(e.concept_id for e in self.entries)

    @property
    def one_hot_dimension(self) -> int:
        return sum(len(e.labels) for e in self.entries)

    def entry(self, concept_id: str) -> ConceptEntry:
        for e in self.entries:
            if e.concept_id == concept_id:
                return e
        raise DataError(f"unknown concept {concept_id!r}")

    def pairs(self) -> list[tuple[str, str]]:
        """All (concept, label) pairs in vocabulary order then label order."""
        return [(e.concept_id, lab) for e in self.entries for lab in e.labels]

    def to_json(self) -> str:
        doc = {
            "concepts": [
                {"id": e.concept_id, "labels": list(e.labels)} for e in self.entries
            ]
        }
        return jsontext.render(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ConceptVocabulary":
        doc = jsontext.parse(text)
        if not isinstance(doc, dict) or "concepts" not in doc:
            raise DataError("vocabulary file must be an object with a 'concepts' list")
        entries = []
        for item in doc["concepts"]:
            if not isinstance(item, dict) or "id" not in item or "labels" not in item:
                raise DataError("each concept needs 'id' and 'labels'")
            entries.append(ConceptEntry(str(item["id"]), tuple(str(x) for x in item["labels"])))
        return cls(tuple(entries))


def binary_entry(concept_id: str) -> ConceptEntry:
    return ConceptEntry(concept_id, BINARY_LABELS)


def influenza_vocabulary() -> ConceptVocabulary:
    """The 69-finding + temperature + age schema (one-hot dimension 145)."""
    entries = [binary_entry(c) for c in INFLUENZA_FINDINGS]
    entries.append(ConceptEntry("temperature", TEMPERATURE_LABELS))
    entries.append(ConceptEntry("age_group", AGE_GROUP_LABELS))
    return ConceptVocabulary(tuple(entries))


@dataclass(frozen=True)
class EncounterRecord:
    """One emergency-department encounter with a fully defaulted assignment map."""

    encounter_id: str
    admit_date: date
    outcome: int
    assignments: dict[str, str] = field(compare=False)

    def validate(self, vocab: ConceptVocabulary) -> None:
        if self.outcome not in (0, 1):
            raise DataError(f"outcome must be 0 or 1, got {self.outcome!r}")
        for e in vocab.entries:
            lab = self.assignments.get(e.concept_id)
            if lab is None:
                raise DataError(
                    f"encounter {self.encounter_id!r}: no assignment for {e.concept_id!r}"
                )
            if lab not in e.labels:
                raise DataError(
                    f"encounter {self.encounter_id!r}: unknown label {lab!r} "
                    f"for concept {e.concept_id!r}"
                )


DATE_FORMAT = "%Y%m%d"


def parse_admit_date(text: str) -> date:
    try:
        return datetime.strptime(text, DATE_FORMAT).date()
    except ValueError as exc:
        raise DataError(f"malformed date {text!r}, expected YYYYMMDD") from exc


def format_admit_date(d: date) -> str:
    return d.strftime(DATE_FORMAT)


def parse_encounters(csv_content: str, vocab: ConceptVocabulary) -> list[EncounterRecord]:
    """Parse encounter CSV text into validated records, preserving row order.

    Raises DataError on unknown label tokens, malformed dates, missing
    required header columns, unknown concept columns, and duplicate
    encounter ids. Missing or empty concept cells take the concept's
    default label; concepts without a default must be present.
    """
    reader = csv.reader(io.StringIO(csv_content.lstrip("﻿")))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV: missing header row") from None
    header = [h.strip() for h in header]
    for required in ("encounter_id", "admit_date", "outcome"):
        if required not in header:
            raise DataError(f"missing required header column {required!r}")
    if len(set(header)) != len(header):
        raise DataError("duplicate header columns")
    known = set(vocab.concept_ids)
    concept_cols = {}
    for idx, name in enumerate(header):
        if name in ("encounter_id", "admit_date", "outcome"):
            continue
        if name not in known:
            raise DataError(f"unknown concept column {name!r}")
        concept_cols[name] = idx
    id_col = header.index("encounter_id")
    date_col = header.index("admit_date")
    outcome_col = header.index("outcome")

    records: list[EncounterRecord] = []
    seen_ids: set[str] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(
                f"line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        enc_id = row[id_col].strip()
        if not enc_id:
            raise DataError(f"line {lineno}: empty encounter_id")
        if enc_id in seen_ids:
            raise DataError(f"duplicate encounter_id {enc_id!r}")
        seen_ids.add(enc_id)
        admit = parse_admit_date(row[date_col].strip())
        outcome_text = row[outcome_col].strip()
        if outcome_text not in ("0", "1"):
            raise DataError(
                f"line {lineno}: outcome must be 0 or 1, got {outcome_text!r}"
            )
        assignments: dict[str, str] = {}
        for e in vocab.entries:
            col = concept_cols.get(e.concept_id)
            value = row[col].strip() if col is not None else ""
            if value == "":
                default = e.default_label
                if default is None:
                    raise DataError(
                        f"line {lineno}: concept {e.concept_id!r} has no default "
                        "label and no value"
                    )
                value = default
            if value not in e.labels:
                raise DataError(
                    f"line {lineno}: unknown label {value!r} for concept "
                    f"{e.concept_id!r}"
                )
            assignments[e.concept_id] = value
        records.append(EncounterRecord(enc_id, admit, int(outcome_text), assignments))
    return records


def write_encounters_csv(records: list[EncounterRecord], vocab: ConceptVocabulary) -> str:
    """Serialize records with every concept column explicit (round-trip exact)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["encounter_id", "admit_date", "outcome", *vocab.concept_ids])
    for r in records:
        r.validate(vocab)
        writer.writerow(
            [r.encounter_id, format_admit_date(r.admit_date), str(r.outcome)]
            + [r.assignments[c] for c in vocab.concept_ids]
        )
    return buf.getvalue()


def split_by_date(
    records: list[EncounterRecord], cutoff: date
) -> tuple[list[EncounterRecord], list[EncounterRecord]]:
    """Partition records into (pre, post) around the cutoff date.

    Records admitted on the cutoff date itself go to the post partition
    (half-open interval convention). Empty partitions are permitted.
    """
    pre = [r for r in records if r.admit_date < cutoff]
    post = [r for r in records if r.admit_date >= cutoff]
    return pre, post


def random_split(
    records: list[EncounterRecord], ratio: float, seed: int
) -> tuple[list[EncounterRecord], list[EncounterRecord]]:
    """Seeded random partition into (train, validation).

    |train| = round(ratio * n) with halves rounded up. Pure function of
    (records, ratio, seed); the shuffle is a PCG64 permutation.
    """
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must be in (0, 1), got {ratio}")
    n = len(records)
    if n == 0:
        raise DataError("cannot split an empty record list")
    k = int(math.floor(ratio * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    train = [records[i] for i in perm[:k]]
    validation = [records[i] for i in perm[k:]]
    return train, validation


@dataclass(frozen=True)
class DatasetSplit:
    train: list[EncounterRecord]
    validation: list[EncounterRecord]
    test: list[EncounterRecord]
    split_seed: int
    date_cutoff: date


def make_splits(
    records: list[EncounterRecord],
    cutoff: date,
    ratio: float = 0.8,
    seed: int = 0,
) -> DatasetSplit:
    """Date split (pre-cutoff -> train+validation, post -> test), then seeded 8:2."""
    pre, post = split_by_date(records, cutoff)
    if not pre:
        raise DataError(f"no records before cutoff {cutoff.isoformat()}")
    train, validation = random_split(pre, ratio, seed)
    return DatasetSplit(train, validation, post, seed, cutoff)
