"""Turn (concept, label) pairs into the phrases that get embedded.

Present findings embed as the concept's own text ("cough"); absent
findings embed as their negation, "no cough" by default, with per-concept
overrides for cases where that reads badly. Graded concepts such as
temperature and age group embed as short descriptive phrases. Rendering
is deterministic and every pair must produce non-empty text.

Vocabulary files follow the shared JSON schema used by the core toolkit:
``{"concepts": [{"id": ..., "labels": [...]}]}``, ordered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ExtractorError, TemplateError

BINARY_LABELS = ("P", "A")

DEFAULT_CATEGORICAL_PHRASES = {
    ("temperature", "High grade"): "high grade fever of 104.0 F (40 C) or more",
    ("temperature", "Low grade"): "low grade fever between 100.4 F and 103.9 F (38 to 39.9 C)",
    ("temperature", "Inconsequential"): "body temperature below 100.4 F (38 C)",
    ("temperature", "No info"): "no temperature information recorded",
    ("age_group", "0-5"): "patient aged 0 to 5 years",
    ("age_group", "6-64"): "patient aged 6 to 64 years",
    ("age_group", "65+"): "patient aged 65 years or older",
}


@dataclass(frozen=True)
class Vocabulary:
    """Ordered (concept_id, labels) entries read from the shared vocab format."""

    entries: tuple[tuple[str, tuple[str, ...]], ...]

    def pairs(self) -> list[tuple[str, str]]:
        return [(cid, label) for cid, labels in self.entries for label in labels]

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        try:
            doc = json.loads(text)
            entries = tuple(
                (str(item["id"]), tuple(str(x) for x in item["labels"]))
                for item in doc["concepts"]
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ExtractorError(f"malformed vocabulary file: {exc}") from exc
        if not entries:
            raise ExtractorError("vocabulary has no concepts")
        return cls(entries)


def concept_text(concept_id: str) -> str:
    return concept_id.replace("_", " ")


@dataclass(frozen=True)
class PhraseTemplates:
    present: str = "{concept}"
    absent: str = "no {concept}"
    # exact (concept, label) phrases; categorical labels must be covered here
    overrides: dict[tuple[str, str], str] = field(default_factory=dict)

    def phrase_for(self, concept_id: str, label: str, labels: tuple[str, ...]) -> str:
        key = (concept_id, label)
        if key in self.overrides:
            text = self.overrides[key]
        elif key in DEFAULT_CATEGORICAL_PHRASES:
            text = DEFAULT_CATEGORICAL_PHRASES[key]
        elif labels == BINARY_LABELS and label == "P":
            text = self.present.format(concept=concept_text(concept_id))
        elif labels == BINARY_LABELS and label == "A":
            text = self.absent.format(concept=concept_text(concept_id))
        else:
            raise TemplateError(
                f"no phrase template for ({concept_id!r}, {label!r}); add an override"
            )
        if not text.strip():
            raise TemplateError(f"empty phrase for ({concept_id!r}, {label!r})")
        return text


def render_phrases(
    vocab: Vocabulary, templates: PhraseTemplates | None = None
) -> list[tuple[str, str, str]]:
    """One (concept, label, text) triple per vocabulary pair, in order."""
    templates = templates or PhraseTemplates()
    rendered = []
    for concept_id, labels in vocab.entries:
        for label in labels:
            rendered.append((concept_id, label, templates.phrase_for(concept_id, label, labels)))
    return rendered
