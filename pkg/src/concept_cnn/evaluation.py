"""Tie-aware AUROC and experiment reports.

AUROC is the Mann-Whitney statistic: (sum of positive midranks -
n_pos(n_pos+1)/2) / (n_pos * n_neg), which gives ties exactly half
credit. The division is taken through whichever of the two complementary
rank sums is larger; subtracting from 1 is then exact in IEEE float64, so
label-complement symmetry (and monotone-transform invariance, which never
changes ranks) holds with zero tolerance, not just approximately.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .data import ConceptVocabulary, EncounterRecord
from .embedding import EmbeddingTable, encode_dataset, stack_instances
from .errors import DataError, MetricUndefinedError
from .jsontext import format_float, render
from .network import CnnModel, predict_proba_batch

SCENARIOS = ("local", "direct", "tune_linear", "tune_full")


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the mean rank of their block."""
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    return ((starts + ends) / 2.0)[inverse]


def auroc(scores, labels) -> float:
    """Probability a random positive outranks a random negative (ties: half credit)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError(
            f"scores and labels must be equal-length 1-D, got {s.shape} and {y.shape}"
        )
    if not np.all(np.isfinite(s)):
        raise DataError("non-finite score values")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos + n_neg != len(y):
        raise DataError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError(
            f"AUROC undefined with {n_pos} positives and {n_neg} negatives"
        )
    ranks = _midranks(s)
    u_pos = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    d = float(n_pos) * float(n_neg)
    # Divide through the larger complementary rank sum: 1 - result is then
    # an exact float operation for the smaller one.
    if 2.0 * u_pos >= d:
        return float(u_pos / d)
    return float(1.0 - (d - u_pos) / d)


@dataclass(frozen=True)
class EvalReport:
    auroc: float
    n_positive: int
    n_negative: int
    score_digest: str
    scenario: str

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise DataError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.n_positive < 1 or self.n_negative < 1:
            raise DataError("a report requires at least one instance of each class")

    def to_dict(self) -> dict:
        return {
            "auroc": float(self.auroc),
            "n_positive": self.n_positive,
            "n_negative": self.n_negative,
            "score_digest": self.score_digest,
            "scenario": self.scenario,
        }

    def to_text(self) -> str:
        return render(self.to_dict(), indent=2) + "\n"


def score_digest(scores: np.ndarray) -> str:
    """Stable digest of a score list at full serialized precision."""
    payload = "\n".join(format_float(float(x)) for x in scores)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def evaluate_model(
    model: CnnModel,
    test_set: list[EncounterRecord],
    table: EmbeddingTable,
    vocab: ConceptVocabulary,
    scenario: str = "local",
) -> EvalReport:
    """Score every test encounter in eval mode and report the AUROC."""
    if not test_set:
        raise DataError("empty test set")
    instances = encode_dataset(test_set, vocab, table)
    matrices, labels = stack_instances(instances)
    scores = predict_proba_batch(model, matrices)
    value = auroc(scores, labels)
    return EvalReport(
        auroc=value,
        n_positive=int((labels == 1).sum()),
        n_negative=int((labels == 0).sum()),
        score_digest=score_digest(scores),
        scenario=scenario,
    )


def render_report_table(results: dict[str, dict[str, float]]) -> str:
    """Text grid with one row per embedding source and one column per scenario."""
    header = ["embedding", *SCENARIOS]
    rows = [header]
    for source_tag, by_scenario in results.items():
        row = [source_tag]
        for scenario in SCENARIOS:
            value = by_scenario.get(scenario)
            row.append("-" if value is None else f"{value:.4f}")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
