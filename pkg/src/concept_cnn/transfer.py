"""Portable checkpoints and the three cross-site adaptation strategies.

Checkpoint files are versioned JSON with every float written at 18
significant digits, so save -> load -> save is byte-identical and a
checkpoint written by one conforming implementation loads in another.
Checkpoints are self-describing (dimension plus the embedding family's
source tag) and must carry training provenance; model exchange without an
audit trail is rejected.

Strategies map to freeze masks: direct sharing freezes everything and
performs zero parameter writes, linear-only tuning freezes the conv
filters, and full tuning freezes nothing. Fine-tuning always starts from
fresh optimizer state; source-site optimizer state is never carried over.

Schema (format_version 1):
  format_version  int
  source_tag      embedding family the model was trained with
  dimension       embedding dimension D
  num_filters     filter count F
  dropout_rate    float
  init_seed       int
  conv_filters    F x D floats
  fc_weights      2 x F floats
  fc_bias         2 floats
  provenance      {"config": {...}, "seed": int, "data_window": str}
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingTable, EncodedInstance
from .errors import CheckpointError, DataError, DimensionMismatchError
from .jsontext import parse, render
from .network import CnnModel
from .training import TrainConfig, TrainHistory, train

FORMAT_VERSION = 1


class TransferStrategy(enum.Enum):
    DIRECT_SHARE = "direct"
    TUNE_LINEAR = "linear"
    TUNE_CONV_AND_LINEAR = "full"

    @property
    def freeze_mask(self) -> frozenset[str]:
        return _STRATEGY_MASKS[self]


_STRATEGY_MASKS = {
    TransferStrategy.DIRECT_SHARE: frozenset({"conv", "fc"}),
    TransferStrategy.TUNE_LINEAR: frozenset({"conv"}),
    TransferStrategy.TUNE_CONV_AND_LINEAR: frozenset(),
}


@dataclass(frozen=True)
class Provenance:
    """Audit trail carried in every checkpoint."""

    config: dict
    seed: int
    data_window: str

    def to_dict(self) -> dict:
        return {"config": self.config, "seed": self.seed, "data_window": self.data_window}

    @classmethod
    def from_dict(cls, doc: dict) -> "Provenance":
        try:
            return cls(dict(doc["config"]), int(doc["seed"]), str(doc["data_window"]))
        except (KeyError, TypeError) as exc:
            raise CheckpointError(f"malformed provenance: {exc}") from exc


@dataclass(frozen=True)
class Checkpoint:
    format_version: int
    source_tag: str
    dimension: int
    num_filters: int
    dropout_rate: float
    init_seed: int
    conv_filters: np.ndarray
    fc_weights: np.ndarray
    fc_bias: np.ndarray
    provenance: Provenance

    def to_model(self) -> CnnModel:
        return CnnModel(
            self.conv_filters, self.fc_weights, self.fc_bias, self.dropout_rate, self.init_seed
        )


def _array_payload(a: np.ndarray):
    return [[float(x) for x in row] for row in a] if a.ndim == 2 else [float(x) for x in a]


def save_checkpoint(model: CnnModel, source_tag: str, provenance: Provenance) -> str:
    """Serialize a model plus its audit trail to checkpoint text."""
    if provenance is None or not provenance.data_window:
        raise CheckpointError("checkpoints require provenance (config, seed, data window)")
    if not source_tag:
        raise CheckpointError("checkpoints require the embedding family source_tag")
    for name, arr in (
        ("conv_filters", model.conv_filters),
        ("fc_weights", model.fc_weights),
        ("fc_bias", model.fc_bias),
    ):
        if not np.all(np.isfinite(arr)):
            raise CheckpointError(f"non-finite values in {name}")
    doc = {
        "format_version": FORMAT_VERSION,
        "source_tag": source_tag,
        "dimension": model.dimension,
        "num_filters": model.num_filters,
        "dropout_rate": float(model.dropout_rate),
        "init_seed": int(model.init_seed),
        "conv_filters": _array_payload(model.conv_filters),
        "fc_weights": _array_payload(model.fc_weights),
        "fc_bias": _array_payload(model.fc_bias),
        "provenance": provenance.to_dict(),
    }
    return render(doc, indent=2) + "\n"


def _frozen_array(data, shape: tuple[int, ...], name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.shape != shape:
        raise CheckpointError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise CheckpointError(f"non-finite values in {name}")
    arr.flags.writeable = False
    return arr


def load_checkpoint(file_content: str) -> Checkpoint:
    try:
        doc = parse(file_content)
    except DataError as exc:
        raise CheckpointError(str(exc)) from exc
    if not isinstance(doc, dict):
        raise CheckpointError("checkpoint must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format_version {version!r}, expected {FORMAT_VERSION}"
        )
    required = {
        "source_tag", "dimension", "num_filters", "dropout_rate", "init_seed",
        "conv_filters", "fc_weights", "fc_bias", "provenance",
    }
    missing = required - doc.keys()
    if missing:
        raise CheckpointError(f"checkpoint missing fields: {sorted(missing)}")
    dim = int(doc["dimension"])
    nf = int(doc["num_filters"])
    if dim < 1 or nf < 1:
        raise CheckpointError(f"invalid dimensions: num_filters={nf}, dimension={dim}")
    return Checkpoint(
        format_version=FORMAT_VERSION,
        source_tag=str(doc["source_tag"]),
        dimension=dim,
        num_filters=nf,
        dropout_rate=float(doc["dropout_rate"]),
        init_seed=int(doc["init_seed"]),
        conv_filters=_frozen_array(doc["conv_filters"], (nf, dim), "conv_filters"),
        fc_weights=_frozen_array(doc["fc_weights"], (2, nf), "fc_weights"),
        fc_bias=_frozen_array(doc["fc_bias"], (2,), "fc_bias"),
        provenance=Provenance.from_dict(doc["provenance"]),
    )


def check_table_compatible(checkpoint: Checkpoint, table: EmbeddingTable) -> None:
    """Fail fast when a checkpoint and an embedding table cannot compose."""
    if checkpoint.dimension != table.dimension:
        raise DimensionMismatchError(
            f"dimension mismatch: checkpoint expects {checkpoint.dimension}, "
            f"table {table.source_tag!r} has {table.dimension}"
        )
    if checkpoint.source_tag != table.source_tag:
        raise DimensionMismatchError(
            f"embedding family mismatch: checkpoint was trained with "
            f"{checkpoint.source_tag!r}, table is {table.source_tag!r}"
        )


def run_transfer(
    source_ckpt: Checkpoint,
    strategy: TransferStrategy,
    target_train: list[EncodedInstance],
    target_val: list[EncodedInstance],
    cfg: TrainConfig,
) -> tuple[CnnModel, TrainHistory]:
    """Adapt a source-site checkpoint to target-site data.

    Direct sharing needs no target data and writes no parameters; the
    tuning strategies run the training loop with the strategy's freeze
    mask (overriding whatever mask the config carries), starting from
    fresh optimizer state.
    """
    model = source_ckpt.to_model()
    if target_train:
        dims = {inst.matrix.shape[1] for inst in target_train + target_val}
        if dims - {source_ckpt.dimension}:
            raise DimensionMismatchError(
                f"target data dimension {sorted(dims)} does not match checkpoint "
                f"dimension {source_ckpt.dimension}"
            )
    if strategy is TransferStrategy.DIRECT_SHARE:
        return model, TrainHistory(selected_epoch=0, selection_metric="none")
    if not target_train or not target_val:
        raise DataError(f"strategy {strategy.value!r} requires target train and val data")
    tuned_cfg = TrainConfig(
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
        freeze_mask=strategy.freeze_mask,
        optimizer=cfg.optimizer,
        adam_beta1=cfg.adam_beta1,
        adam_beta2=cfg.adam_beta2,
        adam_epsilon=cfg.adam_epsilon,
        selection=cfg.selection,
        positive_class_weight=cfg.positive_class_weight,
    )
    return train(model, target_train, target_val, tuned_cfg)
