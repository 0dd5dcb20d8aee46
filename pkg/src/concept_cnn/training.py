"""Mini-batch optimization with per-layer freeze masks and model selection.

Freeze groups are "conv" (the filter bank) and "fc" (head weights and
bias). Frozen arrays are carried into each updated model by reference, so
"unchanged" means bit-identical, and frozen groups never accumulate
optimizer state.

Determinism: a single PCG64 generator seeded from the config drives the
epoch shuffles and the dropout stream, and batch reductions are
fixed-order numpy sums, so (model, data, config) fully determines the
result.

The one pinned hyperparameter is the learning rate (0.001); optimizer
(Adam with b1=0.9, b2=0.999, eps=1e-8 added outside the square root),
epoch count, batch size, and checkpoint selection are toolkit defaults,
configurable and echoed into run metadata.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .embedding import EncodedInstance, stack_instances
from .errors import DataError, DimensionMismatchError, NumericError
from .evaluation import auroc
from .network import CnnModel, Gradients, backward_batch, forward_batch

logger = logging.getLogger(__name__)

FREEZE_GROUPS = ("conv", "fc")
_GROUP_PARAMS = {"conv": ("conv_filters",), "fc": ("fc_weights", "fc_bias")}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    freeze_mask: frozenset[str] = frozenset()
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    selection: str = "best_validation_auroc"
    positive_class_weight: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise DataError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1 or self.batch_size < 1:
            raise DataError("epochs and batch_size must be >= 1")
        if not set(self.freeze_mask) <= set(FREEZE_GROUPS):
            raise DataError(f"freeze_mask entries must be among {FREEZE_GROUPS}")
        if self.optimizer not in ("adam", "sgd"):
            raise DataError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.selection not in ("best_validation_auroc", "final_epoch"):
            raise DataError(f"unknown selection rule {self.selection!r}")
        if self.positive_class_weight <= 0:
            raise DataError("positive_class_weight must be positive")

    @property
    def fully_frozen(self) -> bool:
        return set(self.freeze_mask) == set(FREEZE_GROUPS)

    def frozen_params(self) -> set[str]:
        names: set[str] = set()
        for group in self.freeze_mask:
            names.update(_GROUP_PARAMS[group])
        return names


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_auroc: list[float] = field(default_factory=list)
    selected_epoch: int = -1
    selection_metric: str = "validation_auroc"

    def to_dict(self) -> dict:
        return {
            "train_loss": [float(x) for x in self.train_loss],
            "val_loss": [float(x) for x in self.val_loss],
            # AUROC is null for epochs where it was undefined (one-class val)
            "val_auroc": [float(x) if np.isfinite(x) else None for x in self.val_auroc],
            "selected_epoch": self.selected_epoch,
            "selection_metric": self.selection_metric,
        }


def _instance_weights(labels: np.ndarray, positive_weight: float) -> np.ndarray:
    return np.where(labels == 1, positive_weight, 1.0)


def cross_entropy_loss(
    logits_batch: np.ndarray, labels: np.ndarray, positive_weight: float = 1.0
) -> float:
    """Mean of -log softmax(logits)[label] over the batch.

    With ``positive_weight`` != 1 the mean is weighted (positives count
    ``positive_weight`` times), matching the gradient used in training.
    """
    logits = np.asarray(logits_batch, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or logits.shape[0] == 0 or logits.shape[1] != 2:
        raise DataError(f"logits batch must be (B, 2) with B >= 1, got {logits.shape}")
    if labels.shape != (logits.shape[0],):
        raise DimensionMismatchError(
            f"labels shape {labels.shape} does not match batch size {logits.shape[0]}"
        )
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1)) + logits.max(axis=1)
    per_item = logsumexp - logits[np.arange(len(labels)), labels]
    weights = _instance_weights(labels, positive_weight)
    return float((weights * per_item).sum() / weights.sum())


def _loss_grad_logits(
    logits: np.ndarray, labels: np.ndarray, positive_weight: float
) -> np.ndarray:
    """d(weighted mean cross-entropy)/d(logits), shape (B, 2)."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    grad = probs
    grad[np.arange(len(labels)), labels] -= 1.0
    weights = _instance_weights(labels, positive_weight)
    return grad * (weights / weights.sum())[:, None]


@dataclass
class OptimizerState:
    kind: str
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def init_optimizer_state(model: CnnModel, cfg: TrainConfig) -> OptimizerState:
    """Fresh state covering only the unfrozen parameter groups."""
    state = OptimizerState(kind=cfg.optimizer)
    if cfg.optimizer == "adam":
        params = _param_arrays(model)
        frozen = cfg.frozen_params()
        for name, arr in params.items():
            if name not in frozen:
                state.m[name] = np.zeros_like(arr)
                state.v[name] = np.zeros_like(arr)
    return state


def _param_arrays(model: CnnModel) -> dict[str, np.ndarray]:
    return {
        "conv_filters": model.conv_filters,
        "fc_weights": model.fc_weights,
        "fc_bias": model.fc_bias,
    }


def _grad_arrays(grads: Gradients) -> dict[str, np.ndarray]:
    return {
        "conv_filters": grads.conv_filters,
        "fc_weights": grads.fc_weights,
        "fc_bias": grads.fc_bias,
    }


def apply_update(
    model: CnnModel, gradients: Gradients, optimizer_state: OptimizerState, cfg: TrainConfig
) -> CnnModel:
    """One optimizer step on the unfrozen groups; frozen arrays pass through
    by reference. Advances ``optimizer_state`` in place."""
    params = _param_arrays(model)
    grads = _grad_arrays(gradients)
    frozen = cfg.frozen_params()
    for name in params:
        if grads[name].shape != params[name].shape:
            raise DimensionMismatchError(
                f"gradient shape {grads[name].shape} does not match parameter "
                f"{name} shape {params[name].shape}"
            )
    updated: dict[str, np.ndarray] = {}
    optimizer_state.step += 1
    for name, theta in params.items():
        if name in frozen:
            updated[name] = theta  # same object: bit-identical by construction
            continue
        g = grads[name]
        if cfg.optimizer == "sgd":
            new = theta - cfg.learning_rate * g
        else:
            t = optimizer_state.step
            m = optimizer_state.m[name] = (
                cfg.adam_beta1 * optimizer_state.m[name] + (1 - cfg.adam_beta1) * g
            )
            v = optimizer_state.v[name] = (
                cfg.adam_beta2 * optimizer_state.v[name] + (1 - cfg.adam_beta2) * g * g
            )
            m_hat = m / (1 - cfg.adam_beta1**t)
            v_hat = v / (1 - cfg.adam_beta2**t)
            new = theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)
        new.flags.writeable = False
        updated[name] = new
    return CnnModel(
        updated["conv_filters"],
        updated["fc_weights"],
        updated["fc_bias"],
        model.dropout_rate,
        model.init_seed,
    )


def _dataset_loss(
    model: CnnModel, matrices: np.ndarray, labels: np.ndarray, positive_weight: float
) -> float:
    logits, _ = forward_batch(model, matrices, mode="eval")
    return cross_entropy_loss(logits, labels, positive_weight)


def _val_scores(model: CnnModel, matrices: np.ndarray) -> np.ndarray:
    logits, _ = forward_batch(model, matrices, mode="eval")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return (e / e.sum(axis=1, keepdims=True))[:, 1]


def train(
    model: CnnModel,
    train_set: list[EncodedInstance],
    val_set: list[EncodedInstance],
    cfg: TrainConfig,
) -> tuple[CnnModel, TrainHistory]:
    """Optimize the unfrozen layers; return the selected checkpoint and history.

    With everything frozen this is an evaluation-only pass: the input model
    comes back untouched and the history holds a single measurement. If the
    validation set contains one class, AUROC is undefined; selection falls
    back to validation loss and the fallback is logged.
    """
    if not train_set or not val_set:
        raise DataError("train and validation sets must be non-empty")
    train_m, train_y = stack_instances(train_set)
    val_m, val_y = stack_instances(val_set)

    single_class_val = len(np.unique(val_y)) < 2
    if single_class_val:
        logger.warning(
            "validation set has a single class: AUROC is undefined; "
            "falling back to validation-loss selection"
        )

    history = TrainHistory(
        selection_metric="validation_loss" if single_class_val else "validation_auroc"
    )

    def measure_val(current: CnnModel) -> tuple[float, float]:
        v_loss = _dataset_loss(current, val_m, val_y, cfg.positive_class_weight)
        if single_class_val:
            return v_loss, float("nan")
        return v_loss, auroc(_val_scores(current, val_m), val_y)

    if cfg.fully_frozen:
        v_loss, v_auroc = measure_val(model)
        history.train_loss.append(_dataset_loss(model, train_m, train_y, cfg.positive_class_weight))
        history.val_loss.append(v_loss)
        history.val_auroc.append(v_auroc)
        history.selected_epoch = 0
        return model, history

    rng = np.random.default_rng(cfg.seed)
    state = init_optimizer_state(model, cfg)
    n = len(train_set)
    current = model
    best_model = model
    best_key: float | None = None
    best_epoch = -1

    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        epoch_weighted_loss = 0.0
        epoch_weight = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            bm, by = train_m[idx], train_y[idx]
            logits, cache = forward_batch(current, bm, mode="train", rng_state=rng)
            batch_loss = cross_entropy_loss(logits, by, cfg.positive_class_weight)
            if not np.isfinite(batch_loss):
                raise NumericError(
                    f"non-finite training loss at epoch {epoch}, batch start {start}"
                )
            dlogits = _loss_grad_logits(logits, by, cfg.positive_class_weight)
            grads = backward_batch(current, cache, dlogits)
            current = apply_update(current, grads, state, cfg)
            w = _instance_weights(by, cfg.positive_class_weight).sum()
            epoch_weighted_loss += batch_loss * w
            epoch_weight += w
        history.train_loss.append(epoch_weighted_loss / epoch_weight)
        v_loss, v_auroc = measure_val(current)
        history.val_loss.append(v_loss)
        history.val_auroc.append(v_auroc)

        key = v_loss if single_class_val else -v_auroc  # lower is better
        if best_key is None or key < best_key:
            best_key = key
            best_model = current
            best_epoch = epoch

    if cfg.selection == "final_epoch":
        history.selected_epoch = cfg.epochs - 1
        return current, history
    history.selected_epoch = best_epoch
    return best_model, history
