"""Filter-size-1 1-D CNN: forward pass, analytic gradients, prediction.

Architecture: each concept row of the input matrix is scored by every
conv filter (a dot product; the filter window covers exactly one row, so
row order never matters), passed through ReLU, then max-pooled over rows
to one strength per filter. Dropout is applied to the pooled vector
(inverted scaling, so eval mode needs no rescale), and a 2-unit linear
head produces class logits. The conv layer has no bias; the head does.

Max-pool ties break to the lowest row index, and the loss gradient for a
filter flows only through that row, only where ReLU was active.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import EncodedInstance
from .errors import DataError, DimensionMismatchError


@dataclass(eq=False, frozen=True)
class CnnModel:
    conv_filters: np.ndarray  # (F, D), no bias
    fc_weights: np.ndarray  # (2, F)
    fc_bias: np.ndarray  # (2,)
    dropout_rate: float
    init_seed: int

    @property
    def num_filters(self) -> int:
        return self.conv_filters.shape[0]

    @property
    def dimension(self) -> int:
        return self.conv_filters.shape[1]


def parameters_equal(a: CnnModel, b: CnnModel) -> bool:
    return (
        np.array_equal(a.conv_filters, b.conv_filters)
        and np.array_equal(a.fc_weights, b.fc_weights)
        and np.array_equal(a.fc_bias, b.fc_bias)
    )


def param_counts(model: CnnModel) -> tuple[int, int]:
    """(conv layer, fully connected layer) parameter counts: F*D and 2F+2."""
    f, d = model.conv_filters.shape
    return f * d, 2 * f + 2


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def init_model(
    num_filters: int, dimension: int, dropout: float, seed: int
) -> CnnModel:
    """Seeded Glorot-uniform init: weights ~ U(+-sqrt(6/(fan_in+fan_out))), zero biases.

    Draw order (conv filters, then head weights) is fixed so a seed fully
    determines the parameters.
    """
    if num_filters < 1 or dimension < 1:
        raise DataError(
            f"num_filters and dimension must be positive, got {num_filters}, {dimension}"
        )
    if not 0.0 <= dropout < 1.0:
        raise DataError(f"dropout rate must be in [0, 1), got {dropout}")
    rng = np.random.default_rng(seed)
    conv_limit = np.sqrt(6.0 / (dimension + num_filters))
    fc_limit = np.sqrt(6.0 / (num_filters + 2))
    conv = rng.uniform(-conv_limit, conv_limit, size=(num_filters, dimension))
    fc_w = rng.uniform(-fc_limit, fc_limit, size=(2, num_filters))
    fc_b = np.zeros(2)
    return CnnModel(_frozen(conv), _frozen(fc_w), _frozen(fc_b), dropout, seed)


@dataclass(frozen=True)
class ConvResult:
    pooled: np.ndarray  # (F,)
    argmax_rows: np.ndarray  # (F,) row index whose score was pooled
    row_scores: np.ndarray  # (C, F) post-ReLU scores


def conv_maxpool(instance_matrix: np.ndarray, conv_filters: np.ndarray) -> ConvResult:
    """Score every concept row with every filter, ReLU, then max over rows."""
    matrix = np.asarray(instance_matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise DataError(f"instance matrix must be 2-D with rows, got shape {matrix.shape}")
    if matrix.shape[1] != conv_filters.shape[1]:
        raise DimensionMismatchError(
            f"instance dimension {matrix.shape[1]} does not match filter length "
            f"{conv_filters.shape[1]}"
        )
    scores = np.maximum(matrix @ conv_filters.T, 0.0)  # (C, F)
    argmax = np.argmax(scores, axis=0)  # first max wins ties
    return ConvResult(scores.max(axis=0), argmax, scores)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(eq=False, frozen=True)
class ForwardCache:
    """Everything backward() needs to reproduce exact gradients."""

    model: CnnModel
    matrix: np.ndarray
    raw_scores: np.ndarray  # (C, F) pre-ReLU
    argmax_rows: np.ndarray  # (F,)
    dropout_mask: np.ndarray  # (F,) zeros and 1/(1-p); all-ones in eval mode
    pooled: np.ndarray  # (F,)
    dropped: np.ndarray  # (F,)
    logits: np.ndarray  # (2,)


def _dropout_mask(
    model: CnnModel, rng: np.random.Generator | None, override: np.ndarray | None
) -> np.ndarray:
    if override is not None:
        mask = np.asarray(override, dtype=np.float64)
        if mask.shape != (model.num_filters,):
            raise DimensionMismatchError(
                f"dropout mask shape {mask.shape} does not match filter count "
                f"{model.num_filters}"
            )
        return mask
    p = model.dropout_rate
    if p == 0.0:
        return np.ones(model.num_filters)
    if rng is None:
        raise DataError("train-mode forward with dropout needs an rng_state")
    keep = rng.random(model.num_filters) >= p
    return keep.astype(np.float64) / (1.0 - p)


def forward(
    model: CnnModel,
    instance: EncodedInstance,
    mode: str = "eval",
    rng_state: np.random.Generator | None = None,
    dropout_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Single-instance forward pass. ``dropout_mask`` pins the mask for
    deterministic gradient checking; otherwise train mode samples one from
    ``rng_state``."""
    if mode not in ("train", "eval"):
        raise DataError(f"mode must be 'train' or 'eval', got {mode!r}")
    matrix = instance.matrix
    if matrix.shape[1] != model.dimension:
        raise DimensionMismatchError(
            f"instance dimension {matrix.shape[1]} does not match model dimension "
            f"{model.dimension}"
        )
    raw = matrix @ model.conv_filters.T  # (C, F)
    relu = np.maximum(raw, 0.0)
    argmax = np.argmax(relu, axis=0)
    pooled = relu.max(axis=0)
    if mode == "train":
        mask = _dropout_mask(model, rng_state, dropout_mask)
    else:
        mask = np.ones(model.num_filters)
    dropped = pooled * mask
    logits = model.fc_weights @ dropped + model.fc_bias
    cache = ForwardCache(model, matrix, raw, argmax, mask, pooled, dropped, logits)
    return logits, cache


def predict_proba(model: CnnModel, instance: EncodedInstance) -> float:
    """Eval-mode probability of the positive class."""
    logits, _ = forward(model, instance, mode="eval")
    return float(_softmax(logits)[1])


@dataclass(eq=False, frozen=True)
class Gradients:
    conv_filters: np.ndarray
    fc_weights: np.ndarray
    fc_bias: np.ndarray


def _conv_grad_from_dpooled(
    matrix_rows: np.ndarray, raw_scores: np.ndarray, argmax: np.ndarray, dpooled: np.ndarray
) -> np.ndarray:
    """Route each filter's pooled gradient to its argmax row, gated by ReLU."""
    f_count = dpooled.shape[0]
    active = raw_scores[argmax, np.arange(f_count)] > 0.0
    coeff = np.where(active, dpooled, 0.0)
    return coeff[:, None] * matrix_rows[argmax]


def backward(model: CnnModel, cache: ForwardCache, label: int) -> Gradients:
    """Exact cross-entropy gradients for one train-mode forward pass."""
    if cache.model is not model:
        raise DataError("stale cache: model changed since the forward pass")
    if label not in (0, 1):
        raise DataError(f"label must be 0 or 1, got {label!r}")
    probs = _softmax(cache.logits)
    dlogits = probs.copy()
    dlogits[label] -= 1.0
    dfc_w = np.outer(dlogits, cache.dropped)
    dfc_b = dlogits
    ddropped = model.fc_weights.T @ dlogits
    dpooled = ddropped * cache.dropout_mask
    dconv = _conv_grad_from_dpooled(cache.matrix, cache.raw_scores, cache.argmax_rows, dpooled)
    return Gradients(dconv, dfc_w, dfc_b)


# --- batched forms used by the training loop ---------------------------------


@dataclass(eq=False, frozen=True)
class BatchCache:
    model: CnnModel
    matrices: np.ndarray  # (B, C, D)
    raw_scores: np.ndarray  # (B, C, F)
    argmax_rows: np.ndarray  # (B, F)
    dropout_masks: np.ndarray  # (B, F)
    dropped: np.ndarray  # (B, F)
    logits: np.ndarray  # (B, 2)


def forward_batch(
    model: CnnModel,
    matrices: np.ndarray,
    mode: str = "eval",
    rng_state: np.random.Generator | None = None,
) -> tuple[np.ndarray, BatchCache]:
    if matrices.ndim != 3 or matrices.shape[0] == 0 or matrices.shape[1] == 0:
        raise DataError(f"batch must be (B, C, D) with B, C >= 1, got {matrices.shape}")
    if matrices.shape[2] != model.dimension:
        raise DimensionMismatchError(
            f"batch dimension {matrices.shape[2]} does not match model dimension "
            f"{model.dimension}"
        )
    b = matrices.shape[0]
    raw = matrices @ model.conv_filters.T  # (B, C, F)
    relu = np.maximum(raw, 0.0)
    argmax = np.argmax(relu, axis=1)  # (B, F)
    pooled = relu.max(axis=1)
    if mode == "train" and model.dropout_rate > 0.0:
        if rng_state is None:
            raise DataError("train-mode forward with dropout needs an rng_state")
        keep = rng_state.random((b, model.num_filters)) >= model.dropout_rate
        masks = keep.astype(np.float64) / (1.0 - model.dropout_rate)
    else:
        masks = np.ones((b, model.num_filters))
    dropped = pooled * masks
    logits = dropped @ model.fc_weights.T + model.fc_bias
    return logits, BatchCache(model, matrices, raw, argmax, masks, dropped, logits)


def backward_batch(model: CnnModel, cache: BatchCache, dlogits: np.ndarray) -> Gradients:
    """Backprop an upstream (B, 2) logit gradient; returns summed gradients.

    Callers scale ``dlogits`` (e.g. by 1/B) to get mean-loss gradients. The
    reductions are fixed-order numpy sums, so results are deterministic.
    """
    if cache.model is not model:
        raise DataError("stale cache: model changed since the forward pass")
    dfc_w = dlogits.T @ cache.dropped  # (2, F)
    dfc_b = dlogits.sum(axis=0)
    ddropped = dlogits @ model.fc_weights  # (B, F)
    dpooled = ddropped * cache.dropout_masks
    at_max = np.take_along_axis(cache.raw_scores, cache.argmax_rows[:, None, :], axis=1)[:, 0, :]
    coeff = np.where(at_max > 0.0, dpooled, 0.0)  # (B, F)
    rows = np.take_along_axis(cache.matrices, cache.argmax_rows[:, :, None], axis=1)  # (B, F, D)
    dconv = np.einsum("bf,bfd->fd", coeff, rows)
    return Gradients(dconv, dfc_w, dfc_b)


def predict_proba_batch(model: CnnModel, matrices: np.ndarray) -> np.ndarray:
    logits, _ = forward_batch(model, matrices, mode="eval")
    return _softmax(logits)[:, 1]
