"""Concept-embedding CNN classifier with cross-site transfer learning.

A filter-size-1 1-D CNN scores each clinical concept's embedding row
independently, max-pools a per-filter strength, and classifies with a
small linear head. Models move between sites as portable checkpoints and
adapt by direct sharing, linear-only tuning, or full tuning. A synthetic
two-site generator with site-specific synonym vocabulary makes the
cross-site claims testable without private data.
"""

__version__ = "0.1.0"

from .data import (
    ConceptEntry,
    ConceptVocabulary,
    DatasetSplit,
    EncounterRecord,
    make_splits,
    influenza_vocabulary,
    parse_encounters,
    random_split,
    split_by_date,
    write_encounters_csv,
)
from .embedding import (
    EmbeddingTable,
    EncodedInstance,
    build_one_hot_table,
    encode_dataset,
    encode_instance,
    load_embedding_table,
    save_embedding_table,
)
from .errors import (
    CheckpointError,
    DataError,
    DimensionMismatchError,
    MetricUndefinedError,
    NumericError,
    ToolkitError,
)
from .evaluation import EvalReport, auroc, evaluate_model, render_report_table
from .network import (
    CnnModel,
    ConvResult,
    backward,
    conv_maxpool,
    forward,
    init_model,
    param_counts,
    parameters_equal,
    predict_proba,
)
from .synth import (
    SynthConfig,
    build_synthetic_semantic_table,
    default_synthetic_vocabulary,
    generate_synthetic_sites,
)
from .training import TrainConfig, TrainHistory, apply_update, cross_entropy_loss, train
from .transfer import (
    Checkpoint,
    Provenance,
    TransferStrategy,
    check_table_compatible,
    load_checkpoint,
    run_transfer,
    save_checkpoint,
)
