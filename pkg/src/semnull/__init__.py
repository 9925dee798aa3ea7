"""Semantic null-space detection of generated images.

Visual embeddings are projected onto the null space of a text-feature
corpus to strip shared semantic directions, and a small trained head
scores what remains.  See the README for the pipeline walkthrough.
"""

from .errors import (
    BadMagicError,
    DuplicateIdError,
    FormatError,
    NonFiniteError,
    TruncatedError,
    UnsupportedVersionError,
)
from .estimators import NullSpaceDetector, PatchSelector, SemanticNullProjector
from .losses import bce_loss, combined_loss, contrastive_loss
from .metrics import (
    EvalReport,
    accuracy_report,
    average_precision,
    evaluate,
    export_features_csv,
    predict,
    report_json,
)
from .optim import AdamHyper, AdamState, adam_step
from .patches import (
    SelectionConfig,
    patch_scores,
    select_and_reassemble,
    selection_scores,
    shuffled_indices,
    spectral_entropy,
    tile,
)
from .projection import (
    SemanticNullSpace,
    fit_nullspace,
    project,
    read_projection,
    write_projection,
)
from .records import (
    EmbeddingRecord,
    EmbeddingSet,
    ManifestEntry,
    read_embeddings,
    read_manifest,
    write_embeddings,
    write_manifest,
)
from .training import (
    DetectionHead,
    TrainConfig,
    head_features,
    head_logits,
    read_head,
    train,
    write_head,
)

__all__ = [
    "AdamHyper",
    "AdamState",
    "BadMagicError",
    "DetectionHead",
    "DuplicateIdError",
    "EmbeddingRecord",
    "EmbeddingSet",
    "EvalReport",
    "FormatError",
    "ManifestEntry",
    "NonFiniteError",
    "NullSpaceDetector",
    "PatchSelector",
    "SelectionConfig",
    "SemanticNullProjector",
    "SemanticNullSpace",
    "TrainConfig",
    "TruncatedError",
    "UnsupportedVersionError",
    "accuracy_report",
    "adam_step",
    "average_precision",
    "bce_loss",
    "combined_loss",
    "contrastive_loss",
    "evaluate",
    "export_features_csv",
    "fit_nullspace",
    "head_features",
    "head_logits",
    "patch_scores",
    "predict",
    "project",
    "read_embeddings",
    "read_head",
    "read_manifest",
    "read_projection",
    "report_json",
    "select_and_reassemble",
    "selection_scores",
    "shuffled_indices",
    "spectral_entropy",
    "tile",
    "train",
    "write_embeddings",
    "write_head",
    "write_manifest",
    "write_projection",
]
