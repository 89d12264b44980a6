"""Deterministic engine for six-dimension structural video documents."""

__version__ = "0.1.0"

from .alignment import (
    AlignmentConfig,
    AlignmentResult,
    ConfigError,
    align,
    cost_matrix,
    hungarian_match,
    temporal_iou,
)
from .benchgen import (
    BenchItem,
    ItemConfig,
    ItemGenerationError,
    generate_item,
    generate_suite,
    verify_item,
)
from .document import (
    DocumentError,
    SemanticShot,
    ShotLabelVector,
    SkeletonSegment,
    StructuralDocument,
    ValidationIssue,
    VideoMeta,
    derive_skeleton,
    dumps_document,
    load_document,
    parse_document,
    validate_document,
)
from .objective import (
    RegularizerConfig,
    RewardBreakdown,
    TaskInputError,
    aggregate_label_distance,
    edit_similarity,
    regularize,
    structural_loss,
    sv6d_loss,
    task_reward,
)
from .scoring import AnswerRecord, ScoreReport, extract_choice, match, score_suite
from .taxonomy import (
    DIMENSION_IDS,
    SubDimension,
    TaxonomyError,
    TaxonomyRegistry,
    confusion_neighborhood,
    label_distance,
    load_registry,
)

__all__ = [
    "__version__",
    "AlignmentConfig",
    "AlignmentResult",
    "AnswerRecord",
    "BenchItem",
    "ConfigError",
    "DIMENSION_IDS",
    "DocumentError",
    "ItemConfig",
    "ItemGenerationError",
    "RegularizerConfig",
    "RewardBreakdown",
    "ScoreReport",
    "SemanticShot",
    "ShotLabelVector",
    "SkeletonSegment",
    "StructuralDocument",
    "SubDimension",
    "TaskInputError",
    "TaxonomyError",
    "TaxonomyRegistry",
    "ValidationIssue",
    "VideoMeta",
    "aggregate_label_distance",
    "align",
    "confusion_neighborhood",
    "cost_matrix",
    "derive_skeleton",
    "dumps_document",
    "edit_similarity",
    "extract_choice",
    "generate_item",
    "generate_suite",
    "hungarian_match",
    "label_distance",
    "load_document",
    "load_registry",
    "match",
    "parse_document",
    "regularize",
    "score_suite",
    "structural_loss",
    "sv6d_loss",
    "task_reward",
    "temporal_iou",
    "validate_document",
    "verify_item",
]
