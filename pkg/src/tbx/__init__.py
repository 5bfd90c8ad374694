"""Toolkit for explaining and statistically correcting scene-classifier exports."""

from .errors import TbxError
from .ingest import (
    ImageRecord,
    ProbVector,
    load_manifest,
    load_spc,
    read_detections,
    read_heatmap,
    read_probs,
    save_spc,
    write_heatmap,
)
from .pipeline import (
    Explanation,
    ThresholdConfig,
    explain,
    explain_batch,
    select_scenario,
    train_from_records,
)
from .saliency import (
    AbsoluteThreshold,
    BinaryMask,
    Heatmap,
    QuantileThreshold,
    binarize,
    mask_area,
)
from .sentence import TemplateSet, load_templates, render
from .spc import ClassScores, SpcModel, correct, score_classes, train_accumulate, weight
from .tuning import EvalReport, GridSpec, evaluate, fidelity, grid_search, kfold_split
from .validation import Detection, DetectionSet, ValidatedObject, overlap_score, validate_objects

__version__ = "0.1.0"

__all__ = [
    "AbsoluteThreshold",
    "BinaryMask",
    "ClassScores",
    "Detection",
    "DetectionSet",
    "EvalReport",
    "Explanation",
    "GridSpec",
    "Heatmap",
    "ImageRecord",
    "ProbVector",
    "QuantileThreshold",
    "SpcModel",
    "TbxError",
    "TemplateSet",
    "ThresholdConfig",
    "ValidatedObject",
    "binarize",
    "correct",
    "evaluate",
    "explain",
    "explain_batch",
    "fidelity",
    "grid_search",
    "kfold_split",
    "load_manifest",
    "load_spc",
    "load_templates",
    "mask_area",
    "overlap_score",
    "read_detections",
    "read_heatmap",
    "read_probs",
    "render",
    "save_spc",
    "score_classes",
    "select_scenario",
    "train_accumulate",
    "train_from_records",
    "validate_objects",
    "weight",
    "write_heatmap",
]
