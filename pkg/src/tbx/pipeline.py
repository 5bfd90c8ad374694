"""Per-image orchestration: scenario selection, validation, correction, assembly.

Scenario 1: the classifier's top probability clears the probability
threshold, so its label stands and the sentence cites the validated
objects. Scenario 2: the prediction is unreliable but objects passed the
confidence gate and the occurrence weights carry signal, so the weighted
scores pick the final label. Scenario 3: no usable objects, the original
label stands and the sentence flags the unreliability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from . import sentence as sentence_mod
from .errors import (
    ClassListMismatch,
    DimensionMismatch,
    MissingHeatmap,
    MissingLabel,
    TbxError,
)
from .ingest import ImageRecord, ProbVector, read_detections, read_heatmap, read_probs
from .saliency import BinarizeMode, DEFAULT_BINARIZE, Heatmap, binarize
from .sentence import DEFAULT_TEMPLATES, TemplateSet
from .spc import ClassScores, SpcModel, score_classes, train_accumulate
from .validation import DetectionSet, validate_objects

NOTE_SPC_UNSEEN = "spc_all_objects_unseen"


@dataclass(frozen=True)
class ThresholdConfig:
    """The three decision thresholds plus the mask binarization rule."""

    t_c: float = 0.2
    t_r: float = 0.08
    t_p: float = 0.7
    binarize: BinarizeMode = DEFAULT_BINARIZE

    def __post_init__(self) -> None:
        for name, v in (("t_c", self.t_c), ("t_r", self.t_r), ("t_p", self.t_p)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class Explanation:
    """Everything the pipeline decided for one image."""

    scenario: int
    classifier_label: str
    classifier_prob: float
    final_label: str
    contributing_objects: tuple[str, ...]
    sentence: str
    spc_scores: ClassScores | None = None
    note: str | None = None

    def to_dict(self) -> dict:
        scores = None
        if self.spc_scores is not None:
            scores = {
                "scores": list(self.spc_scores.scores),
                "winner": self.spc_scores.winner,
                "winner_is_unique": self.spc_scores.winner_is_unique,
            }
        return {
            "scenario": self.scenario,
            "classifier_label": self.classifier_label,
            "classifier_prob": self.classifier_prob,
            "final_label": self.final_label,
            "contributing_objects": list(self.contributing_objects),
            "sentence": self.sentence,
            "spc_scores": scores,
            "note": self.note,
        }


def select_scenario(
    prob: float, detections_after_tc: int, spc_correctable: bool, t_p: float
) -> int:
    """Pick the scenario: 1 iff prob > t_p, else 2 when objects and signal exist, else 3."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"prob={prob} outside [0, 1]")
    if prob > t_p:
        return 1
    if detections_after_tc > 0 and spc_correctable:
        return 2
    return 3


HeatmapSource = Heatmap | Callable[[], Heatmap] | None


def _resolve_heatmap(source: HeatmapSource, detections: DetectionSet) -> Heatmap:
    if source is None:
        raise MissingHeatmap(f"scenario 1 needs a heatmap for {detections.image_id!r}")
    hm = source() if callable(source) else source
    if hm.width != detections.width or hm.height != detections.height:
        raise DimensionMismatch(
            f"heatmap {hm.width}x{hm.height} != image "
            f"{detections.width}x{detections.height} for {detections.image_id!r}"
        )
    return hm


def explain(
    probs: ProbVector,
    detections: DetectionSet,
    heatmap: HeatmapSource,
    model: SpcModel,
    cfg: ThresholdConfig = ThresholdConfig(),
    templates: TemplateSet = DEFAULT_TEMPLATES,
) -> Explanation:
    """Run one image through the pipeline.

    The heatmap may be a value, a zero-argument loader (called only if
    scenario 1 fires, so scenario 2/3 paths skip the read), or None.
    """
    if tuple(model.class_names) != tuple(probs.class_names):
        raise ClassListMismatch(
            f"model classes {model.class_names} != probs classes {list(probs.class_names)}"
        )
    label = probs.top_label
    p = probs.top_prob
    labels_tc = [d.label for d in detections if d.confidence > cfg.t_c]

    if p > cfg.t_p:
        hm = _resolve_heatmap(heatmap, detections)
        mask = binarize(hm, cfg.binarize)
        validated = validate_objects(mask, detections, cfg.t_c, cfg.t_r)
        objs = tuple(v.label for v in validated)
        if objs:
            text = sentence_mod.render_parts(1, label, objs, templates)
        else:
            text = sentence_mod.render_scenario1_empty(label, templates)
        return Explanation(1, label, p, label, objs, text)

    scores = score_classes(model, labels_tc)
    correctable = scores.scores[scores.winner] > 0.0
    scenario = select_scenario(p, len(labels_tc), correctable, cfg.t_p)
    if scenario == 2:
        final = model.class_names[scores.winner]
        text = sentence_mod.render_parts(2, final, labels_tc, templates)
        return Explanation(2, label, p, final, tuple(labels_tc), text, spc_scores=scores)

    note = NOTE_SPC_UNSEEN if labels_tc else None
    text = sentence_mod.render_parts(3, label, (), templates)
    return Explanation(3, label, p, label, (), text, note=note)


@dataclass(frozen=True)
class ExplainOutcome:
    """Result of one batch entry: an explanation or a recorded failure."""

    image_id: str
    explanation: Explanation | None
    error: str | None


def explain_record(
    record: ImageRecord,
    model: SpcModel,
    cfg: ThresholdConfig = ThresholdConfig(),
    templates: TemplateSet = DEFAULT_TEMPLATES,
) -> Explanation:
    """File-backed single-image explain; the heatmap is read lazily."""
    probs = read_probs(record.probs_path, expect_image_id=record.image_id)
    dets = read_detections(
        record.detections_path, record.width, record.height, expect_image_id=record.image_id
    )
    source: HeatmapSource = None
    if record.heatmap_path is not None:
        hm_path = record.heatmap_path
        source = lambda: read_heatmap(hm_path)  # noqa: E731
    return explain(probs, dets, source, model, cfg, templates)


def explain_batch(
    records: Sequence[ImageRecord],
    model: SpcModel,
    cfg: ThresholdConfig = ThresholdConfig(),
    templates: TemplateSet = DEFAULT_TEMPLATES,
    jobs: int = 1,
) -> list[ExplainOutcome]:
    """Explain every record independently; failures are recorded, not fatal.

    Output order always matches manifest order regardless of jobs.
    """

    def run(record: ImageRecord) -> ExplainOutcome:
        try:
            return ExplainOutcome(record.image_id, explain_record(record, model, cfg, templates), None)
        except TbxError as e:
            return ExplainOutcome(record.image_id, None, f"{type(e).__name__}: {e}")

    if jobs > 1 and len(records) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, records))
    return [run(r) for r in records]


def train_from_records(
    records: Sequence[ImageRecord],
    cfg: ThresholdConfig = ThresholdConfig(),
) -> tuple[SpcModel, list[tuple[str, str]]]:
    """Train occurrence weights over a manifest using validated objects only.

    Returns the model plus (image_id, error) pairs for records that could
    not contribute; those are skipped without aborting the run. Raises if
    the record list is empty or nothing could be trained.
    """
    if not records:
        raise ValueError("no records to train on")
    model: SpcModel | None = None
    class_names: tuple[str, ...] | None = None
    errors: list[tuple[str, str]] = []
    for record in records:
        try:
            probs = read_probs(record.probs_path, expect_image_id=record.image_id)
            if class_names is None:
                class_names = probs.class_names
                model = SpcModel(list(class_names))
            elif probs.class_names != class_names:
                raise ClassListMismatch(
                    f"{record.image_id}: class list differs from the first record"
                )
            if record.true_label is None:
                raise MissingLabel(f"{record.image_id}: no true label")
            dets = read_detections(
                record.detections_path,
                record.width,
                record.height,
                expect_image_id=record.image_id,
            )
            if record.heatmap_path is None:
                raise MissingHeatmap(f"{record.image_id}: training needs a heatmap")
            hm = read_heatmap(record.heatmap_path)
            if hm.width != record.width or hm.height != record.height:
                raise DimensionMismatch(
                    f"{record.image_id}: heatmap {hm.width}x{hm.height} != "
                    f"image {record.width}x{record.height}"
                )
            mask = binarize(hm, cfg.binarize)
            validated = validate_objects(mask, dets, cfg.t_c, cfg.t_r)
            train_accumulate(model, [v.label for v in validated], record.true_label)
        except TbxError as e:
            errors.append((record.image_id, f"{type(e).__name__}: {e}"))
    if model is None:
        raise TbxError(f"no trainable records ({len(errors)} failures)")
    return model, errors
