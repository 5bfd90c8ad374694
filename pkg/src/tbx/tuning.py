"""Threshold tuning and evaluation: k-fold grid search, accuracy reports, fidelity.

Grid search sweeps the confidence threshold, the relevance threshold
(expressed as multipliers of the confidence threshold), and the
probability threshold. For each configuration the occurrence weights are
retrained on k-1 folds and accuracy is measured on the held-out fold;
the configuration with the best mean accuracy wins, ties going to the
earliest configuration in sweep order.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import (
    MissingHeatmap,
    MissingLabel,
    NoAnnotatedRecords,
    TooFewRecords,
    UnknownClass,
)
from .ingest import ImageRecord, read_detections, read_heatmap, read_probs
from .pipeline import Explanation, ThresholdConfig, explain_record
from .saliency import BinarizeMode, DEFAULT_BINARIZE, binarize
from .sentence import DEFAULT_TEMPLATES, TemplateSet
from .spc import SpcModel, score_classes, train_accumulate
from .validation import overlap_score


@dataclass(frozen=True)
class GridSpec:
    """Search space: confidence values, relevance multipliers, probability values."""

    t_c_values: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)
    t_r_multipliers: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)
    t_p_values: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    folds: int = 4

    def __post_init__(self) -> None:
        if not (self.t_c_values and self.t_r_multipliers and self.t_p_values):
            raise ValueError("grid must be nonempty")
        for v in (*self.t_c_values, *self.t_r_multipliers, *self.t_p_values):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"grid value {v} outside [0, 1]")
        if self.folds < 2:
            raise ValueError(f"need at least 2 folds, got {self.folds}")

    def configs(self) -> list[tuple[float, float, float]]:
        """All (t_c, t_r, t_p) triples in sweep order: t_c major, then t_r, then t_p.

        t_r is the multiplier times t_c, rounded to 12 decimals so the
        resulting thresholds are exact decimals (0.4 * 0.2 -> 0.08).
        """
        out = []
        for tc in self.t_c_values:
            for mult in self.t_r_multipliers:
                tr = round(mult * tc, 12)
                for tp in self.t_p_values:
                    out.append((tc, tr, tp))
        return out


def standard_grid(folds: int = 4) -> GridSpec:
    """The default 4 x 4 x 10 sweep (160 configurations)."""
    return GridSpec(folds=folds)


@dataclass(frozen=True)
class EvalReport:
    """Accuracy plus the confusion matrix (rows true, columns predicted)."""

    accuracy: float
    confusion: tuple[tuple[int, ...], ...]
    scenario_counts: tuple[int, int, int]
    class_names: tuple[str, ...]
    n_records: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": [list(row) for row in self.confusion],
            "scenario_counts": list(self.scenario_counts),
            "class_names": list(self.class_names),
            "n_records": self.n_records,
        }


@dataclass(frozen=True)
class FoldScore:
    t_c: float
    t_r: float
    t_p: float
    fold: int
    accuracy: float


@dataclass(frozen=True)
class ConfigScore:
    t_c: float
    t_r: float
    t_p: float
    accuracy: float


@dataclass(frozen=True)
class GridSearchResult:
    best: ThresholdConfig
    best_score: float
    fold_scores: tuple[FoldScore, ...]
    config_scores: tuple[ConfigScore, ...]


def kfold_split(records: Sequence, k: int, seed: int) -> list[list]:
    """Shuffle deterministically and split into k folds with sizes differing by <= 1."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > len(records):
        raise TooFewRecords(f"cannot split {len(records)} records into {k} folds")
    order = list(range(len(records)))
    random.Random(seed).shuffle(order)
    base, extra = divmod(len(records), k)
    folds: list[list] = []
    at = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append([records[j] for j in order[at : at + size]])
        at += size
    return folds


def evaluate(
    records: Sequence[ImageRecord],
    model: SpcModel,
    cfg: ThresholdConfig = ThresholdConfig(),
    templates: TemplateSet = DEFAULT_TEMPLATES,
    explanations: Sequence[Explanation] | None = None,
) -> EvalReport:
    """Run the pipeline over labeled records and tally accuracy and confusion.

    Pass explanations to reuse results already computed for the same
    records and configuration instead of re-running the pipeline.
    """
    if not records:
        raise ValueError("no records to evaluate")
    if explanations is not None and len(explanations) != len(records):
        raise ValueError(f"{len(records)} records vs {len(explanations)} explanations")
    names = tuple(model.class_names)
    index = {name: i for i, name in enumerate(names)}
    k = len(names)
    confusion = [[0] * k for _ in range(k)]
    scen = [0, 0, 0]
    for pos, record in enumerate(records):
        if record.true_label is None:
            raise MissingLabel(f"{record.image_id}: no true label")
        if record.true_label not in index:
            raise UnknownClass(f"{record.image_id}: label {record.true_label!r} not in class list")
        if explanations is None:
            expl = explain_record(record, model, cfg, templates)
        else:
            expl = explanations[pos]
        confusion[index[record.true_label]][index[expl.final_label]] += 1
        scen[expl.scenario - 1] += 1
    correct = sum(confusion[i][i] for i in range(k))
    return EvalReport(
        accuracy=correct / len(records),
        confusion=tuple(tuple(row) for row in confusion),
        scenario_counts=(scen[0], scen[1], scen[2]),
        class_names=names,
        n_records=len(records),
    )


@dataclass(frozen=True)
class _PrecompImage:
    """Everything grid search needs per image, computed once across all configs."""

    image_id: str
    true_label: str
    top_label: str
    top_prob: float
    dets: tuple[tuple[str, float, float], ...]  # (label, confidence, overlap)


def _precompute(
    record: ImageRecord, mode: BinarizeMode
) -> tuple[_PrecompImage, tuple[str, ...]]:
    if record.true_label is None:
        raise MissingLabel(f"{record.image_id}: no true label")
    if record.heatmap_path is None:
        raise MissingHeatmap(f"{record.image_id}: grid search needs heatmaps")
    probs = read_probs(record.probs_path, expect_image_id=record.image_id)
    dets = read_detections(
        record.detections_path, record.width, record.height, expect_image_id=record.image_id
    )
    hm = read_heatmap(record.heatmap_path)
    mask = binarize(hm, mode)
    scored = tuple((d.label, d.confidence, overlap_score(mask, d)) for d in dets)
    img = _PrecompImage(
        record.image_id, record.true_label, probs.top_label, probs.top_prob, scored
    )
    return img, probs.class_names


def _tally_model(images: Sequence[_PrecompImage], tc: float, tr: float, class_names: list[str]) -> SpcModel:
    model = SpcModel(list(class_names))
    for img in images:
        labels = [label for label, dc, os_ in img.dets if dc > tc and dc * os_ > tr]
        train_accumulate(model, labels, img.true_label)
    return model


def _predict(img: _PrecompImage, model: SpcModel, tc: float, tp: float) -> str:
    # Mirrors pipeline.explain: scenario 1 keeps the classifier label,
    # scenario 2 takes the weighted-score winner, scenario 3 falls back.
    if img.top_prob > tp:
        return img.top_label
    labels_tc = [label for label, dc, _ in img.dets if dc > tc]
    if labels_tc:
        cs = score_classes(model, labels_tc)
        if cs.scores[cs.winner] > 0.0:
            return model.class_names[cs.winner]
    return img.top_label


def grid_search(
    records: Sequence[ImageRecord],
    spec: GridSpec,
    seed: int,
    binarize_mode: BinarizeMode = DEFAULT_BINARIZE,
) -> GridSearchResult:
    """Cross-validated sweep over the full grid.

    Every configuration sees every record: the weights are retrained on
    the k-1 training folds and scored on the held-out fold, then fold
    accuracies are averaged. Deterministic for a fixed seed.
    """
    if not records:
        raise ValueError("no records to search over")
    pre: list[_PrecompImage] = []
    class_names: list[str] | None = None
    for r in records:
        img, names = _precompute(r, binarize_mode)
        if class_names is None:
            class_names = list(names)
        elif list(names) != class_names:
            raise UnknownClass(f"{r.image_id}: class list differs from the first record")
        pre.append(img)
    assert class_names is not None
    folds = kfold_split(pre, spec.folds, seed)
    trains = [
        [img for j, fold in enumerate(folds) if j != i for img in fold]
        for i in range(len(folds))
    ]

    fold_scores: list[FoldScore] = []
    config_scores: list[ConfigScore] = []
    best: tuple[float, float, float] | None = None
    best_score = -1.0
    for tc, tr, tp in spec.configs():
        accs = []
        for i, fold in enumerate(folds):
            model = _tally_model(trains[i], tc, tr, class_names)
            hits = sum(1 for img in fold if _predict(img, model, tc, tp) == img.true_label)
            acc = hits / len(fold)
            fold_scores.append(FoldScore(tc, tr, tp, i, acc))
            accs.append(acc)
        score = sum(accs) / len(accs)
        config_scores.append(ConfigScore(tc, tr, tp, score))
        if score > best_score:
            best_score = score
            best = (tc, tr, tp)
    assert best is not None
    cfg = ThresholdConfig(t_c=best[0], t_r=best[1], t_p=best[2], binarize=binarize_mode)
    return GridSearchResult(cfg, best_score, tuple(fold_scores), tuple(config_scores))


def fidelity(
    records: Sequence[ImageRecord],
    explanations: Sequence[Explanation],
    rule: str = "any",
) -> float:
    """Fraction of annotated records whose explanation cites an annotated object.

    A record counts as a hit when at least one non-"empty" annotation
    slot matches a contributing object label (case-insensitive exact
    match); rule="majority" instead requires more than half the
    non-empty slots to match. Records with no non-empty annotation are
    excluded from the denominator.
    """
    if rule not in ("any", "majority"):
        raise ValueError(f"unknown fidelity rule {rule!r}")
    if len(records) != len(explanations):
        raise ValueError(f"{len(records)} records vs {len(explanations)} explanations")
    evaluated = 0
    hits = 0
    for record, expl in zip(records, explanations):
        if record.annotation is None:
            continue
        wanted = [a.casefold() for a in record.annotation if a.casefold() != "empty"]
        if not wanted:
            continue
        evaluated += 1
        present = {o.casefold() for o in expl.contributing_objects}
        matched = sum(1 for a in wanted if a in present)
        if (matched >= 1) if rule == "any" else (matched * 2 > len(wanted)):
            hits += 1
    if evaluated == 0:
        raise NoAnnotatedRecords("no record carries a non-empty annotation")
    return hits / evaluated


# --- CSV outputs ---

def write_fold_scores_csv(rows: Sequence[FoldScore], path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["t_c", "t_r", "t_p", "fold", "accuracy"])
        for r in rows:
            w.writerow([repr(r.t_c), repr(r.t_r), repr(r.t_p), r.fold, repr(r.accuracy)])


def write_config_scores_csv(rows: Sequence[ConfigScore], path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["t_c", "t_r", "t_p", "accuracy"])
        for r in rows:
            w.writerow([repr(r.t_c), repr(r.t_r), repr(r.t_p), repr(r.accuracy)])


def write_confusion_csv(report: EvalReport, path: Path | str) -> None:
    """Confusion matrix with class-name header row and column (rows true)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["true\\predicted", *report.class_names])
        for name, row in zip(report.class_names, report.confusion):
            w.writerow([name, *row])
