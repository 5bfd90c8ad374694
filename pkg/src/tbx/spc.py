"""Statistical prediction correction from object-class occurrence counts.

Training tallies how often each object label occurs in scenes of each
class. An object's weight for a class is its count there divided by its
total count, so weights over classes sum to 1 for every trained object.
At test time each class receives the multiplicity-weighted sum of the
weights of the objects present, and the highest-scoring class wins.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import UnknownClass, UnseenObject


@dataclass
class SpcModel:
    """Per-object, per-class occurrence counts over a fixed class list."""

    class_names: list[str]
    counts: dict[str, list[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class names must be unique")
        if not self.class_names:
            raise ValueError("class list must be nonempty")
        k = len(self.class_names)
        for label, row in self.counts.items():
            if len(row) != k:
                raise ValueError(f"count vector for {label!r} has length {len(row)}, expected {k}")
            if any(c < 0 for c in row):
                raise ValueError(f"negative count for {label!r}")

    def class_index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise UnknownClass(f"class {name!r} not in {self.class_names}") from None

    def total(self, label: str) -> int:
        """Total occurrences of the object across all classes (0 if unseen)."""
        row = self.counts.get(label)
        return sum(row) if row is not None else 0


@dataclass(frozen=True)
class ClassScores:
    """Weighted per-class scores with the argmax already resolved."""

    scores: tuple[float, ...]
    winner: int
    winner_is_unique: bool

    @classmethod
    def from_scores(cls, scores: Sequence[float]) -> "ClassScores":
        vals = tuple(float(s) for s in scores)
        if any(s < 0 for s in vals):
            raise ValueError("scores must be nonnegative")
        top = max(vals)
        winner = vals.index(top)
        return cls(vals, winner, vals.count(top) == 1)


def train_accumulate(model: SpcModel, objects: Iterable[str], true_class: str) -> SpcModel:
    """Add one scene's object occurrences to the counts for its true class.

    Each label occurrence in the list increments that object's count for
    true_class by one; labels never seen before start from a zero vector.
    Mutates and returns the model.
    """
    ci = model.class_index(true_class)
    k = len(model.class_names)
    for label in objects:
        row = model.counts.get(label)
        if row is None:
            row = [0] * k
            model.counts[label] = row
        row[ci] += 1
    return model


def merge_counts(dst: SpcModel, src: SpcModel) -> SpcModel:
    """Add src's counts into dst (commutative; supports partitioned training)."""
    if dst.class_names != src.class_names:
        raise UnknownClass("models disagree on the class list")
    for label, row in src.counts.items():
        drow = dst.counts.get(label)
        if drow is None:
            dst.counts[label] = list(row)
        else:
            for i, c in enumerate(row):
                drow[i] += c
    return dst


def weight(model: SpcModel, obj: str, class_index: int) -> float:
    """Occurrence weight of the object for one class: count / total."""
    row = model.counts.get(obj)
    if row is None:
        raise UnseenObject(f"object {obj!r} never trained")
    total = sum(row)
    if total == 0:
        raise UnseenObject(f"object {obj!r} has zero total count")
    return row[class_index] / total


def score_classes(model: SpcModel, objects: Sequence[str]) -> ClassScores:
    """Score every class from the objects present in the scene.

    Each distinct label contributes multiplicity * weight to every class;
    labels unseen in training contribute nothing. An empty object list
    yields all-zero scores.
    """
    k = len(model.class_names)
    scores = [0.0] * k
    tally = Counter(objects)
    for label in sorted(tally):
        row = model.counts.get(label)
        if row is None:
            continue
        total = sum(row)
        if total == 0:
            continue
        n = tally[label]
        for c in range(k):
            if row[c]:
                scores[c] += n * (row[c] / total)
    return ClassScores.from_scores(scores)


def correct(model: SpcModel, objects: Sequence[str]) -> str | None:
    """Corrected class name, or None when every score is zero.

    A None return means the statistics carry no signal for this scene
    (no objects, or only unseen ones) and the caller should fall back to
    the original classifier prediction.
    """
    cs = score_classes(model, objects)
    if cs.scores[cs.winner] > 0.0:
        return model.class_names[cs.winner]
    return None
