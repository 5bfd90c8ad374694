"""Object validation: overlap scoring of detections against a relevance mask.

Each detection's overlap score is the fraction of its bounding box that
the binarized heatmap covers. Multiplying by the detection confidence
gives a relevance score; detections that clear both the confidence and
relevance thresholds are the "validated objects" cited by scenario-1
explanations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BboxOutOfImage, ConfidenceOutOfRange, DegenerateBbox
from .saliency import BinaryMask


@dataclass(frozen=True)
class Detection:
    """One detector output: label, confidence, and a pixel-space box.

    The box is (x, y, w, h) with origin at the top-left corner; floats are
    allowed so detector output is not rounded lossily.
    """

    label: str
    confidence: float
    bbox: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        x, y, w, h = self.bbox
        if not (w > 0 and h > 0):
            raise BboxOutOfImage(f"non-positive box size {w}x{h} for {self.label!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ConfidenceOutOfRange(
                f"confidence {self.confidence} for {self.label!r} outside [0, 1]"
            )


@dataclass(frozen=True)
class DetectionSet:
    """All detections for one image, with the image dimensions they were validated against."""

    image_id: str
    width: int
    height: int
    detections: tuple[Detection, ...]

    def __iter__(self):
        return iter(self.detections)

    def __len__(self) -> int:
        return len(self.detections)


@dataclass(frozen=True)
class ValidatedObject:
    """A detection that passed both gates, with its scores."""

    label: str
    overlap_score: float
    relevance_score: float
    detection: Detection

    def __post_init__(self) -> None:
        expected = self.detection.confidence * self.overlap_score
        if abs(self.relevance_score - expected) > 1e-12:
            raise ValueError("relevance_score must equal confidence * overlap_score")


def _pixel_span(lo: float, size: float) -> tuple[int, int]:
    # Pixel index i is inside iff lo <= i + 0.5 < lo + size.
    first = math.ceil(lo - 0.5)
    last = math.ceil(lo + size - 0.5) - 1
    return first, last


def overlap_score(mask: BinaryMask, det: Detection) -> float:
    """Fraction of the box covered by the mask.

    A pixel belongs to the box iff its center falls inside, which keeps
    the count exact for fractional box coordinates. Returns
    set_pixels_in_box / pixels_in_box.
    """
    x, y, w, h = det.bbox
    if x < 0 or y < 0 or x + w > mask.width or y + h > mask.height:
        raise BboxOutOfImage(
            f"box {det.bbox} exceeds {mask.width}x{mask.height} mask"
        )
    c0, c1 = _pixel_span(x, w)
    r0, r1 = _pixel_span(y, h)
    if c1 < c0 or r1 < r0:
        raise DegenerateBbox(f"no pixel center inside box {det.bbox}")
    window = mask.bits[r0 : r1 + 1, c0 : c1 + 1]
    return float(int(window.sum())) / window.size


def validate_objects(
    mask: BinaryMask,
    detections,
    t_c: float,
    t_r: float,
) -> list[ValidatedObject]:
    """Apply the confidence gate then the relevance gate.

    Keeps detections with confidence > t_c whose relevance score
    (confidence * overlap) is > t_r. Both comparisons are strict. The
    result is ordered by descending relevance score, ties broken by label
    and then input order.
    """
    if not 0.0 <= t_c <= 1.0 or not 0.0 <= t_r <= 1.0:
        raise ValueError(f"thresholds must lie in [0, 1], got t_c={t_c}, t_r={t_r}")
    kept: list[tuple[int, ValidatedObject]] = []
    for idx, det in enumerate(detections):
        if det.confidence <= t_c:
            continue
        os_ = overlap_score(mask, det)
        rs = det.confidence * os_
        if rs > t_r:
            kept.append((idx, ValidatedObject(det.label, os_, rs, det)))
    kept.sort(key=lambda p: (-p[1].relevance_score, p[1].label, p[0]))
    return [v for _, v in kept]
