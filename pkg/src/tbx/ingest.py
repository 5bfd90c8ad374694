"""File formats and boundary validation for every artifact the pipeline consumes.

Formats:
  heatmap   binary: magic "TBXH", version byte 1, u32le width, u32le height,
            then width*height float32le cells, row-major. Total size is
            13 + 4*w*h bytes.
  detections JSON: {"image_id": str, "detections": [{"label": str,
            "confidence": float, "bbox": [x, y, w, h]}]}
  probs     JSON: {"image_id": str, "class_names": [str...], "probs": [float...]}
  manifest  JSON lines, one record per line with fields image_id, width,
            height, true_label (nullable), detections, heatmap (nullable),
            probs, annotation (nullable, exactly 3 strings).
  model     JSON: {"version": 1, "class_names": [...], "objects":
            {label: {"counts": [int per class], "total": int}}}

All validation happens here; downstream modules never see an
out-of-range confidence, probability, or box. Readers are pure functions
of file contents and loads are atomic (a bad line fails the whole
manifest).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    BadMagic,
    BadVersion,
    BboxOutOfImage,
    CountMismatch,
    DuplicateImageId,
    IoFailure,
    ProbSumError,
    SchemaError,
    TruncatedPayload,
    ValueOutOfRange,
)
from .saliency import Heatmap
from .spc import SpcModel
from .validation import Detection, DetectionSet

HEATMAP_MAGIC = b"TBXH"
HEATMAP_VERSION = 1
_HEATMAP_HEADER = struct.Struct("<4sBII")

# Exporter float noise this far past 1.0 (or below 0.0) clamps; beyond it errors.
_CELL_TOLERANCE = 1e-6

PROB_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ProbVector:
    """Classifier softmax output over an ordered class list."""

    class_names: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.class_names) < 2:
            raise SchemaError("need at least 2 classes")
        if len(self.class_names) != len(self.probs):
            raise SchemaError(
                f"{len(self.class_names)} class names but {len(self.probs)} probabilities"
            )
        if len(set(self.class_names)) != len(self.class_names):
            raise SchemaError("class names must be unique")
        for p in self.probs:
            if math.isnan(p) or not 0.0 <= p <= 1.0:
                raise SchemaError(f"probability {p!r} outside [0, 1]")
        total = sum(self.probs)
        if abs(total - 1.0) > PROB_SUM_TOLERANCE:
            raise ProbSumError(f"probabilities sum to {total!r}, not 1")

    @property
    def top_index(self) -> int:
        return self.probs.index(max(self.probs))

    @property
    def top_label(self) -> str:
        return self.class_names[self.top_index]

    @property
    def top_prob(self) -> float:
        return self.probs[self.top_index]


@dataclass(frozen=True)
class ImageRecord:
    """One manifest row; file references are resolved against the manifest directory."""

    image_id: str
    width: int
    height: int
    true_label: str | None
    detections_path: Path
    heatmap_path: Path | None
    probs_path: Path
    annotation: tuple[str, str, str] | None


# --- heatmap binary format ---

def write_heatmap(hm: Heatmap, path: Path | str) -> None:
    """Serialize a heatmap; read_heatmap is its exact inverse."""
    header = _HEATMAP_HEADER.pack(HEATMAP_MAGIC, HEATMAP_VERSION, hm.width, hm.height)
    payload = np.ascontiguousarray(hm.values, dtype="<f4").tobytes()
    try:
        Path(path).write_bytes(header + payload)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def read_heatmap(path: Path | str) -> Heatmap:
    """Decode a heatmap file, validating magic, version, dims, and cell range."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if len(data) < 4 or data[:4] != HEATMAP_MAGIC:
        raise BadMagic(f"{path}: not a heatmap file")
    if len(data) < 5:
        raise TruncatedPayload(f"{path}: missing version byte")
    if data[4] != HEATMAP_VERSION:
        raise BadVersion(f"{path}: unsupported version {data[4]}")
    if len(data) < _HEATMAP_HEADER.size:
        raise TruncatedPayload(f"{path}: header cut short at {len(data)} bytes")
    _, _, width, height = _HEATMAP_HEADER.unpack_from(data)
    if width == 0 or height == 0:
        raise BadHeader(f"{path}: zero dimension {width}x{height}")
    expected = _HEATMAP_HEADER.size + 4 * width * height
    if len(data) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(data)} bytes, expected {expected}"
        )
    cells = np.frombuffer(data, dtype="<f4", offset=_HEATMAP_HEADER.size).copy()
    if np.any(~np.isfinite(cells)) or np.any(cells > 1.0 + _CELL_TOLERANCE) or np.any(
        cells < -_CELL_TOLERANCE
    ):
        bad = cells[
            ~np.isfinite(cells) | (cells > 1.0 + _CELL_TOLERANCE) | (cells < -_CELL_TOLERANCE)
        ][0]
        raise ValueOutOfRange(f"{path}: cell value {bad!r} outside [0, 1]")
    np.clip(cells, 0.0, 1.0, out=cells)
    return Heatmap(int(width), int(height), cells)


# --- JSON documents ---

def _load_json(path: Path | str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return doc


def _get(doc: dict, key: str, ctx: str):
    if key not in doc:
        raise SchemaError(f"{ctx}: missing field {key!r}")
    return doc[key]


def _as_str(x, ctx: str) -> str:
    if not isinstance(x, str):
        raise SchemaError(f"{ctx}: expected string, got {type(x).__name__}")
    return x


def _as_real(x, ctx: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"{ctx}: expected number, got {type(x).__name__}")
    return float(x)


def _as_int(x, ctx: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SchemaError(f"{ctx}: expected integer, got {type(x).__name__}")
    return x


def _as_list(x, ctx: str) -> list:
    if not isinstance(x, list):
        raise SchemaError(f"{ctx}: expected list, got {type(x).__name__}")
    return x


def read_detections(
    path: Path | str,
    image_w: int,
    image_h: int,
    expect_image_id: str | None = None,
) -> DetectionSet:
    """Read and validate a detections document against the image dimensions."""
    doc = _load_json(path)
    ctx = str(path)
    image_id = _as_str(_get(doc, "image_id", ctx), f"{ctx}: image_id")
    if expect_image_id is not None and image_id != expect_image_id:
        raise SchemaError(f"{ctx}: image_id {image_id!r} != expected {expect_image_id!r}")
    dets = []
    for i, entry in enumerate(_as_list(_get(doc, "detections", ctx), f"{ctx}: detections")):
        dctx = f"{ctx}: detections[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{dctx}: expected object")
        label = _as_str(_get(entry, "label", dctx), f"{dctx}: label")
        conf = _as_real(_get(entry, "confidence", dctx), f"{dctx}: confidence")
        bbox = _as_list(_get(entry, "bbox", dctx), f"{dctx}: bbox")
        if len(bbox) != 4:
            raise SchemaError(f"{dctx}: bbox must have 4 entries")
        x, y, w, h = (_as_real(v, f"{dctx}: bbox") for v in bbox)
        if x < 0 or y < 0 or x + w > image_w or y + h > image_h:
            raise BboxOutOfImage(
                f"{dctx}: box [{x}, {y}, {w}, {h}] exceeds image {image_w}x{image_h}"
            )
        # Detection itself rejects nonpositive sizes and bad confidences.
        dets.append(Detection(label, conf, (x, y, w, h)))
    return DetectionSet(image_id, image_w, image_h, tuple(dets))


def read_probs(path: Path | str, expect_image_id: str | None = None) -> ProbVector:
    """Read and validate a probability-vector document."""
    doc = _load_json(path)
    ctx = str(path)
    image_id = _as_str(_get(doc, "image_id", ctx), f"{ctx}: image_id")
    if expect_image_id is not None and image_id != expect_image_id:
        raise SchemaError(f"{ctx}: image_id {image_id!r} != expected {expect_image_id!r}")
    names = tuple(
        _as_str(n, f"{ctx}: class_names") for n in _as_list(_get(doc, "class_names", ctx), ctx)
    )
    probs = tuple(_as_real(p, f"{ctx}: probs") for p in _as_list(_get(doc, "probs", ctx), ctx))
    return ProbVector(names, probs)


def load_manifest(path: Path | str) -> list[ImageRecord]:
    """Load a JSON-lines manifest atomically.

    Relative file references are resolved against the manifest's
    directory. Any malformed line fails the whole load.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    base = path.parent
    records: list[ImageRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        ctx = f"{path}:{lineno}"
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{ctx}: invalid JSON: {e}") from e
        if not isinstance(doc, dict):
            raise SchemaError(f"{ctx}: expected a JSON object")
        image_id = _as_str(_get(doc, "image_id", ctx), f"{ctx}: image_id")
        if not image_id:
            raise SchemaError(f"{ctx}: empty image_id")
        if image_id in seen:
            raise DuplicateImageId(f"{ctx}: duplicate image_id {image_id!r}")
        seen.add(image_id)
        width = _as_int(_get(doc, "width", ctx), f"{ctx}: width")
        height = _as_int(_get(doc, "height", ctx), f"{ctx}: height")
        if width < 1 or height < 1:
            raise SchemaError(f"{ctx}: non-positive image size {width}x{height}")
        true_label = doc.get("true_label")
        if true_label is not None:
            true_label = _as_str(true_label, f"{ctx}: true_label")
        det_ref = _as_str(_get(doc, "detections", ctx), f"{ctx}: detections")
        probs_ref = _as_str(_get(doc, "probs", ctx), f"{ctx}: probs")
        hm_ref = doc.get("heatmap")
        if hm_ref is not None:
            hm_ref = _as_str(hm_ref, f"{ctx}: heatmap")
        annotation = doc.get("annotation")
        if annotation is not None:
            items = _as_list(annotation, f"{ctx}: annotation")
            if len(items) != 3:
                raise SchemaError(f"{ctx}: annotation must have exactly 3 slots")
            annotation = tuple(_as_str(a, f"{ctx}: annotation") for a in items)
        records.append(
            ImageRecord(
                image_id=image_id,
                width=width,
                height=height,
                true_label=true_label,
                detections_path=base / det_ref,
                heatmap_path=None if hm_ref is None else base / hm_ref,
                probs_path=base / probs_ref,
                annotation=annotation,
            )
        )
    return records


# --- occurrence-weight model serialization ---

def save_spc(model: SpcModel, path: Path | str) -> None:
    """Write the model as JSON with object labels sorted for stable bytes."""
    objects = {
        label: {"counts": list(row), "total": sum(row)}
        for label, row in model.counts.items()
    }
    doc = {"version": 1, "class_names": list(model.class_names), "objects": objects}
    try:
        Path(path).write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def load_spc(path: Path | str) -> SpcModel:
    """Load a model file, enforcing count/total consistency."""
    doc = _load_json(path)
    ctx = str(path)
    version = _as_int(_get(doc, "version", ctx), f"{ctx}: version")
    if version != 1:
        raise BadVersion(f"{ctx}: unsupported model version {version}")
    names = [
        _as_str(n, f"{ctx}: class_names")
        for n in _as_list(_get(doc, "class_names", ctx), ctx)
    ]
    if not names or len(set(names)) != len(names):
        raise SchemaError(f"{ctx}: class_names must be nonempty and unique")
    objects = _get(doc, "objects", ctx)
    if not isinstance(objects, dict):
        raise SchemaError(f"{ctx}: objects must be an object")
    counts: dict[str, list[int]] = {}
    for label in sorted(objects):
        entry = objects[label]
        octx = f"{ctx}: objects[{label!r}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{octx}: expected object")
        row = [_as_int(c, f"{octx}: counts") for c in _as_list(_get(entry, "counts", octx), octx)]
        if len(row) != len(names):
            raise SchemaError(f"{octx}: counts length {len(row)} != {len(names)} classes")
        if any(c < 0 for c in row):
            raise SchemaError(f"{octx}: negative count")
        total = _as_int(_get(entry, "total", octx), octx)
        if total != sum(row):
            raise CountMismatch(f"{octx}: total {total} != sum of counts {sum(row)}")
        counts[label] = row
    return SpcModel(names, counts)
