"""Deterministic synthetic corpus generator for end-to-end testing.

Each generated image is a bundle of files (detections, heatmap,
probability vector, manifest line) with planted statistics:

  * every class has signature objects; their boxes get Gaussian blobs in
    the heatmap, so their relevance scores land in a configurable band;
  * "partial" coverage objects get small off-center blobs and land in a
    lower relevance band, letting tests separate relevance thresholds;
  * ghost and confuser detections reuse other labels at low relevance,
    so lowering the relevance threshold pollutes training measurably;
  * low-confidence noise detections sit below any useful confidence gate;
  * the simulated classifier is confidently right, confidently wrong, or
    unconfident according to exact quotas, so corpus-level accuracy is
    planted, not sampled.

Detection confidences are back-solved from each box's measured overlap
against the binarized heatmap (DC = RS / OS), which is what pins
relevance scores inside their bands. Generation is deterministic per
seed and every emitted file passes ingest validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IoFailure
from .ingest import write_heatmap
from .saliency import BinarizeMode, DEFAULT_BINARIZE, Heatmap, binarize
from .validation import Detection, overlap_score


@dataclass(frozen=True)
class ObjectSpec:
    """One signature object of a class.

    presence is the probability the object appears in an image of its
    class; when present, the instance count is uniform over
    [min_instances, max_instances]. coverage "full" centers a large blob
    on the box (high relevance band); "partial" uses a small off-center
    blob (low relevance band).
    """

    label: str
    presence: float
    min_instances: int = 1
    max_instances: int = 1
    coverage: str = "full"

    def __post_init__(self) -> None:
        if not 0.0 <= self.presence <= 1.0:
            raise ValueError(f"presence {self.presence} outside [0, 1]")
        if not 1 <= self.min_instances <= self.max_instances:
            raise ValueError("need 1 <= min_instances <= max_instances")
        if self.coverage not in ("full", "partial"):
            raise ValueError(f"coverage must be 'full' or 'partial', got {self.coverage!r}")

    @property
    def mean_instances(self) -> float:
        return (self.min_instances + self.max_instances) / 2.0


@dataclass(frozen=True)
class ClassSpec:
    name: str
    objects: tuple[ObjectSpec, ...]

    def __post_init__(self) -> None:
        if not self.objects:
            raise ValueError(f"class {self.name!r} has an empty vocabulary")
        labels = [o.label for o in self.objects]
        if len(set(labels)) != len(labels):
            raise ValueError(f"class {self.name!r} repeats an object label")


@dataclass(frozen=True)
class ClassifierProfile:
    """Simulated softmax behaviour with exact quotas.

    confident_fraction of images get a top probability drawn from
    confident_band, the rest from unconfident_band; within each bucket
    the top class equals the true class for exactly the given accuracy
    share (rounded).
    """

    confident_fraction: float = 0.6
    confident_accuracy: float = 0.85
    unconfident_accuracy: float = 0.10
    confident_band: tuple[float, float] = (0.72, 0.98)
    unconfident_band: tuple[float, float] = (0.22, 0.68)

    def __post_init__(self) -> None:
        for v in (self.confident_fraction, self.confident_accuracy, self.unconfident_accuracy):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"profile value {v} outside [0, 1]")
        for lo, hi in (self.confident_band, self.unconfident_band):
            if not 0.0 < lo <= hi < 1.0:
                raise ValueError(f"bad probability band ({lo}, {hi})")


@dataclass(frozen=True)
class SynthSpec:
    """Full corpus recipe; see the module docstring for the role taxonomy."""

    classes: tuple[ClassSpec, ...]
    classifier: ClassifierProfile = ClassifierProfile()
    image_width: int = 64
    image_height: int = 64
    weak_only_fraction: float = 0.0
    ghost_labels: tuple[str, ...] = ()
    ghost_rate: float = 0.0
    confuser_rate: float = 0.0
    lowconf_rate: float = 0.0
    annotate: bool = True
    binarize: BinarizeMode = DEFAULT_BINARIZE
    seed: int = 0
    rs_strong: tuple[float, float] = (0.18, 0.80)
    rs_weak: tuple[float, float] = (0.086, 0.114)
    rs_low: tuple[float, float] = (0.046, 0.074)
    dc_band: tuple[float, float] = (0.26, 0.97)
    dc_noise_band: tuple[float, float] = (0.05, 0.18)

    def __post_init__(self) -> None:
        if not self.classes:
            raise ValueError("need at least one class")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        if self.image_width < 16 or self.image_height < 16:
            raise ValueError("images must be at least 16x16")
        if not 0.0 <= self.weak_only_fraction <= 1.0:
            raise ValueError("weak_only_fraction outside [0, 1]")
        for rate in (self.ghost_rate, self.confuser_rate, self.lowconf_rate):
            if rate < 0:
                raise ValueError("rates must be nonnegative")

    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]


def demo_spec(seed: int = 0) -> SynthSpec:
    """Nine-scene corpus showcasing correction of a degraded classifier.

    Signature objects are exclusive per class, so the learned weights
    are sharp and unconfident predictions get corrected almost always.
    The classifier is 85% right when confident (60% of images) and 10%
    right otherwise: 55% standalone accuracy by quota.
    """
    vocab = {
        "kitchen": ("oven", "refrigerator", "sink"),
        "bedroom": ("bed", "lamp", "wardrobe"),
        "bathroom": ("bathtub", "toilet", "mirror"),
        "office": ("desk", "monitor", "keyboard"),
        "street": ("car", "traffic light", "lamppost"),
        "park": ("bench", "fountain", "swing"),
        "beach": ("umbrella", "surfboard", "sandcastle"),
        "forest": ("pine", "mushroom", "boulder"),
        "garage": ("toolbox", "ladder", "tire"),
    }
    classes = tuple(
        ClassSpec(
            name,
            tuple(
                ObjectSpec(label, presence=0.75, min_instances=1, max_instances=2)
                for label in labels
            ),
        )
        for name, labels in vocab.items()
    )
    return SynthSpec(
        classes=classes,
        classifier=ClassifierProfile(0.6, 0.85, 0.10),
        confuser_rate=0.6,
        lowconf_rate=0.8,
        seed=seed,
    )


def planted_threshold_spec(seed: int = 0) -> SynthSpec:
    """Corpus whose best thresholds under the standard grid are (0.2, 0.08, 0.7).

    The plantings, one per swept dimension:

      * probability threshold: confident images (top prob in (0.72, 0.98))
        are right 97% of the time, unconfident ones (prob in (0.22, 0.68))
        only 8%, and correction of unconfident images is good but below
        97%, so sweeping the probability threshold peaks exactly at 0.7;
      * confidence threshold: informative detections carry confidences
        spread over (0.26, 0.97), so every step above 0.2 discards votes
        and training data; noise detections sit below 0.2 and are gone at
        every grid point;
      * relevance threshold: weak signature objects live in the
        (0.086, 0.114) relevance band, so thresholds of 0.12 and 0.16
        erase them from training, while ghost and confuser detections in
        the (0.046, 0.074) band pollute training only at 0.04. Ghosts
        reuse anchor labels, so training them in dilutes the anchors'
        weights and flips scenes that hinge on a single anchor vote.
    """
    vocab = {
        "kitchen": ("oven", "refrigerator", "sink", "kettle"),
        "bedroom": ("bed", "lamp", "wardrobe", "pillow"),
        "bathroom": ("bathtub", "toilet", "mirror", "towel"),
        "office": ("desk", "monitor", "keyboard", "stapler"),
        "street": ("car", "traffic light", "lamppost", "hydrant"),
        "park": ("bench", "fountain", "swing", "kite"),
        "beach": ("umbrella", "surfboard", "sandcastle", "bucket"),
        "forest": ("pine", "mushroom", "boulder", "fern"),
        "garage": ("toolbox", "ladder", "tire", "workbench"),
    }
    classes = []
    anchors = []
    for name, (anchor, sig1, sig2, weak) in vocab.items():
        anchors.append(anchor)
        classes.append(
            ClassSpec(
                name,
                (
                    ObjectSpec(anchor, presence=0.85, min_instances=1, max_instances=2),
                    ObjectSpec(sig1, presence=0.45, min_instances=1, max_instances=2),
                    ObjectSpec(sig2, presence=0.45, min_instances=1, max_instances=2),
                    ObjectSpec(weak, presence=0.3, min_instances=2, max_instances=3,
                               coverage="partial"),
                ),
            )
        )
    return SynthSpec(
        classes=tuple(classes),
        classifier=ClassifierProfile(0.55, 0.97, 0.08),
        weak_only_fraction=0.18,
        ghost_labels=tuple(anchors),
        ghost_rate=2.2,
        confuser_rate=0.8,
        lowconf_rate=0.7,
        seed=seed,
    )


def expected_object_weights(spec: SynthSpec) -> dict[str, list[float]]:
    """Planted per-object class-occurrence table.

    Only valid when every object has full coverage and the low-relevance
    roles are disabled, because those instances can be skipped or
    relabeled during emission. Classes are assumed balanced (generation
    assigns true classes round-robin).
    """
    names = spec.class_names()
    expected: dict[str, list[float]] = {}
    for ci, cls in enumerate(spec.classes):
        for obj in cls.objects:
            row = expected.setdefault(obj.label, [0.0] * len(names))
            row[ci] += obj.presence * obj.mean_instances
    for label, row in expected.items():
        total = sum(row)
        expected[label] = [v / total for v in row]
    return expected


# --- internal generation machinery ---

_BLOB_AMP = (0.85, 1.0)
_NOISE_AMP = 0.02


def _random_box(rng: np.random.Generator, w: int, h: int) -> tuple[int, int, int, int]:
    bw = int(rng.integers(max(6, w // 5), max(7, w // 3) + 1))
    bh = int(rng.integers(max(6, h // 5), max(7, h // 3) + 1))
    x = int(rng.integers(0, w - bw + 1))
    y = int(rng.integers(0, h - bh + 1))
    return x, y, bw, bh


def _add_blob(field_arr: np.ndarray, box, coverage: str, rng: np.random.Generator) -> None:
    x, y, bw, bh = box
    h, w = field_arr.shape
    if coverage == "full":
        cx, cy = x + bw / 2.0, y + bh / 2.0
        sx, sy = 0.45 * bw, 0.45 * bh
    else:
        cx, cy = x + 0.22 * bw, y + 0.22 * bh
        sx, sy = 0.16 * bw, 0.16 * bh
    amp = rng.uniform(*_BLOB_AMP)
    cols = (np.arange(w) - cx) / sx
    rows = (np.arange(h) - cy) / sy
    field_arr += amp * np.exp(-0.5 * (rows[:, None] ** 2 + cols[None, :] ** 2))


def _dc_for_band(os_meas, rs_band, dc_band, rng: np.random.Generator) -> float | None:
    """Back-solve a confidence whose relevance lands in rs_band, if feasible."""
    if os_meas <= 0.0:
        return None
    lo = max(rs_band[0], dc_band[0] * os_meas)
    hi = min(rs_band[1], dc_band[1] * os_meas)
    if lo > hi:
        return None
    rs = rng.uniform(lo, hi)
    return float(min(max(rs / os_meas, dc_band[0]), dc_band[1]))


def _lowrs_box(mask, spec: SynthSpec, rng: np.random.Generator, tries: int = 8):
    """Find a random box whose overlap admits a low-relevance confidence."""
    for _ in range(tries):
        box = _random_box(rng, spec.image_width, spec.image_height)
        x, y, bw, bh = box
        det = Detection("probe", 0.5, (float(x), float(y), float(bw), float(bh)))
        os_meas = overlap_score(mask, det)
        dc = _dc_for_band(os_meas, spec.rs_low, spec.dc_band, rng)
        if dc is not None:
            return box, dc
    return None


def _make_probs(
    rng: np.random.Generator,
    k: int,
    true_index: int,
    confident: bool,
    is_correct: bool,
    profile: ClassifierProfile,
) -> tuple[np.ndarray, int]:
    band = profile.confident_band if confident else profile.unconfident_band
    p = float(rng.uniform(*band))
    if is_correct:
        top = true_index
    else:
        top = int(rng.integers(k - 1))
        if top >= true_index:
            top += 1
    raw = 0.7 + 0.6 * rng.random(k - 1)
    others = raw * ((1.0 - p) / raw.sum())
    if others.max() >= p * 0.999:
        others = np.full(k - 1, (1.0 - p) / (k - 1))
    probs = np.empty(k)
    probs[[i for i in range(k) if i != top]] = others
    probs[top] = p
    return probs, top


def _json_dump(doc: dict, path: Path) -> None:
    try:
        path.write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def generate(spec: SynthSpec, n_images: int, out_dir: Path | str) -> Path:
    """Emit a complete ingestible corpus; returns the manifest path.

    Byte-identical across runs with the same spec and n_images. True
    classes are assigned round-robin; the confident/correct schedule is
    drawn once up front so bucket proportions are exact.
    """
    if n_images < 1:
        raise ValueError("n_images must be positive")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = len(spec.classes)
    names = spec.class_names()
    width, height = spec.image_width, spec.image_height

    master = np.random.default_rng((spec.seed, 92821))
    confident = np.zeros(n_images, dtype=bool)
    conf_idx = master.permutation(n_images)[: round(n_images * spec.classifier.confident_fraction)]
    confident[conf_idx] = True
    is_correct = np.zeros(n_images, dtype=bool)
    for bucket, acc in (
        (np.flatnonzero(confident), spec.classifier.confident_accuracy),
        (np.flatnonzero(~confident), spec.classifier.unconfident_accuracy),
    ):
        chosen = master.permutation(bucket)[: round(len(bucket) * acc)]
        is_correct[chosen] = True

    # Confuser pools: full-coverage labels of other classes, ghosts excluded.
    ghost_set = set(spec.ghost_labels)
    full_labels = {
        ci: [o.label for o in cls.objects if o.coverage == "full" and o.label not in ghost_set]
        for ci, cls in enumerate(spec.classes)
    }
    confuser_pool = {
        ci: [lab for cj, labs in full_labels.items() if cj != ci for lab in labs]
        for ci in range(k)
    }

    manifest_path = out / "manifest.jsonl"
    try:
        manifest = open(manifest_path, "w", encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {manifest_path}: {e}") from e
    with manifest:
        for i in range(n_images):
            rng = np.random.default_rng((spec.seed, 15013, i))
            ci = i % k
            cls = spec.classes[ci]
            image_id = f"img_{i:05d}"

            weak_only = rng.random() < spec.weak_only_fraction
            placed: list[tuple[str, str, tuple[int, int, int, int]]] = []
            for obj in cls.objects:
                if weak_only:
                    if obj.coverage != "partial":
                        continue
                    count = int(rng.integers(obj.min_instances, obj.max_instances + 1))
                else:
                    if rng.random() >= obj.presence:
                        continue
                    count = int(rng.integers(obj.min_instances, obj.max_instances + 1))
                for _ in range(count):
                    placed.append((obj.label, obj.coverage, _random_box(rng, width, height)))

            field_arr = _NOISE_AMP * rng.random((height, width))
            for _, coverage, box in placed:
                _add_blob(field_arr, box, coverage, rng)
            field_arr /= field_arr.max()
            hm = Heatmap(width, height, field_arr)
            mask = binarize(hm, spec.binarize)

            dets: list[dict] = []

            def emit(label: str, dc: float, box) -> None:
                x, y, bw, bh = box
                dets.append(
                    {
                        "label": label,
                        "confidence": round(dc, 6),
                        "bbox": [float(x), float(y), float(bw), float(bh)],
                    }
                )

            for label, coverage, box in placed:
                x, y, bw, bh = box
                det = Detection(label, 0.5, (float(x), float(y), float(bw), float(bh)))
                os_meas = overlap_score(mask, det)
                band = spec.rs_strong if coverage == "full" else spec.rs_weak
                dc = _dc_for_band(os_meas, band, spec.dc_band, rng)
                if dc is None:
                    if coverage == "full":
                        # Keep the object present; its relevance simply drifts low.
                        dc = float(rng.uniform(0.4, 0.9))
                    else:
                        continue  # a mislanded partial blob would break the weak band
                emit(label, dc, box)

            if spec.ghost_labels and spec.ghost_rate > 0:
                for _ in range(int(rng.poisson(spec.ghost_rate))):
                    found = _lowrs_box(mask, spec, rng)
                    if found is not None:
                        label = spec.ghost_labels[int(rng.integers(len(spec.ghost_labels)))]
                        emit(label, found[1], found[0])
            if confuser_pool[ci] and spec.confuser_rate > 0:
                for _ in range(int(rng.poisson(spec.confuser_rate))):
                    found = _lowrs_box(mask, spec, rng)
                    if found is not None:
                        label = confuser_pool[ci][int(rng.integers(len(confuser_pool[ci])))]
                        emit(label, found[1], found[0])
            if spec.lowconf_rate > 0:
                all_labels = [o.label for c in spec.classes for o in c.objects]
                for _ in range(int(rng.poisson(spec.lowconf_rate))):
                    label = all_labels[int(rng.integers(len(all_labels)))]
                    dc = float(rng.uniform(*spec.dc_noise_band))
                    emit(label, dc, _random_box(rng, width, height))

            probs, _ = _make_probs(
                rng, k, ci, bool(confident[i]), bool(is_correct[i]), spec.classifier
            )

            det_name = f"{image_id}.detections.json"
            hm_name = f"{image_id}.heatmap.tbxh"
            probs_name = f"{image_id}.probs.json"
            _json_dump({"image_id": image_id, "detections": dets}, out / det_name)
            write_heatmap(hm, out / hm_name)
            _json_dump(
                {"image_id": image_id, "class_names": names, "probs": [float(p) for p in probs]},
                out / probs_name,
            )

            annotation = None
            if spec.annotate:
                rep = [o.label for o in cls.objects if o.coverage == "full"][:3]
                annotation = rep + ["empty"] * (3 - len(rep))
            record = {
                "image_id": image_id,
                "width": width,
                "height": height,
                "true_label": cls.name,
                "detections": det_name,
                "heatmap": hm_name,
                "probs": probs_name,
                "annotation": annotation,
            }
            manifest.write(json.dumps(record, sort_keys=True) + "\n")
    return manifest_path
