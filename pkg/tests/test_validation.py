"""Overlap scoring against the naive pixel-loop oracle, and the two gates."""

import numpy as np
import pytest

from tbx.errors import BboxOutOfImage, DegenerateBbox
from tbx.saliency import BinaryMask
from tbx.validation import Detection, overlap_score, validate_objects


def naive_overlap(mask: BinaryMask, bbox) -> float:
    """Independent oracle: test every pixel center against the box."""
    x, y, w, h = bbox
    inside = 0
    covered = 0
    for r in range(mask.height):
        for c in range(mask.width):
            if x <= c + 0.5 < x + w and y <= r + 0.5 < y + h:
                inside += 1
                if mask.bits[r, c]:
                    covered += 1
    if inside == 0:
        raise DegenerateBbox(str(bbox))
    return covered / inside


def _mask(bits):
    arr = np.asarray(bits, dtype=bool)
    return BinaryMask(arr.shape[1], arr.shape[0], arr, 0.5)


def test_full_coverage_is_one():
    mask = _mask(np.ones((6, 6)))
    det = Detection("bed", 0.9, (1.0, 1.0, 4.0, 4.0))
    assert overlap_score(mask, det) == 1.0


def test_disjoint_is_zero():
    bits = np.zeros((6, 6), bool)
    bits[0, 0] = True
    det = Detection("bed", 0.9, (3.0, 3.0, 2.0, 2.0))
    assert overlap_score(_mask(bits), det) == 0.0


def test_half_covered_box():
    bits = np.zeros((8, 8), bool)
    bits[:, :4] = True  # left half set
    det = Detection("bed", 0.9, (0.0, 0.0, 8.0, 8.0))
    assert overlap_score(_mask(bits), det) == 0.5  # 32 / 64


def test_oracle_equivalence_random():
    rng = np.random.default_rng(12345)
    for _ in range(300):
        bits = rng.random((32, 32)) < rng.uniform(0.1, 0.9)
        mask = _mask(bits)
        w = rng.uniform(0.5, 30.0)
        h = rng.uniform(0.5, 30.0)
        x = rng.uniform(0.0, 32.0 - w)
        y = rng.uniform(0.0, 32.0 - h)
        det = Detection("x", 0.5, (x, y, w, h))
        try:
            expected = naive_overlap(mask, det.bbox)
        except DegenerateBbox:
            with pytest.raises(DegenerateBbox):
                overlap_score(mask, det)
            continue
        assert abs(overlap_score(mask, det) - expected) <= 1e-12


def test_fractional_box_pixel_center_rule():
    bits = np.ones((4, 4), bool)
    mask = _mask(bits)
    # box [0.6, 0.6) x [1.4, 1.4) spans centers at 1.5 only? it contains no center
    with pytest.raises(DegenerateBbox):
        overlap_score(mask, Detection("x", 0.5, (0.6, 0.6, 0.8, 0.8)))
    # shifting to include the center at (1.5, 1.5) makes it a 1-pixel box
    assert overlap_score(mask, Detection("x", 0.5, (1.2, 1.2, 0.8, 0.8))) == 1.0


def test_overlap_requires_box_inside_mask():
    mask = _mask(np.ones((4, 4)))
    with pytest.raises(BboxOutOfImage):
        overlap_score(mask, Detection("x", 0.5, (2.0, 2.0, 3.0, 3.0)))


def test_mask_monotonicity_never_decreases_score():
    rng = np.random.default_rng(77)
    for _ in range(50):
        bits = rng.random((16, 16)) < 0.3
        more = bits | (rng.random((16, 16)) < 0.3)
        det = Detection("x", 0.5, (2.0, 3.0, 9.0, 7.0))
        assert overlap_score(_mask(more), det) >= overlap_score(_mask(bits), det)


# --- validate_objects ---

def test_paper_best_thresholds_admit_strong_detection():
    bits = np.zeros((8, 8), bool)
    bits[:, :4] = True
    mask = _mask(bits)
    det = Detection("bed", 0.9, (0.0, 0.0, 8.0, 8.0))  # overlap 0.5
    out = validate_objects(mask, [det], t_c=0.2, t_r=0.08)
    assert len(out) == 1
    assert out[0].relevance_score == pytest.approx(0.45, abs=1e-12)


def test_confidence_gate_excludes_low_confidence():
    mask = _mask(np.ones((8, 8)))
    det = Detection("bed", 0.15, (0.0, 0.0, 8.0, 8.0))
    assert validate_objects(mask, [det], t_c=0.2, t_r=0.0) == []


def test_relevance_filter_and_ordering():
    mask_bits = np.zeros((10, 10), bool)
    mask_bits[:, 0] = True  # only the first column is salient
    mask = _mask(mask_bits)
    dets = [
        Detection("b", 0.5, (0.0, 0.0, 10.0, 10.0)),  # os 0.1, rs 0.05 -> fails t_r
        Detection("c", 0.4, (0.0, 0.0, 2.0, 10.0)),   # os 0.5, rs 0.20
        Detection("a", 0.8, (0.0, 0.0, 2.0, 10.0)),   # os 0.5, rs 0.40
    ]
    out = validate_objects(mask, dets, t_c=0.2, t_r=0.08)
    assert [v.label for v in out] == ["a", "c"]
    assert [v.relevance_score for v in out] == pytest.approx([0.4, 0.2], abs=1e-12)


def test_threshold_gates_are_strict():
    mask = _mask(np.ones((4, 4)))
    det = Detection("x", 0.5, (0.0, 0.0, 4.0, 4.0))  # os 1.0, rs 0.5
    assert validate_objects(mask, [det], t_c=0.5, t_r=0.1) == []  # confidence == t_c fails
    assert validate_objects(mask, [det], t_c=0.4, t_r=0.5) == []  # relevance == t_r fails
    assert len(validate_objects(mask, [det], t_c=0.4, t_r=0.4999)) == 1


def test_tie_break_label_then_input_order():
    mask = _mask(np.ones((4, 4)))
    dets = [
        Detection("zeta", 0.6, (0.0, 0.0, 4.0, 4.0)),
        Detection("alpha", 0.6, (0.0, 0.0, 4.0, 4.0)),
        Detection("alpha", 0.6, (1.0, 1.0, 2.0, 2.0)),
    ]
    out = validate_objects(mask, dets, t_c=0.1, t_r=0.1)
    assert [v.label for v in out] == ["alpha", "alpha", "zeta"]
    assert out[0].detection.bbox == (0.0, 0.0, 4.0, 4.0)  # input order among equal labels


def test_raising_thresholds_shrinks_output():
    rng = np.random.default_rng(4)
    bits = rng.random((16, 16)) < 0.5
    mask = _mask(bits)
    dets = [
        Detection(f"o{i}", float(rng.uniform(0.05, 1.0)),
                  (float(rng.uniform(0, 8)), float(rng.uniform(0, 8)), 4.0, 4.0))
        for i in range(12)
    ]
    base = {id(v.detection) for v in validate_objects(mask, dets, 0.1, 0.02)}
    for tc, tr in ((0.3, 0.02), (0.1, 0.2), (0.5, 0.3)):
        shrunk = {id(v.detection) for v in validate_objects(mask, dets, tc, tr)}
        assert shrunk <= base


def test_relevance_bounded_by_confidence_and_overlap():
    rng = np.random.default_rng(8)
    bits = rng.random((16, 16)) < 0.5
    mask = _mask(bits)
    for _ in range(50):
        det = Detection(
            "x",
            float(rng.uniform(0.2, 1.0)),
            (float(rng.uniform(0, 8)), float(rng.uniform(0, 8)),
             float(rng.uniform(1, 8)), float(rng.uniform(1, 8))),
        )
        for v in validate_objects(mask, [det], 0.1, 0.0):
            assert v.relevance_score <= v.detection.confidence + 1e-12
            assert v.relevance_score <= v.overlap_score + 1e-12
