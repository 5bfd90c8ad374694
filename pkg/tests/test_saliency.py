"""Binarization rules and mask arithmetic."""

import numpy as np
import pytest

from tbx.saliency import (
    AbsoluteThreshold,
    BinaryMask,
    Heatmap,
    QuantileThreshold,
    binarize,
    format_binarize_mode,
    mask_area,
    parse_binarize_mode,
)


def test_absolute_all_zero_and_all_one():
    zeros = Heatmap(3, 3, np.zeros(9))
    ones = Heatmap(3, 3, np.ones(9))
    assert not binarize(zeros, AbsoluteThreshold(0.5)).bits.any()
    assert binarize(ones, AbsoluteThreshold(0.5)).bits.all()


def test_absolute_zero_threshold_sets_everything():
    rng = np.random.default_rng(3)
    hm = Heatmap(5, 4, rng.random(20))
    assert binarize(hm, AbsoluteThreshold(0.0)).bits.all()
    above_max = min(1.0, float(hm.values.max()) + 1e-3)
    assert not binarize(hm, AbsoluteThreshold(above_max)).bits.any()


def test_absolute_monotone_in_threshold():
    rng = np.random.default_rng(11)
    for _ in range(30):
        hm = Heatmap(8, 8, rng.random(64))
        t1, t2 = sorted(rng.random(2))
        m1 = binarize(hm, AbsoluteThreshold(float(t1))).bits
        m2 = binarize(hm, AbsoluteThreshold(float(t2))).bits
        assert np.all(m1 | m2 == m1)  # lower threshold is a superset


def test_quantile_top_cells_match_sort_oracle():
    hm = Heatmap(4, 4, [i / 16 for i in range(16)])
    mask = binarize(hm, QuantileThreshold(0.75))
    set_cells = sorted(int(i) for i in np.flatnonzero(mask.bits.ravel()))
    top4 = sorted(int(i) for i in np.argsort(hm.values.ravel())[::-1][:4])
    assert set_cells == top4 == [12, 13, 14, 15]
    assert mask.threshold_used == 12 / 16


def test_quantile_minimum_pixel_count():
    rng = np.random.default_rng(5)
    for _ in range(50):
        w, h = int(rng.integers(2, 10)), int(rng.integers(2, 10))
        values = rng.permutation(w * h) / (w * h)  # all distinct
        q = float(rng.uniform(0.05, 0.95))
        mask = binarize(Heatmap(w, h, values), QuantileThreshold(q))
        assert mask.bits.sum() >= int(np.ceil((1 - q) * w * h))


def test_quantile_ties_set_more():
    hm = Heatmap(4, 1, [0.5, 0.5, 0.5, 0.9])
    mask = binarize(hm, QuantileThreshold(0.7))
    # k = ceil(0.3*4) = 2, but ties at 0.5 pull in every tied cell
    assert mask.bits.sum() == 4


def test_binarize_precondition_errors():
    hm = Heatmap(2, 2, [0.1, 0.2, 0.3, 0.4])
    with pytest.raises(ValueError):
        binarize(hm, AbsoluteThreshold(1.5))
    with pytest.raises(ValueError):
        binarize(hm, QuantileThreshold(0.0))
    with pytest.raises(ValueError):
        binarize(hm, QuantileThreshold(1.0))


def test_mask_area_against_loop():
    assert mask_area(BinaryMask(3, 3, np.zeros(9, bool), 0.5)) == 0
    assert mask_area(BinaryMask(8, 8, np.ones(64, bool), 0.5)) == 64
    rng = np.random.default_rng(9)
    for _ in range(20):
        bits = rng.random((6, 7)) < 0.4
        naive = sum(1 for r in range(6) for c in range(7) if bits[r, c])
        assert mask_area(BinaryMask(7, 6, bits, 0.1)) == naive


def test_heatmap_validation():
    with pytest.raises(ValueError):
        Heatmap(0, 2, [])
    with pytest.raises(ValueError):
        Heatmap(2, 2, [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        Heatmap(2, 1, [0.5, 1.5])


def test_mode_string_round_trip():
    for mode in (AbsoluteThreshold(0.5), QuantileThreshold(0.7)):
        assert parse_binarize_mode(format_binarize_mode(mode)) == mode
    with pytest.raises(ValueError):
        parse_binarize_mode("median:0.2")
