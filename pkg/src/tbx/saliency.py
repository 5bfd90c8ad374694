"""Saliency heatmaps and their binarization into relevance masks.

A heatmap is a dense per-pixel relevance grid in [0, 1] at image
resolution. Overlap scoring needs a discrete region, so the grid is
binarized either at a fixed absolute threshold or at an empirical
quantile of the cell values (the default keeps the top 30% most salient
pixels, which is robust to scale differences between saliency methods).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class Heatmap:
    """Dense saliency grid, float32, row-major, values in [0, 1]."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"heatmap dimensions must be positive, got {self.width}x{self.height}")
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.size != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} cells, got {arr.size}"
            )
        arr = np.ascontiguousarray(arr.reshape(self.height, self.width))
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            bad = arr[~((arr >= 0.0) & (arr <= 1.0))][0]
            raise ValueError(f"heatmap cell value {bad!r} outside [0, 1]")
        self.values = arr

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Heatmap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.values, other.values)
        )


@dataclass(eq=False)
class BinaryMask:
    """Boolean relevance mask plus the effective threshold that produced it."""

    width: int
    height: int
    bits: np.ndarray
    threshold_used: float

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"mask dimensions must be positive, got {self.width}x{self.height}")
        arr = np.asarray(self.bits, dtype=bool)
        if arr.size != self.width * self.height:
            raise ValueError(f"expected {self.width * self.height} bits, got {arr.size}")
        self.bits = np.ascontiguousarray(arr.reshape(self.height, self.width))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.bits, other.bits)
        )


@dataclass(frozen=True)
class AbsoluteThreshold:
    """Binarize at a fixed cell-value threshold in [0, 1]."""

    value: float


@dataclass(frozen=True)
class QuantileThreshold:
    """Binarize at the empirical q-quantile of the cell values, q in (0, 1)."""

    q: float


BinarizeMode = AbsoluteThreshold | QuantileThreshold

DEFAULT_BINARIZE: BinarizeMode = QuantileThreshold(0.7)


def parse_binarize_mode(text: str) -> BinarizeMode:
    """Parse 'absolute:T' or 'quantile:Q' into a mode value."""
    kind, _, num = text.partition(":")
    try:
        x = float(num)
    except ValueError:
        raise ValueError(f"bad binarize mode {text!r}") from None
    if kind == "absolute":
        return AbsoluteThreshold(x)
    if kind == "quantile":
        return QuantileThreshold(x)
    raise ValueError(f"bad binarize mode {text!r}")


def format_binarize_mode(mode: BinarizeMode) -> str:
    if isinstance(mode, AbsoluteThreshold):
        return f"absolute:{mode.value!r}"
    return f"quantile:{mode.q!r}"


def binarize(hm: Heatmap, mode: BinarizeMode = DEFAULT_BINARIZE) -> BinaryMask:
    """Turn a heatmap into a boolean mask.

    Absolute mode sets a pixel when its value is >= the given threshold.
    Quantile mode takes the k-th largest cell value, k = ceil((1-q)*n),
    as the effective threshold and then applies the same >= rule, so at
    least k pixels are always set and ties at the threshold are
    included. The effective threshold is recorded on the returned mask.
    """
    if isinstance(mode, AbsoluteThreshold):
        if not 0.0 <= mode.value <= 1.0:
            raise ValueError(f"absolute threshold {mode.value} outside [0, 1]")
        t = float(mode.value)
    elif isinstance(mode, QuantileThreshold):
        if not 0.0 < mode.q < 1.0:
            raise ValueError(f"quantile {mode.q} outside (0, 1)")
        n = hm.values.size
        k = math.ceil((1.0 - mode.q) * n)
        t = float(np.partition(hm.values.ravel(), n - k)[n - k])
    else:
        raise TypeError(f"unsupported binarize mode: {mode!r}")
    return BinaryMask(hm.width, hm.height, hm.values >= t, t)


def mask_area(mask: BinaryMask) -> int:
    """Number of set pixels."""
    return int(mask.bits.sum())
