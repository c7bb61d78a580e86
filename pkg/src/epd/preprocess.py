"""CT Hounsfield-unit windowing into normalized intensity channels.

A window [lo, hi] maps HU values linearly onto [0, 1] with clamping outside
the range, emphasizing one tissue type per window. Three windows stacked
give the standard multi-channel input; windowing happens BEFORE any
downsampling (mean-of-clamped differs from clamp-of-mean, so the order is
part of the contract).

The default presets below are common abdominal choices kept as configuration,
not ground truth; override them per study.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import math

import numpy as np

from .core import ImagePlane, MultiChannelImage, ValidationError

__all__ = ["HUWindow", "DEFAULT_WINDOWS", "hu_window", "stack_windows"]


@dataclass(frozen=True)
class HUWindow:
    """Half-open intensity range in HU; lo must be strictly below hi."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValidationError(f"window bounds must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ValidationError(f"window needs lo < hi, got [{self.lo}, {self.hi}]")


# adipose, muscle / soft tissue, wide
DEFAULT_WINDOWS = (HUWindow(-190.0, -30.0), HUWindow(-29.0, 150.0), HUWindow(-1000.0, 1000.0))


def hu_window(img: ImagePlane, win: HUWindow) -> ImagePlane:
    """Map intensities through clamp((v - lo) / (hi - lo), 0, 1).

    Monotone non-decreasing in the input; lo maps to 0, hi to 1.
    """
    scaled = (img.data - win.lo) / (win.hi - win.lo)
    return ImagePlane(np.clip(scaled, 0.0, 1.0))


def stack_windows(img: ImagePlane, windows: Sequence[HUWindow]) -> MultiChannelImage:
    """Apply exactly three windows to one HU plane, one output channel each."""
    windows = tuple(windows)
    if len(windows) != 3:
        raise ValidationError(f"expected exactly 3 windows, got {len(windows)}")
    return MultiChannelImage(tuple(hu_window(img, w) for w in windows))
