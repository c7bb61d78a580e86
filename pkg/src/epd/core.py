"""Label and image containers plus hard/soft conversions.

All containers are immutable: array data is copied on construction and the
copy is marked read-only, so instances can be shared freely across threads
and every operation on them is a pure function.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ValidationError",
    "SIMPLEX_TOL",
    "HardLabelMap",
    "SoftLabelMap",
    "ImagePlane",
    "MultiChannelImage",
    "SimplexCheck",
    "one_hot",
    "argmax_to_hard",
    "validate",
]

# Per-pixel probabilities must sum to 1 within this absolute tolerance.
# Window divisors are usually powers of two, so outputs are typically exact;
# the slack only absorbs rounding from non-power-of-two factors.
SIMPLEX_TOL = 1e-12


class ValidationError(ValueError):
    """An input violated a documented precondition."""


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, order="C", copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HardLabelMap:
    """Dense 2D grid of class indices in [0, num_classes); class 0 is background.

    Sparse or remapped palettes must be normalized to dense 0..C-1 indices
    before construction.
    """

    data: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValidationError(f"hard label must be 2D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"hard label needs at least one pixel, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValidationError(f"hard label entries must be integers, got dtype {arr.dtype}")
        if self.num_classes < 2:
            raise ValidationError(f"num_classes must be >= 2, got {self.num_classes}")
        lo, hi = int(arr.min()), int(arr.max())
        if lo < 0 or hi >= self.num_classes:
            raise ValidationError(
                f"class indices must lie in [0, {self.num_classes}), found range [{lo}, {hi}]"
            )
        object.__setattr__(self, "data", _frozen_array(arr, np.int32))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def class_counts(self) -> np.ndarray:
        """Pixel count per class index, length num_classes."""
        return np.bincount(self.data.ravel(), minlength=self.num_classes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HardLabelMap):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class SoftLabelMap:
    """Per-pixel class probability vectors, stored as an (H, W, C) float64 grid.

    Construction only checks structure and finiteness; whether the values
    actually form per-pixel probability simplexes is checked separately by
    :func:`validate`, so malformed maps can be represented and diagnosed.
    """

    data: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ValidationError(f"soft label must be 3D (H, W, C), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"soft label needs at least one pixel, got shape {arr.shape}")
        if self.num_classes < 2:
            raise ValidationError(f"num_classes must be >= 2, got {self.num_classes}")
        if arr.shape[2] != self.num_classes:
            raise ValidationError(
                f"channel count {arr.shape[2]} does not match num_classes {self.num_classes}"
            )
        if not np.isfinite(arr).all():
            raise ValidationError("soft label contains non-finite values")
        object.__setattr__(self, "data", _frozen_array(arr, np.float64))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def class_mass(self) -> np.ndarray:
        """Total probability mass per class, length num_classes."""
        return self.data.sum(axis=(0, 1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SoftLabelMap):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class ImagePlane:
    """Single 2D grid of scalar intensities (raw HU or normalized [0, 1])."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError(f"image plane must be 2D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"image plane needs at least one pixel, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("image plane contains non-finite values")
        object.__setattr__(self, "data", _frozen_array(arr, np.float64))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImagePlane):
            return NotImplemented
        return np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class MultiChannelImage:
    """Ordered stack of same-sized image planes."""

    channels: tuple[ImagePlane, ...]

    def __post_init__(self) -> None:
        chans = tuple(self.channels)
        if not chans:
            raise ValidationError("multi-channel image needs at least one channel")
        for ch in chans:
            if not isinstance(ch, ImagePlane):
                raise ValidationError(f"channels must be ImagePlane, got {type(ch).__name__}")
        h, w = chans[0].height, chans[0].width
        for k, ch in enumerate(chans):
            if ch.height != h or ch.width != w:
                raise ValidationError(
                    f"channel {k} is {ch.height}x{ch.width}, expected {h}x{w}"
                )
        object.__setattr__(self, "channels", chans)

    @property
    def height(self) -> int:
        return self.channels[0].height

    @property
    def width(self) -> int:
        return self.channels[0].width

    @property
    def num_channels(self) -> int:
        return len(self.channels)

    def stacked(self) -> np.ndarray:
        """Channel-first (C, H, W) view of the data."""
        return np.stack([ch.data for ch in self.channels], axis=0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiChannelImage):
            return NotImplemented
        return len(self.channels) == len(other.channels) and all(
            a == b for a, b in zip(self.channels, other.channels)
        )


def one_hot(label: HardLabelMap) -> SoftLabelMap:
    """Embed a hard label as a soft one: probability 1 on the stored class."""
    eye = np.arange(label.num_classes, dtype=np.int32)
    data = (label.data[:, :, None] == eye[None, None, :]).astype(np.float64)
    return SoftLabelMap(data, label.num_classes)


def argmax_to_hard(soft: SoftLabelMap) -> HardLabelMap:
    """Collapse each pixel to the smallest class index attaining its maximum.

    Deterministic and invariant under uniform positive rescaling of a pixel's
    probability vector.
    """
    hard = np.argmax(soft.data, axis=2).astype(np.int32)
    return HardLabelMap(hard, soft.num_classes)


@dataclass(frozen=True)
class SimplexCheck:
    """Result of a per-pixel probability-simplex check.

    ``deviation`` is the largest violation observed when ``ok`` (still within
    tolerance), or the violation at the first offending pixel otherwise.
    """

    ok: bool
    pixel: tuple[int, int] | None
    deviation: float

    def __str__(self) -> str:
        if self.ok:
            return f"simplex ok (max deviation {self.deviation:.3e})"
        i, j = self.pixel
        return f"simplex violated at pixel ({i}, {j}): deviation {self.deviation:.3e}"


def validate(soft: SoftLabelMap, tol: float = SIMPLEX_TOL) -> SimplexCheck:
    """Check that every pixel's probabilities lie in [0, 1] and sum to 1.

    Reports the first violating pixel in row-major order along with the
    magnitude of its violation (range excess or |sum - 1|, whichever is
    larger).
    """
    d = soft.data
    below = np.maximum(-d, 0.0).max(axis=2)
    above = np.maximum(d - 1.0, 0.0).max(axis=2)
    sum_dev = np.abs(d.sum(axis=2) - 1.0)
    dev = np.maximum(np.maximum(below, above), sum_dev)
    bad = dev > tol
    if not bad.any():
        return SimplexCheck(True, None, float(dev.max()))
    flat = int(np.argmax(bad))
    i, j = divmod(flat, soft.width)
    return SimplexCheck(False, (i, j), float(dev[i, j]))
