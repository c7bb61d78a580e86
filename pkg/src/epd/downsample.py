"""Window-based downsampling kernels and interpolation baselines.

The probabilistic kernel maps every f x f window of a hard label to one
output pixel holding the window's class frequencies. A window fully covered
by one class yields probability 1 for it, an absent class yields 0, and a
window cut by an edge yields fractional values, so partial coverage survives
downsampling instead of snapping to a single class. Images use the plain
window mean. Nearest-neighbor and bilinear samplers are provided as the
conventional baselines, both on the half-pixel-center convention.

Dimensions must be exact multiples of the factor; padding is never applied
silently because it would change class mass (the CLI offers an explicit
pad-to-multiple helper).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import HardLabelMap, ImagePlane, SoftLabelMap, ValidationError

__all__ = [
    "DownsampleSpec",
    "epd_label_downsample",
    "epd_soft_downsample",
    "epd_image_downsample",
    "nearest_label_downsample",
    "bilinear_image_downsample",
    "build_pyramid",
    "pad_suggestion",
]


@dataclass(frozen=True)
class DownsampleSpec:
    """Integer window side length; pyramid level d corresponds to factor 2**d."""

    factor: int

    def __post_init__(self) -> None:
        if not isinstance(self.factor, (int, np.integer)) or isinstance(self.factor, bool):
            raise ValidationError(f"factor must be an integer, got {self.factor!r}")
        if self.factor < 1:
            raise ValidationError(f"factor must be >= 1, got {self.factor}")
        object.__setattr__(self, "factor", int(self.factor))


def _as_factor(spec: DownsampleSpec | int) -> int:
    if isinstance(spec, DownsampleSpec):
        return spec.factor
    return DownsampleSpec(spec).factor


def pad_suggestion(dim: int, factor: int) -> int:
    """Smallest multiple of ``factor`` that is >= ``dim``."""
    return -(-dim // factor) * factor


def _check_window(height: int, width: int, factor: int) -> None:
    if factor > min(height, width):
        raise ValidationError(
            f"factor {factor} exceeds the smaller image dimension {min(height, width)}"
        )
    if height % factor:
        raise ValidationError(
            f"height {height} not divisible by factor {factor}; "
            f"pad height to {pad_suggestion(height, factor)}"
        )
    if width % factor:
        raise ValidationError(
            f"width {width} not divisible by factor {factor}; "
            f"pad width to {pad_suggestion(width, factor)}"
        )


def epd_label_downsample(label: HardLabelMap, spec: DownsampleSpec | int) -> SoftLabelMap:
    """Downsample a hard label into per-window class frequencies.

    Output pixel (i, j, c) is the count of class c inside the f x f window
    rooted at (i*f, j*f), divided by f**2. Class mass is conserved exactly:
    f**2 times the output mass of class c equals its input pixel count.
    """
    f = _as_factor(spec)
    _check_window(label.height, label.width, f)
    oh, ow = label.height // f, label.width // f
    view = label.data.reshape(oh, f, ow, f)
    counts = np.empty((oh, ow, label.num_classes), dtype=np.int64)
    for c in range(label.num_classes):
        counts[:, :, c] = (view == c).sum(axis=(1, 3))
    return SoftLabelMap(counts / float(f * f), label.num_classes)


def epd_soft_downsample(soft: SoftLabelMap, spec: DownsampleSpec | int) -> SoftLabelMap:
    """Per-channel window mean of an already-soft label.

    Coincides with :func:`epd_label_downsample` on one-hot input, since a
    count divided by f**2 is the mean of the class indicators. Preserves the
    per-pixel simplex because means of simplex vectors stay on the simplex.
    """
    f = _as_factor(spec)
    _check_window(soft.height, soft.width, f)
    if f == 1:
        return soft
    oh, ow = soft.height // f, soft.width // f
    view = soft.data.reshape(oh, f, ow, f, soft.num_classes)
    data = view.sum(axis=(1, 3)) / float(f * f)
    return SoftLabelMap(data, soft.num_classes)


def epd_image_downsample(img: ImagePlane, spec: DownsampleSpec | int) -> ImagePlane:
    """Window mean of an image: output (i, j) is the mean of its f x f window.

    One independent double-precision accumulator per output pixel, so results
    are bit-identical regardless of how callers shard the work.
    """
    f = _as_factor(spec)
    _check_window(img.height, img.width, f)
    if f == 1:
        return img
    oh, ow = img.height // f, img.width // f
    view = img.data.reshape(oh, f, ow, f)
    return ImagePlane(view.sum(axis=(1, 3)) / float(f * f))


def nearest_label_downsample(label: HardLabelMap, spec: DownsampleSpec | int) -> HardLabelMap:
    """Pick one source pixel per window: floor((i + 0.5) * f) on each axis.

    Every output value is an input value; structures thinner than the stride
    can vanish entirely depending on their phase relative to the sample grid.
    """
    f = _as_factor(spec)
    _check_window(label.height, label.width, f)
    if f == 1:
        return label
    oh, ow = label.height // f, label.width // f
    # floor((i + 0.5) * f) computed in exact integer arithmetic
    rows = ((2 * np.arange(oh) + 1) * f) // 2
    cols = ((2 * np.arange(ow) + 1) * f) // 2
    return HardLabelMap(label.data[np.ix_(rows, cols)], label.num_classes)


def _bilinear_axis(n_out: int, f: int, n_in: int):
    coords = (np.arange(n_out) + 0.5) * f - 0.5
    i0 = np.floor(coords).astype(np.int64)
    frac = coords - i0
    i0 = np.clip(i0, 0, n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, frac


def bilinear_image_downsample(img: ImagePlane, spec: DownsampleSpec | int) -> ImagePlane:
    """Sample source coordinate ((i+0.5)*f - 0.5, (j+0.5)*f - 0.5) bilinearly.

    Half-pixel-center convention with indices clamped at the borders; exact
    on affine intensity ramps.
    """
    f = _as_factor(spec)
    _check_window(img.height, img.width, f)
    if f == 1:
        return img
    oh, ow = img.height // f, img.width // f
    r0, r1, fr = _bilinear_axis(oh, f, img.height)
    c0, c1, fc = _bilinear_axis(ow, f, img.width)
    d = img.data
    top = (1.0 - fc)[None, :] * d[np.ix_(r0, c0)] + fc[None, :] * d[np.ix_(r0, c1)]
    bot = (1.0 - fc)[None, :] * d[np.ix_(r1, c0)] + fc[None, :] * d[np.ix_(r1, c1)]
    return ImagePlane((1.0 - fr)[:, None] * top + fr[:, None] * bot)


def build_pyramid(label: HardLabelMap, max_level: int) -> list[SoftLabelMap]:
    """Soft labels at factors 2, 4, ..., 2**max_level, ordered base to apex.

    ``max_level`` 0 returns an empty list (the base is the input itself).
    """
    if not isinstance(max_level, (int, np.integer)) or max_level < 0:
        raise ValidationError(f"max_level must be a non-negative integer, got {max_level!r}")
    for level in range(1, max_level + 1):
        f = 2**level
        if f > min(label.height, label.width) or label.height % f or label.width % f:
            raise ValidationError(
                f"pyramid level {level} needs dimensions divisible by {f}; "
                f"label is {label.height}x{label.width}"
            )
    return [epd_label_downsample(label, 2**level) for level in range(1, max_level + 1)]
