import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epd import (
    DEFAULT_WINDOWS,
    HUWindow,
    ImagePlane,
    MultiChannelImage,
    ValidationError,
    epd_image_downsample,
    hu_window,
    stack_windows,
)


def test_window_endpoints_and_midpoint():
    win = HUWindow(-100.0, 300.0)
    img = ImagePlane(np.array([[-100.0, 300.0, 100.0]]))
    out = hu_window(img, win)
    assert out.data.tolist() == [[0.0, 1.0, 0.5]]


def test_window_clamps_out_of_range():
    win = HUWindow(-100.0, 300.0)
    img = ImagePlane(np.array([[-600.0, 5000.0]]))
    assert hu_window(img, win).data.tolist() == [[0.0, 1.0]]


@given(st.floats(-2000, 2000), st.floats(-2000, 2000))
@settings(max_examples=80)
def test_window_is_monotone(a, b):
    win = HUWindow(-29.0, 150.0)
    lo, hi = min(a, b), max(a, b)
    out = hu_window(ImagePlane(np.array([[lo, hi]])), win)
    assert out.data[0, 0] <= out.data[0, 1]
    assert 0.0 <= out.data.min() and out.data.max() <= 1.0


def test_window_rejects_bad_bounds():
    with pytest.raises(ValidationError):
        HUWindow(100.0, 100.0)
    with pytest.raises(ValidationError):
        HUWindow(float("nan"), 1.0)


def test_stack_requires_exactly_three_windows():
    img = ImagePlane(np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        stack_windows(img, DEFAULT_WINDOWS[:2])


def test_stack_identical_windows_gives_identical_channels():
    img = ImagePlane(np.random.default_rng(0).uniform(-500, 500, (4, 4)))
    win = HUWindow(-190.0, -30.0)
    stacked = stack_windows(img, (win, win, win))
    assert stacked.num_channels == 3
    assert stacked.channels[0] == stacked.channels[1] == stacked.channels[2]


def test_stack_constant_image_maps_each_window():
    img = ImagePlane(np.full((2, 2), -30.0))
    stacked = stack_windows(img, DEFAULT_WINDOWS)
    assert stacked.channels[0].data[0, 0] == 1.0  # top of adipose window
    assert stacked.channels[1].data[0, 0] == 0.0  # clamped below muscle window
    assert stacked.channels[2].data[0, 0] == pytest.approx((1000 - 30) / 2000)


def test_downsample_then_stack_commutes_with_stack_then_downsample():
    rng = np.random.default_rng(42)
    img = ImagePlane(rng.uniform(-1000, 1000, (16, 16)))
    stacked_then_down = MultiChannelImage(
        tuple(epd_image_downsample(ch, 4) for ch in stack_windows(img, DEFAULT_WINDOWS).channels)
    )
    down_each = tuple(
        epd_image_downsample(hu_window(img, w), 4) for w in DEFAULT_WINDOWS
    )
    assert stacked_then_down == MultiChannelImage(down_each)


def test_window_does_not_commute_with_downsampling():
    # mean-of-clamped differs from clamp-of-mean on values straddling a bound
    img = ImagePlane(np.array([[-2000.0, 0.0], [0.0, 0.0]]))
    win = HUWindow(-100.0, 100.0)
    window_first = epd_image_downsample(hu_window(img, win), 2).data[0, 0]
    downsample_first = hu_window(epd_image_downsample(img, 2), win).data[0, 0]
    assert window_first != downsample_first
