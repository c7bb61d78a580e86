import numpy as np
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from epd import HardLabelMap, SoftLabelMap


def random_hard(rng, height, width, num_classes) -> HardLabelMap:
    data = rng.integers(0, num_classes, size=(height, width), dtype=np.int32)
    return HardLabelMap(data, num_classes)


def random_simplex(rng, height, width, num_classes) -> SoftLabelMap:
    raw = rng.random((height, width, num_classes)) + 1e-9
    return SoftLabelMap(raw / raw.sum(axis=2, keepdims=True), num_classes)


@st.composite
def hard_label_maps(draw, min_side=1, max_side=12, max_classes=5, multiple_of=1):
    num_classes = draw(st.integers(2, max_classes))
    height = draw(st.integers(min_side, max_side)) * multiple_of
    width = draw(st.integers(min_side, max_side)) * multiple_of
    data = draw(
        hnp.arrays(np.int32, (height, width), elements=st.integers(0, num_classes - 1))
    )
    return HardLabelMap(data, num_classes)


@st.composite
def image_arrays(draw, min_side=1, max_side=12, multiple_of=1):
    height = draw(st.integers(min_side, max_side)) * multiple_of
    width = draw(st.integers(min_side, max_side)) * multiple_of
    return draw(
        hnp.arrays(
            np.float64,
            (height, width),
            elements=st.floats(-1000.0, 1000.0, allow_nan=False, allow_infinity=False),
        )
    )
