"""Edge-preserving probabilistic downsampling of segmentation labels and images.

Hard labels are downsampled into soft labels that keep per-window class
frequencies (and hence exact class mass and edge information); images are
downsampled by window averaging. Baseline interpolators, the hard/soft
metric suites, the training-loss formulas with verified gradients, HU
windowing, and a synthetic benchmark round out the toolkit.
"""
from .core import (
    SIMPLEX_TOL,
    HardLabelMap,
    ImagePlane,
    MultiChannelImage,
    SimplexCheck,
    SoftLabelMap,
    ValidationError,
    argmax_to_hard,
    one_hot,
    validate,
)
from .downsample import (
    DownsampleSpec,
    bilinear_image_downsample,
    build_pyramid,
    epd_image_downsample,
    epd_label_downsample,
    epd_soft_downsample,
    nearest_label_downsample,
)
from .losses import (
    GradientCheckResult,
    LossEval,
    LossWeights,
    dice_loss,
    gradient_check,
    l1_loss,
    total_loss,
)
from .metrics import (
    ConfusionCounts,
    MetricsReport,
    aggregate,
    apply_threshold,
    confusion,
    hard_metrics,
    optimal_threshold_search,
    report_to_csv,
    report_to_json,
    soft_metrics,
)
from .preprocess import DEFAULT_WINDOWS, HUWindow, hu_window, stack_windows
from .synth import ShapeSpec, area_error_benchmark, edge_fraction, generate, oracle_epd

__all__ = [
    "SIMPLEX_TOL",
    "HardLabelMap",
    "SoftLabelMap",
    "ImagePlane",
    "MultiChannelImage",
    "SimplexCheck",
    "ValidationError",
    "one_hot",
    "argmax_to_hard",
    "validate",
    "DownsampleSpec",
    "epd_label_downsample",
    "epd_soft_downsample",
    "epd_image_downsample",
    "nearest_label_downsample",
    "bilinear_image_downsample",
    "build_pyramid",
    "ConfusionCounts",
    "MetricsReport",
    "confusion",
    "hard_metrics",
    "soft_metrics",
    "apply_threshold",
    "optimal_threshold_search",
    "aggregate",
    "report_to_csv",
    "report_to_json",
    "LossWeights",
    "LossEval",
    "GradientCheckResult",
    "l1_loss",
    "dice_loss",
    "total_loss",
    "gradient_check",
    "HUWindow",
    "DEFAULT_WINDOWS",
    "hu_window",
    "stack_windows",
    "ShapeSpec",
    "generate",
    "oracle_epd",
    "edge_fraction",
    "area_error_benchmark",
]
