"""Command-line front end: file I/O plus subcommands wiring all modules.

Exit codes: 0 success, 2 input validation failure, 3 internal error. All
subcommands are deterministic: identical inputs and flags reproduce output
files bit for bit. The EPD_THREADS environment variable caps benchmark
sweep parallelism (0 or unset = auto); library kernels are serial.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import planefile
from .core import (
    HardLabelMap,
    ImagePlane,
    MultiChannelImage,
    SoftLabelMap,
    ValidationError,
    argmax_to_hard,
    one_hot,
)
from .downsample import (
    bilinear_image_downsample,
    epd_image_downsample,
    epd_label_downsample,
    epd_soft_downsample,
    nearest_label_downsample,
    pad_suggestion,
)
from .losses import LossWeights, dice_loss, l1_loss, total_loss
from .metrics import optimal_threshold_search, report_to_csv, report_to_json
from .preprocess import DEFAULT_WINDOWS, HUWindow, hu_window, stack_windows
from .synth import ShapeSpec, area_error_benchmark

__all__ = ["main", "build_parser", "pad_to_multiple", "PipelineConfig"]


def max_workers_from_env() -> int | None:
    """Worker cap from EPD_THREADS; None means auto."""
    raw = os.environ.get("EPD_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"EPD_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValidationError(f"EPD_THREADS must be >= 0, got {value}")
    return value or None


def _load_input(path: str):
    if path.endswith(".pgm"):
        return planefile.load_pgm(path), "hard-label"
    meta_semantic = None
    try:
        with open(planefile.sidecar_path(path), "r", encoding="ascii") as fh:
            meta_semantic = json.load(fh).get("semantic")
    except (OSError, json.JSONDecodeError):
        pass
    return planefile.load(path), meta_semantic


def pad_to_multiple(obj, factor: int):
    """Zero-pad bottom/right so both dimensions divide the factor.

    Labels gain background (class 0) pixels, soft labels a one-hot background
    vector, images the value 0.0. Returns the padded object and the
    (pad_h, pad_w) amounts.
    """
    pad_h = pad_suggestion(obj.height, factor) - obj.height
    pad_w = pad_suggestion(obj.width, factor) - obj.width
    if pad_h == 0 and pad_w == 0:
        return obj, (0, 0)
    if isinstance(obj, HardLabelMap):
        data = np.pad(obj.data, ((0, pad_h), (0, pad_w)), constant_values=0)
        return HardLabelMap(data, obj.num_classes), (pad_h, pad_w)
    if isinstance(obj, SoftLabelMap):
        data = np.pad(obj.data, ((0, pad_h), (0, pad_w), (0, 0)), constant_values=0.0)
        data = data.copy()
        if pad_h:
            data[-pad_h:, :, 0] = 1.0
        if pad_w:
            data[:, -pad_w:, 0] = 1.0
        return SoftLabelMap(data, obj.num_classes), (pad_h, pad_w)
    if isinstance(obj, ImagePlane):
        data = np.pad(obj.data, ((0, pad_h), (0, pad_w)), constant_values=0.0)
        return ImagePlane(data), (pad_h, pad_w)
    if isinstance(obj, MultiChannelImage):
        padded = tuple(pad_to_multiple(ch, factor)[0] for ch in obj.channels)
        return MultiChannelImage(padded), (pad_h, pad_w)
    raise ValidationError(f"cannot pad object of type {type(obj).__name__}")


def cmd_downsample(args) -> int:
    obj, semantic = _load_input(args.input)
    if args.pad:
        obj, (pad_h, pad_w) = pad_to_multiple(obj, args.factor)
        if pad_h or pad_w:
            print(f"padded input by ({pad_h}, {pad_w}) pixels with background", file=sys.stderr)

    if args.kind == "label":
        if args.method == "bilinear":
            raise ValidationError("method bilinear applies to images, not labels")
        if isinstance(obj, HardLabelMap):
            if args.method == "epd":
                result = epd_label_downsample(obj, args.factor)
            else:
                result = nearest_label_downsample(obj, args.factor)
        elif isinstance(obj, SoftLabelMap):
            if args.method == "nearest":
                raise ValidationError("method nearest needs a hard-label input")
            result = epd_soft_downsample(obj, args.factor)
        else:
            raise ValidationError("--kind label needs a hard-label or soft-label input")
        planefile.save(args.output, result)
        return 0

    # kind == image
    if args.method == "nearest":
        raise ValidationError("method nearest applies to labels, not images")
    out_semantic = semantic if semantic in ("image-hu", "image-norm") else "image-norm"
    op = epd_image_downsample if args.method == "epd" else bilinear_image_downsample
    if isinstance(obj, ImagePlane):
        planefile.save(args.output, op(obj, args.factor), semantic=out_semantic)
    elif isinstance(obj, MultiChannelImage):
        channels = tuple(op(ch, args.factor) for ch in obj.channels)
        planefile.save(args.output, MultiChannelImage(channels), semantic=out_semantic)
    else:
        raise ValidationError("--kind image needs an image input")
    return 0


def cmd_metrics(args) -> int:
    pred, _ = _load_input(args.pred)
    if not isinstance(pred, SoftLabelMap):
        raise ValidationError("--pred must be a soft-label file")
    target, _ = _load_input(args.target)
    if isinstance(target, HardLabelMap):
        hard_target, soft_target = target, None
    elif isinstance(target, SoftLabelMap):
        hard_target, soft_target = argmax_to_hard(target), target
    else:
        raise ValidationError("--target must be a hard-label or soft-label file")

    _, report = optimal_threshold_search(pred, hard_target, step=args.step, soft_target=soft_target)
    text = report_to_csv(report) if args.report == "csv" else report_to_json(report)
    _emit(args.output, text)
    return 0


def _emit(output: str, text: str) -> None:
    if output == "-":
        sys.stdout.write(text)
    else:
        directory = os.path.dirname(os.path.abspath(output))
        os.makedirs(directory, exist_ok=True)
        with open(output, "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def _parse_size(raw: str) -> tuple[int, int]:
    parts = raw.lower().split("x")
    try:
        if len(parts) == 1:
            side = int(parts[0])
            return side, side
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ValidationError(f"bad --size {raw!r}; use N or HxW")


def _shape_spec(args) -> ShapeSpec:
    size = _parse_size(args.size)
    center = None
    if getattr(args, "center", None):
        parts = args.center.split(",")
        if len(parts) != 2:
            raise ValidationError(f"bad --center {args.center!r}; use ROW,COL")
        center = (float(parts[0]), float(parts[1]))
    return ShapeSpec(
        kind=args.shape,
        size=size,
        num_classes=args.classes,
        center=center,
        radius=args.radius,
        angle=args.angle,
        offset=args.offset,
        stripe_width=args.width,
        phase=args.phase,
        seed=args.seed,
    )


def cmd_synth(args) -> int:
    from .synth import generate

    planefile.save(args.output, generate(_shape_spec(args)))
    return 0


def _parse_int_list(raw: str, flag: str) -> list[int]:
    try:
        return [int(p) for p in raw.split(",") if p != ""]
    except ValueError:
        raise ValidationError(f"bad {flag} {raw!r}; use comma-separated integers") from None


def cmd_bench(args) -> int:
    spec = _shape_spec(args)
    factors = _parse_int_list(args.factors, "--factors")
    if not factors:
        raise ValidationError("--factors must list at least one factor")
    if args.phases == "all":
        phases = (
            list(range(spec.stripe_width * spec.num_classes))
            if spec.kind == "stripes"
            else [0]
        )
    else:
        phases = _parse_int_list(args.phases, "--phases")

    tasks = [(f, p) for f in factors for p in phases]
    with ThreadPoolExecutor(max_workers=max_workers_from_env()) as pool:
        reports = list(
            pool.map(lambda fp: area_error_benchmark(replace(spec, phase=fp[1]), fp[0]), tasks)
        )

    lines = ["method,shape,factor,phase,mass_error,edge_fraction"]
    for (factor, phase), report in zip(tasks, reports):
        for res in (report.epd, report.nearest):
            lines.append(
                f"{res.method},{spec.kind},{factor},{phase},"
                f"{res.mass_error:.6f},{res.edge_fraction:.6f}"
            )
    _emit(args.output, "\n".join(lines) + "\n")
    return 0


def _as_flat_array(obj) -> np.ndarray:
    if isinstance(obj, HardLabelMap):
        return one_hot(obj).data.reshape(-1)
    if isinstance(obj, SoftLabelMap):
        return obj.data.reshape(-1)
    if isinstance(obj, ImagePlane):
        return obj.data.reshape(-1)
    if isinstance(obj, MultiChannelImage):
        return obj.stacked().reshape(-1)
    raise ValidationError(f"cannot flatten object of type {type(obj).__name__}")


def cmd_loss_eval(args) -> int:
    target = _as_flat_array(_load_input(args.target)[0])
    pred = _as_flat_array(_load_input(args.pred)[0])
    omegas = [float(p) for p in args.omega.split(",") if p != ""]
    if len(omegas) != 2:
        raise ValidationError(f"--omega needs two weights (l1, dice), got {args.omega!r}")

    l1 = l1_loss(target, pred)
    dice = dice_loss(target, pred)
    total = total_loss([l1.value, dice.value], LossWeights(np.array(omegas)))
    grad_l = " ".join(f"{g:.6f}" for g in total.grad_pred)
    print(f"l1    value={l1.value:.6f} grad_norm={np.linalg.norm(l1.grad_pred):.6f}")
    print(f"dice  value={dice.value:.6f} grad_norm={np.linalg.norm(dice.grad_pred):.6f}")
    print(
        f"total value={total.value:.6f} grad_losses=[{grad_l}] "
        f"grad_omega_norm={np.linalg.norm(total.grad_omega):.6f}"
    )
    return 0


@dataclass(frozen=True)
class PipelineConfig:
    """Window/factor settings for the preprocessing pipeline."""

    windows: tuple[HUWindow, HUWindow, HUWindow]
    factor: int


def _parse_windows(raw: str) -> tuple[HUWindow, ...]:
    windows = []
    for part in raw.split(","):
        bounds = part.split(":")
        if len(bounds) != 2:
            raise ValidationError(f"bad window {part!r}; use LO:HI")
        try:
            windows.append(HUWindow(float(bounds[0]), float(bounds[1])))
        except ValueError:
            raise ValidationError(f"bad window bounds {part!r}") from None
    return tuple(windows)


def _pipeline_config(args) -> PipelineConfig:
    windows: tuple[HUWindow, ...] | None = None
    factor: int | None = None
    if args.config:
        try:
            with open(args.config, "r", encoding="ascii") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        if "windows" in raw:
            windows = tuple(HUWindow(float(lo), float(hi)) for lo, hi in raw["windows"])
        if "factor" in raw:
            factor = int(raw["factor"])
    if args.windows is not None:
        windows = _parse_windows(args.windows)
    if args.factor is not None:
        factor = args.factor
    if windows is None:
        windows = DEFAULT_WINDOWS
    if len(windows) != 3:
        raise ValidationError(f"pipeline needs exactly 3 windows, got {len(windows)}")
    if factor is None:
        raise ValidationError("no downsampling factor given (flag --factor or config)")
    return PipelineConfig(windows=windows, factor=factor)


def cmd_pipeline(args) -> int:
    config = _pipeline_config(args)
    obj, _ = _load_input(args.input)
    if not isinstance(obj, ImagePlane):
        raise ValidationError("pipeline input must be a single-channel HU image")
    stacked = stack_windows(obj, config.windows)
    channels = tuple(epd_image_downsample(ch, config.factor) for ch in stacked.channels)
    planefile.save(args.output, MultiChannelImage(channels), semantic="image-norm")
    return 0


def _add_shape_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--shape", required=True, choices=("disk", "half-plane", "stripes", "random"))
    parser.add_argument("--size", default="512", help="N or HxW (default 512)")
    parser.add_argument("--classes", type=int, default=2)
    parser.add_argument("--radius", type=float, default=0.0)
    parser.add_argument("--center", default=None, help="ROW,COL (default image center)")
    parser.add_argument("--angle", type=float, default=0.0)
    parser.add_argument("--offset", type=float, default=0.0)
    parser.add_argument("--width", type=int, default=1, help="stripe width in pixels")
    parser.add_argument("--phase", type=int, default=0)
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epd",
        description="Edge-preserving probabilistic downsampling tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("downsample", help="downsample a label or image file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--method", required=True, choices=("epd", "nearest", "bilinear"))
    p.add_argument("--kind", required=True, choices=("label", "image"))
    p.add_argument("--pad", action="store_true", help="zero-pad to a factor multiple first")
    p.set_defaults(func=cmd_downsample)

    p = sub.add_parser("metrics", help="evaluate a soft prediction against a target")
    p.add_argument("--pred", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--report", default="csv", choices=("csv", "json"))
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("synth", help="generate a synthetic hard label")
    _add_shape_flags(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="mass-error benchmark: probabilistic vs nearest")
    _add_shape_flags(p)
    p.add_argument("--factors", default="2,4,8")
    p.add_argument("--phases", default="all", help="'all' or comma-separated offsets")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("loss-eval", help="evaluate the loss formulas on two files")
    p.add_argument("--target", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--omega", default="1,1")
    p.set_defaults(func=cmd_loss_eval)

    p = sub.add_parser("pipeline", help="HU-window an image into 3 channels, then downsample")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--windows", default=None, help='"LO:HI,LO:HI,LO:HI" in HU')
    p.add_argument("--factor", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON file with windows/factor")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
