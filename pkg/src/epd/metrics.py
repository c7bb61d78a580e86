"""Hard and soft segmentation metrics with global optimal-threshold search.

Hard metrics (ACC, SPE, SEN, PRE, DSC_h, IoU) are one-vs-rest pixel-count
ratios computed from a hard assignment of the soft prediction. Soft metrics
(DSC_s, RAD, RD, RMSE) compare probability mass directly, so they can reward
predictions that keep edge uncertainty instead of saturating to 0/1; RD is
signed so under-segmentation (negative) and over-segmentation (positive) are
distinguishable.

Classes absent from the target are excluded from macro averages rather than
scored as zero, which would drag the averages down for no modelling reason.
Ratios with a 0/0 denominator are likewise reported as undefined (``None``)
and skipped, never coerced to 0.

Averages are macro (unweighted mean over included classes); every report
records that choice in its header.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import HardLabelMap, SoftLabelMap, ValidationError, one_hot

__all__ = [
    "METRIC_COLUMNS",
    "ConfusionCounts",
    "HardMetrics",
    "SoftMetrics",
    "ClassRow",
    "MetricsReport",
    "confusion",
    "hard_metrics",
    "soft_metrics",
    "apply_threshold",
    "optimal_threshold_search",
    "aggregate",
    "report_to_csv",
    "report_to_json",
]

METRIC_COLUMNS = ("ACC", "SPE", "SEN", "PRE", "DSC_h", "IoU", "DSC_s", "RAD", "RD", "RMSE")

_FIELD_BY_COLUMN = {
    "ACC": "acc",
    "SPE": "spe",
    "SEN": "sen",
    "PRE": "pre",
    "DSC_h": "dsc_h",
    "IoU": "iou",
    "DSC_s": "dsc_s",
    "RAD": "rad",
    "RD": "rd",
    "RMSE": "rmse",
}


@dataclass(frozen=True)
class ConfusionCounts:
    """One-vs-rest pixel counts for a single class."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ValidationError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class HardMetrics:
    """Threshold-based metrics for one class; ``None`` marks a 0/0 ratio."""

    acc: float | None
    spe: float | None
    sen: float | None
    pre: float | None
    dsc_h: float | None
    iou: float | None


@dataclass(frozen=True)
class SoftMetrics:
    """Mass-based metrics for one class; all ``None`` when the target mass is 0."""

    dsc_s: float | None
    rad: float | None
    rd: float | None
    rmse: float | None


def _check_same_grid(a, b) -> None:
    if a.height != b.height or a.width != b.width:
        raise ValidationError(
            f"dimension mismatch: {a.height}x{a.width} vs {b.height}x{b.width}"
        )


def confusion(pred: HardLabelMap, target: HardLabelMap, cls: int) -> ConfusionCounts:
    """One-vs-rest confusion counts of ``cls`` between two hard maps."""
    _check_same_grid(pred, target)
    if cls < 0 or cls >= max(pred.num_classes, target.num_classes):
        raise ValidationError(f"class {cls} out of range")
    p = pred.data == cls
    t = target.data == cls
    tp = int((p & t).sum())
    fp = int(p.sum()) - tp
    fn = int(t.sum()) - tp
    tn = p.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def hard_metrics(counts: ConfusionCounts) -> HardMetrics:
    """ACC, SPE, SEN, PRE, DSC_h, IoU from one-vs-rest counts.

    DSC_h = 2tp / (2tp + fp + fn) and IoU = tp / (tp + fp + fn), which pins
    the algebraic identity DSC_h = 2 IoU / (1 + IoU).
    """
    c = counts
    return HardMetrics(
        acc=_ratio(c.tp + c.tn, c.total),
        spe=_ratio(c.tn, c.tn + c.fp),
        sen=_ratio(c.tp, c.tp + c.fn),
        pre=_ratio(c.tp, c.tp + c.fp),
        dsc_h=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        iou=_ratio(c.tp, c.tp + c.fp + c.fn),
    )


def soft_metrics(pred: SoftLabelMap, target: SoftLabelMap) -> list[SoftMetrics]:
    """Per-class DSC_s, RAD, RD, RMSE between two soft maps.

    With T = target mass and P = predicted mass of a class over all pixels:
    DSC_s = 2 sum(y*yhat) / (T + P), RAD = sum|yhat - y| / T,
    RD = (P - T) / T, RMSE = sqrt(mean((yhat - y)^2)). Classes with T = 0
    are undefined.
    """
    _check_same_grid(pred, target)
    if pred.num_classes != target.num_classes:
        raise ValidationError(
            f"class count mismatch: {pred.num_classes} vs {target.num_classes}"
        )
    out: list[SoftMetrics] = []
    for c in range(target.num_classes):
        y = target.data[:, :, c]
        yhat = pred.data[:, :, c]
        t_mass = float(y.sum())
        p_mass = float(yhat.sum())
        if t_mass == 0.0:
            out.append(SoftMetrics(None, None, None, None))
            continue
        out.append(
            SoftMetrics(
                dsc_s=2.0 * float((y * yhat).sum()) / (t_mass + p_mass),
                rad=float(np.abs(yhat - y).sum()) / t_mass,
                rd=(p_mass - t_mass) / t_mass,
                rmse=math.sqrt(float(((yhat - y) ** 2).mean())),
            )
        )
    return out


def apply_threshold(soft: SoftLabelMap, threshold: float) -> HardLabelMap:
    """Assign each pixel its highest-probability class, gated by a threshold.

    The winning class (lowest index on ties) is kept when its probability is
    strictly greater than the threshold; otherwise the pixel falls back to
    background class 0. At threshold 0 this is plain argmax assignment.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must be in [0, 1], got {threshold}")
    winner = np.argmax(soft.data, axis=2)
    pmax = soft.data.max(axis=2)
    hard = np.where(pmax > threshold, winner, 0).astype(np.int32)
    return HardLabelMap(hard, soft.num_classes)


@dataclass(frozen=True)
class ClassRow:
    """All ten metric values for one class, plus its exclusion flag."""

    index: int
    excluded: bool
    acc: float | None
    spe: float | None
    sen: float | None
    pre: float | None
    dsc_h: float | None
    iou: float | None
    dsc_s: float | None
    rad: float | None
    rd: float | None
    rmse: float | None

    def value(self, column: str) -> float | None:
        return getattr(self, _FIELD_BY_COLUMN[column])


def aggregate(rows, exclude_missing: bool = True) -> dict[str, float | None]:
    """Macro-average each metric over the class rows.

    With ``exclude_missing`` (the default), excluded classes are dropped and
    undefined values are skipped per metric. With it off, the naive policy is
    applied instead: every class counts and undefined values score 0.
    """
    rows = list(rows)
    used = [r for r in rows if not r.excluded] if exclude_missing else rows
    if not used:
        raise ValidationError("all classes excluded from aggregation")
    averages: dict[str, float | None] = {}
    for column in METRIC_COLUMNS:
        values = []
        for row in used:
            v = row.value(column)
            if v is None:
                if not exclude_missing:
                    values.append(0.0)
            else:
                values.append(v)
        averages[column] = sum(values) / len(values) if values else None
    return averages


@dataclass(frozen=True)
class MetricsReport:
    """Per-class and macro-averaged metric values at the chosen threshold."""

    num_classes: int
    chosen_threshold: float
    per_class: tuple[ClassRow, ...]
    averages: dict[str, float | None]
    excluded_classes: tuple[int, ...]
    degenerate_prediction: bool
    aggregation: str = "macro"


def _threshold_grid(step: float) -> list[float]:
    if not 0.0 < step <= 1.0:
        raise ValidationError(f"step must be in (0, 1], got {step}")
    n = round(1.0 / step)
    return [i / n for i in range(n + 1)]


def _macro_dsc(pred_hard: np.ndarray, target_masks: list[np.ndarray], included: list[int]) -> float:
    total = 0.0
    for c in included:
        mask = target_masks[c]
        p = pred_hard == c
        tp = int((p & mask).sum())
        fp = int(p.sum()) - tp
        fn = int(mask.sum()) - tp
        total += 2 * tp / (2 * tp + fp + fn)
    return total / len(included)


def _is_degenerate(soft: SoftLabelMap) -> bool:
    # every pixel's maximum is tied across >= 2 classes, e.g. uniform 1/C
    d = soft.data
    pmax = d.max(axis=2, keepdims=True)
    return bool(((d == pmax).sum(axis=2) >= 2).all())


def optimal_threshold_search(
    pred: SoftLabelMap,
    target: HardLabelMap,
    step: float = 0.01,
    soft_target: SoftLabelMap | None = None,
) -> tuple[float, MetricsReport]:
    """Scan thresholds on a uniform [0, 1] grid and keep the best one.

    Every grid threshold is evaluated; the smallest threshold attaining the
    highest macro DSC_h wins, and the full report is computed there. One
    global threshold is searched, shared by all classes. Soft metrics are
    computed against ``soft_target`` when given, else against the one-hot
    embedding of ``target``.
    """
    _check_same_grid(pred, target)
    if pred.num_classes != target.num_classes:
        raise ValidationError(
            f"class count mismatch: {pred.num_classes} vs {target.num_classes}"
        )
    C = target.num_classes
    target_masks = [target.data == c for c in range(C)]
    included = [c for c in range(C) if target_masks[c].any()]
    if not included:
        raise ValidationError("all classes excluded: target contains no class")

    best_t = 0.0
    best_dsc = -1.0
    for t in _threshold_grid(step):
        macro = _macro_dsc(apply_threshold(pred, t).data, target_masks, included)
        if macro > best_dsc:
            best_dsc = macro
            best_t = t

    hard = apply_threshold(pred, best_t)
    if soft_target is None:
        soft_target = one_hot(target)
    soft_rows = soft_metrics(pred, soft_target)

    included_set = set(included)
    rows = []
    for c in range(C):
        hm = hard_metrics(confusion(hard, target, c))
        sm = soft_rows[c]
        rows.append(
            ClassRow(
                index=c,
                excluded=c not in included_set,
                acc=hm.acc,
                spe=hm.spe,
                sen=hm.sen,
                pre=hm.pre,
                dsc_h=hm.dsc_h,
                iou=hm.iou,
                dsc_s=sm.dsc_s,
                rad=sm.rad,
                rd=sm.rd,
                rmse=sm.rmse,
            )
        )
    report = MetricsReport(
        num_classes=C,
        chosen_threshold=best_t,
        per_class=tuple(rows),
        averages=aggregate(rows),
        excluded_classes=tuple(c for c in range(C) if c not in included_set),
        degenerate_prediction=_is_degenerate(pred),
    )
    return best_t, report


def _cell(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def report_to_csv(report: MetricsReport) -> str:
    """Render a report as CSV: one row per class plus one average row.

    Numbers carry 6 decimal places; undefined values are empty cells. The
    average row's ``excluded`` cell lists the excluded class indices.
    """
    buf = io.StringIO()
    degenerate = "yes" if report.degenerate_prediction else "no"
    buf.write(
        f"# aggregation={report.aggregation}"
        f" threshold={report.chosen_threshold:.6f}"
        f" degenerate_prediction={degenerate}\n"
    )
    buf.write("class," + ",".join(METRIC_COLUMNS) + ",excluded\n")
    for row in report.per_class:
        cells = [str(row.index)]
        cells += [_cell(row.value(col)) for col in METRIC_COLUMNS]
        cells.append("yes" if row.excluded else "no")
        buf.write(",".join(cells) + "\n")
    avg_cells = ["average"]
    avg_cells += [_cell(report.averages[col]) for col in METRIC_COLUMNS]
    avg_cells.append(" ".join(str(c) for c in report.excluded_classes))
    buf.write(",".join(avg_cells) + "\n")
    return buf.getvalue()


def report_to_json(report: MetricsReport) -> str:
    """Render a report as JSON with full float precision."""
    payload = {
        "aggregation": report.aggregation,
        "chosen_threshold": report.chosen_threshold,
        "degenerate_prediction": report.degenerate_prediction,
        "excluded_classes": list(report.excluded_classes),
        "num_classes": report.num_classes,
        "per_class": [
            {
                "class": row.index,
                "excluded": row.excluded,
                **{col: row.value(col) for col in METRIC_COLUMNS},
            }
            for row in report.per_class
        ],
        "average": {col: report.averages[col] for col in METRIC_COLUMNS},
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
