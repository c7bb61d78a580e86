"""Training-loss formulas with analytic gradients and a finite-difference check.

Three numeric functions usable by any external training loop:

* mean absolute error        L1   = (1/N) sum |y - yhat|
* dice dissimilarity         Ldsc = 1 - 2 sum(y*yhat) / (sum y + sum yhat)
* uncertainty-weighted total Ltot = sum_t [ L_t / (2 w_t^2) + ln(1 + w_t^2) ]

The total combines an arbitrary set of loss terms, weighting each by its own
learnable uncertainty w_t; the ln(1 + w_t^2) regularizer is non-negative, so
the weights cannot collapse the loss to zero. No autodiff framework is used;
gradients are closed-form and verifiable with :func:`gradient_check`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import ValidationError

__all__ = [
    "LossWeights",
    "LossEval",
    "GradientCheckResult",
    "l1_loss",
    "dice_loss",
    "total_loss",
    "gradient_check",
]


@dataclass(frozen=True)
class LossWeights:
    """One positive weight per loss term; weights enter squared, so the sign
    is irrelevant and they are stored as positives. Zero is invalid."""

    omega: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.omega, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise ValidationError("need at least one loss weight")
        if not np.isfinite(arr).all():
            raise ValidationError("loss weights must be finite")
        if (arr == 0.0).any():
            raise ValidationError("loss weights must be nonzero (they are squared)")
        arr = np.abs(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "omega", arr)

    def __len__(self) -> int:
        return int(self.omega.size)


@dataclass(frozen=True)
class LossEval:
    """A loss value with its gradients.

    ``grad_pred`` is the gradient with respect to the prediction array (for
    the total loss: with respect to the per-term loss values). ``grad_omega``
    is only present for the weighted total.
    """

    value: float
    grad_pred: np.ndarray | None = None
    grad_omega: np.ndarray | None = None


def _flat_pair(target, pred) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(target, dtype=np.float64).reshape(-1)
    yhat = np.asarray(pred, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise ValidationError("empty input")
    if y.size != yhat.size:
        raise ValidationError(f"length mismatch: target {y.size} vs pred {yhat.size}")
    return y, yhat


def l1_loss(target, pred) -> LossEval:
    """Mean absolute error over flat arrays.

    Gradient w.r.t. pred is -sign(y - yhat)/N, with subgradient 0 taken at
    exact equality.
    """
    y, yhat = _flat_pair(target, pred)
    diff = y - yhat
    value = float(np.abs(diff).mean())
    grad = -np.sign(diff) / y.size
    return LossEval(value=value, grad_pred=grad)


def dice_loss(target, pred, smooth: float = 0.0) -> LossEval:
    """Dice dissimilarity 1 - 2 sum(y*yhat) / (sum y + sum yhat + smooth).

    The formula has no smoothing term by default; a both-empty input makes
    the denominator degenerate and is an error unless a positive ``smooth``
    is supplied.
    """
    y, yhat = _flat_pair(target, pred)
    if smooth < 0.0:
        raise ValidationError(f"smooth must be >= 0, got {smooth}")
    overlap = float((y * yhat).sum())
    denom = float(y.sum() + yhat.sum()) + smooth
    if denom == 0.0:
        raise ValidationError(
            "degenerate denominator: both inputs sum to zero and no smoothing was given"
        )
    value = 1.0 - 2.0 * overlap / denom
    grad = -(2.0 * y * denom - 2.0 * overlap) / (denom * denom)
    return LossEval(value=value, grad_pred=grad)


def total_loss(losses: Sequence[float], weights: LossWeights) -> LossEval:
    """Uncertainty-weighted sum: sum_t [ L_t/(2 w_t^2) + ln(1 + w_t^2) ].

    Returns the gradient w.r.t. each loss value (1/(2 w_t^2), in
    ``grad_pred``) and w.r.t. each weight (-L_t/w_t^3 + 2 w_t/(1 + w_t^2),
    in ``grad_omega``).
    """
    values = np.asarray(losses, dtype=np.float64).reshape(-1)
    if values.size != len(weights):
        raise ValidationError(
            f"got {values.size} loss values for {len(weights)} weights"
        )
    if not np.isfinite(values).all():
        raise ValidationError("loss values must be finite")
    w = weights.omega
    value = float((values / (2.0 * w**2) + np.log1p(w**2)).sum())
    grad_losses = 1.0 / (2.0 * w**2)
    grad_omega = -values / w**3 + 2.0 * w / (1.0 + w**2)
    return LossEval(value=value, grad_pred=grad_losses, grad_omega=grad_omega)


@dataclass(frozen=True)
class GradientCheckResult:
    passed: bool
    max_rel_error: float
    worst_index: int

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"gradient check {status}: max relative error "
            f"{self.max_rel_error:.3e} at coordinate {self.worst_index}"
        )


def gradient_check(
    fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
    point,
    step: float = 1e-5,
    tol: float = 1e-4,
    floor: float = 1e-8,
) -> GradientCheckResult:
    """Compare ``fn``'s analytic gradient against central finite differences.

    ``fn`` maps an array to (value, gradient). The relative error at each
    coordinate uses max(|analytic|, |numeric|, floor) as denominator, so
    coordinates where both sides vanish count as agreement. Points should
    avoid known nondifferentiable sets (for L1: |y - yhat| below ~1e-3).
    """
    if step <= 0.0:
        raise ValidationError(f"step must be > 0, got {step}")
    x = np.array(point, dtype=np.float64).reshape(-1)
    _, analytic = fn(x)
    analytic = np.asarray(analytic, dtype=np.float64).reshape(-1)
    numeric = np.empty_like(analytic)
    for i in range(x.size):
        bumped = x.copy()
        bumped[i] = x[i] + step
        up = fn(bumped)[0]
        bumped[i] = x[i] - step
        down = fn(bumped)[0]
        numeric[i] = (up - down) / (2.0 * step)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    rel = np.abs(analytic - numeric) / scale
    worst = int(np.argmax(rel))
    worst_err = float(rel[worst])
    return GradientCheckResult(passed=worst_err < tol, max_rel_error=worst_err, worst_index=worst)


def check_l1_gradient(target, pred, step: float = 1e-5, tol: float = 1e-4) -> GradientCheckResult:
    y, _ = _flat_pair(target, pred)
    return gradient_check(
        lambda p: ((e := l1_loss(y, p)).value, e.grad_pred), pred, step=step, tol=tol
    )


def check_dice_gradient(target, pred, step: float = 1e-5, tol: float = 1e-4) -> GradientCheckResult:
    y, _ = _flat_pair(target, pred)
    return gradient_check(
        lambda p: ((e := dice_loss(y, p)).value, e.grad_pred), pred, step=step, tol=tol
    )


def check_total_omega_gradient(
    losses: Sequence[float], omega, step: float = 1e-5, tol: float = 1e-6
) -> GradientCheckResult:
    values = tuple(float(v) for v in losses)
    return gradient_check(
        lambda w: (
            (e := total_loss(values, LossWeights(w))).value,
            e.grad_omega,
        ),
        omega,
        step=step,
        tol=tol,
    )
