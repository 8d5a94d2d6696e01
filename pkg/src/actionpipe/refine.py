"""Classifier-side math as checkable pure functions.

Covers the multi-class cross-entropy, the smooth-L1 temporal localization
loss and their weighted combination, the application of predicted temporal
refinements back onto cuboids, and uniform frame sampling.  External
trainers can validate their implementations against these via the CLI's
loss-oracle subcommand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .geometry import Cuboid
from .ingest import ValidationError

LOG_EPS = 1e-12  # clamp for log of a zero probability


@dataclass(frozen=True)
class LossParams:
    loc_weight: float = 0.25  # weight of the localization term for action classes
    num_classes: int = 12

    def __post_init__(self):
        if self.loc_weight < 0:
            raise ValidationError("loc_weight must be non-negative")
        if self.num_classes < 1:
            raise ValidationError("num_classes must be >= 1")


def cross_entropy(probs: Sequence[float], true_class: int, eps: float = LOG_EPS) -> float:
    """-log of the probability assigned to the true class, eps-clamped."""
    if not 0 <= true_class < len(probs):
        raise ValidationError(f"true_class {true_class} outside 0..{len(probs) - 1}")
    return -math.log(max(probs[true_class], eps))


def smooth_l1(x: float) -> float:
    ax = abs(x)
    if ax < 1.0:
        return 0.5 * x * x
    return ax - 0.5


def localization_loss(predicted: tuple[float, float], target: tuple[float, float]) -> float:
    """Smooth-L1 on the start error plus smooth-L1 on the end error."""
    return smooth_l1(target[0] - predicted[0]) + smooth_l1(target[1] - predicted[1])


def full_loss(
    probs: Sequence[float],
    true_class: int,
    predicted: tuple[float, float] | None,
    target: tuple[float, float] | None,
    params: LossParams = LossParams(),
) -> float:
    """Classification loss, plus the weighted localization loss for action classes.

    For the non-action class (0) the localization term contributes nothing
    and the result equals cross_entropy exactly.
    """
    cls = cross_entropy(probs, true_class)
    if true_class == 0:
        return cls
    if predicted is None or target is None:
        raise ValidationError("action classes need both predicted and target refinement pairs")
    return cls + params.loc_weight * localization_loss(predicted, target)


def apply_refinement(c: Cuboid, refinement: tuple[float, float]) -> tuple[Cuboid, bool]:
    """Move the temporal bounds by the normalized refinement pair.

    New bounds are mid + r*half rounded to the nearest frame.  If rounding
    inverts or collapses the span the cuboid is returned unrefined; the
    second element reports whether refinement was applied.
    """
    mid = (c.f_start + c.f_end) / 2.0
    half = (c.f_end - c.f_start + 1) / 2.0
    new_start = round(mid + refinement[0] * half)
    new_end = round(mid + refinement[1] * half)
    if new_start >= new_end:
        return c, False
    return Cuboid(c.x_min, c.y_min, c.x_max, c.y_max, new_start, new_end), True


def sample_frames(f_start: int, f_end: int, count: int = 64) -> list[int]:
    """Uniformly sample `count` frame indices across an inclusive span.

    Short spans repeat frames rather than wrapping, so the output is always
    non-decreasing with exact endpoints.
    """
    if f_start > f_end:
        raise ValidationError(f"inverted span [{f_start}, {f_end}]")
    if count < 1:
        raise ValidationError("count must be >= 1")
    if count == 1:
        return [f_start]
    span = f_end - f_start + 1
    return [f_start + round(i * (span - 1) / (count - 1)) for i in range(count)]
