"""Evaluation: one-to-one matching, miss-rate/false-alarm curves, recall curves.

Detections are paired with ground truth one-to-one, maximizing match count
first and total temporal IoU second.  Sweeping the detection confidence
threshold traces an operating curve of miss probability against false
alarms per minute; per-class curves are macro-averaged into the aggregate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import iou_3d, spatial_iou, temporal_iou
from .ingest import DEFAULT_ACTION_CLASSES, GroundTruthAction, ValidationError, class_index
from .nms import ScoredDetection
from .proposals import Proposal

log = logging.getLogger(__name__)

# Default operating rates (false alarms per minute) for report summaries.
DEFAULT_RATE_GRID = (0.01, 0.03, 0.1, 0.15, 0.2, 1.0)

IOU_MODES = ("volume", "product")


@dataclass(frozen=True)
class MatchParams:
    """Congruence rule deciding whether a detection may match a GT instance."""

    temporal_iou: float = 0.2
    spatial_iou: float = 0.0  # 0 disables the spatial gate

    def __post_init__(self):
        for name in ("temporal_iou", "spatial_iou"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class DetCurve:
    """Operating points (rate_fa, p_miss), rate ascending, p_miss non-increasing."""

    class_label: str
    points: tuple[tuple[float, float], ...]


def _congruent(det: ScoredDetection, gt: GroundTruthAction, params: MatchParams, classes: Sequence[str]) -> bool:
    return (
        det.video_id == gt.video_id
        and det.action_class == class_index(gt.action_class, classes)
        and temporal_iou(det.cuboid, gt.cuboid) >= params.temporal_iou
        and spatial_iou(det.cuboid, gt.cuboid) >= params.spatial_iou
    )


def hungarian_match(
    dets: Sequence[ScoredDetection],
    gts: Sequence[GroundTruthAction],
    params: MatchParams = MatchParams(),
    classes: Sequence[str] | None = None,
) -> list[tuple[int, int]]:
    """One-to-one assignment of detections to ground truth.

    Only congruent pairs (same video and class, temporal IoU above the gate,
    optional spatial gate) may match; among feasible assignments the match
    count is maximized first and the summed temporal IoU second.  Returns
    (detection index, gt index) pairs.
    """
    if classes is None:
        classes = DEFAULT_ACTION_CLASSES
    if not dets or not gts:
        return []
    # Reward = K + temporal IoU for congruent pairs, 0 otherwise.  K beats any
    # achievable IoU sum, so cardinality dominates; zero-reward assignments are
    # dropped afterwards without changing the objective.
    big = float(len(dets) + len(gts) + 1)
    reward = np.zeros((len(dets), len(gts)))
    for i, det in enumerate(dets):
        for j, gt in enumerate(gts):
            if _congruent(det, gt, params, classes):
                reward[i, j] = big + temporal_iou(det.cuboid, gt.cuboid)
    rows, cols = linear_sum_assignment(reward, maximize=True)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if reward[i, j] > 0.0]


def _match_count(dets: Sequence[ScoredDetection], gts: Sequence[GroundTruthAction],
                 params: MatchParams, classes: Sequence[str]) -> int:
    # group by (video, class) so the assignment matrices stay small
    det_groups: dict[tuple[str, int], list[ScoredDetection]] = {}
    for det in dets:
        det_groups.setdefault((det.video_id, det.action_class), []).append(det)
    gt_groups: dict[tuple[str, int], list[GroundTruthAction]] = {}
    for gt in gts:
        gt_groups.setdefault((gt.video_id, class_index(gt.action_class, classes)), []).append(gt)
    total = 0
    for key, group in det_groups.items():
        total += len(hungarian_match(group, gt_groups.get(key, []), params, classes))
    return total


def det_curve(
    dets: Sequence[ScoredDetection],
    gts: Sequence[GroundTruthAction],
    video_minutes: float,
    params: MatchParams = MatchParams(),
    classes: Sequence[str] | None = None,
    class_label: str = "aggregate",
) -> DetCurve:
    """Sweep the confidence threshold and record one operating point each.

    At a threshold, detections at or above it are matched; p_miss is the
    unmatched GT fraction and rate_fa the unmatched detections per minute.
    Duplicate rates keep their lowest p_miss (lower envelope).
    """
    if classes is None:
        classes = DEFAULT_ACTION_CLASSES
    if video_minutes <= 0:
        raise ValidationError("video_minutes must be positive")
    if not gts:
        raise ValidationError("det_curve needs at least one ground-truth instance")
    if not dets:
        return DetCurve(class_label, ((0.0, 1.0),))
    points: dict[float, float] = {}
    for threshold in sorted({d.confidence for d in dets}, reverse=True):
        surviving = [d for d in dets if d.confidence >= threshold]
        matched = _match_count(surviving, gts, params, classes)
        p_miss = (len(gts) - matched) / len(gts)
        rate_fa = (len(surviving) - matched) / video_minutes
        points[rate_fa] = min(points.get(rate_fa, 1.0), p_miss)
    return DetCurve(class_label, tuple(sorted(points.items())))


def pmiss_at(curve: DetCurve, rate: float) -> float:
    """Miss probability at a requested rate: conservative stepwise lookup.

    Uses the point with the largest operating rate not exceeding the request
    and 1.0 when the curve never operates that low.
    """
    if rate < 0:
        raise ValidationError("rate must be >= 0")
    best = 1.0
    for rate_fa, p_miss in curve.points:
        if rate_fa <= rate:
            best = p_miss
        else:
            break
    return best


def mean_pmiss_at(curve: DetCurve, rates: Sequence[float] = DEFAULT_RATE_GRID) -> list[float]:
    return [pmiss_at(curve, r) for r in rates]


def per_class_det_curves(
    dets: Sequence[ScoredDetection],
    gts: Sequence[GroundTruthAction],
    video_minutes: float,
    params: MatchParams = MatchParams(),
    classes: Sequence[str] | None = None,
) -> dict[str, DetCurve]:
    """One curve per action class that has ground truth.

    Classes without any GT instance are skipped with a warning; classes
    without detections still get a curve (pinned at p_miss 1).
    """
    if classes is None:
        classes = DEFAULT_ACTION_CLASSES
    gt_labels = {gt.action_class for gt in gts}
    det_labels = {classes[d.action_class - 1] for d in dets}
    for label in sorted(det_labels - gt_labels):
        log.warning("class %r has detections but no ground truth; omitted from the aggregate", label)
    curves: dict[str, DetCurve] = {}
    for label in [c for c in classes if c in gt_labels]:
        idx = class_index(label, classes)
        curves[label] = det_curve(
            [d for d in dets if d.action_class == idx],
            [g for g in gts if g.action_class == label],
            video_minutes,
            params,
            classes,
            class_label=label,
        )
    return curves


def aggregate_det_curve(curves: Iterable[DetCurve]) -> DetCurve:
    """Unweighted mean of per-class miss probabilities on the union rate grid."""
    curves = list(curves)
    if not curves:
        raise ValidationError("aggregate needs at least one per-class curve")
    grid = sorted({rate for c in curves for rate, _ in c.points})
    if not grid:
        grid = [0.0]
    points = tuple((rate, sum(pmiss_at(c, rate) for c in curves) / len(curves)) for rate in grid)
    return DetCurve("aggregate", points)


def recall_curve(
    proposals: Sequence[Proposal],
    gts: Sequence[GroundTruthAction],
    thresholds: Sequence[float],
    iou_mode: str = "volume",
) -> list[float]:
    """Class-agnostic proposal recall at each IoU threshold.

    A GT counts as covered at threshold t when some proposal of the same
    video reaches IoU >= t; "volume" uses 3-D IoU, "product" multiplies the
    spatial and temporal IoUs.
    """
    if not gts:
        raise ValidationError("recall_curve needs at least one ground-truth instance")
    if iou_mode not in IOU_MODES:
        raise ValidationError(f"iou_mode must be one of {IOU_MODES}, got {iou_mode!r}")
    by_video: dict[str, list[Proposal]] = {}
    for prop in proposals:
        by_video.setdefault(prop.video_id, []).append(prop)
    best: list[float] = []
    for gt in gts:
        candidates = by_video.get(gt.video_id, [])
        if iou_mode == "volume":
            ious = [iou_3d(p.cuboid, gt.cuboid) for p in candidates]
        else:
            ious = [spatial_iou(p.cuboid, gt.cuboid) * temporal_iou(p.cuboid, gt.cuboid) for p in candidates]
        best.append(max(ious, default=0.0))
    return [sum(b >= t for b in best) / len(best) for t in thresholds]
