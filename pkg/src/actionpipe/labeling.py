"""Training designations and temporal regression targets for proposals.

A proposal is positive when it overlaps a ground-truth action well enough
in both space and time, negative when it barely overlaps anything in time
(hard if it still sits on an action spatially), and discarded when it falls
in the ambiguous band between those regimes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .geometry import Cuboid, spatial_iou, temporal_iou
from .ingest import GroundTruthAction, ValidationError
from .proposals import PROVENANCE_CLUSTERING, Proposal

POSITIVE = "positive"
EASY_NEGATIVE = "easy_negative"
HARD_NEGATIVE = "hard_negative"
DISCARDED = "discarded"
DESIGNATIONS = (POSITIVE, EASY_NEGATIVE, HARD_NEGATIVE, DISCARDED)


@dataclass(frozen=True)
class LabelingThresholds:
    spatial_positive: float = 0.35  # spatial IoU gate for positives and hard negatives
    temporal_positive: float = 0.5
    temporal_negative: float = 0.2  # below this (vs every GT) a proposal is negative
    hard_temporal_low: float = 0.01  # hard band is (low, temporal_negative), open ends

    def __post_init__(self):
        for name in ("spatial_positive", "temporal_positive", "temporal_negative", "hard_temporal_low"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class LabeledProposal:
    proposal: Proposal
    designation: str
    action_class: str | None = None
    matched_gt: GroundTruthAction | None = None
    regression_target: tuple[float, float] | None = None

    def __post_init__(self):
        if self.designation not in DESIGNATIONS:
            raise ValidationError(f"unknown designation {self.designation!r}")
        if (self.designation == POSITIVE) != (self.regression_target is not None):
            raise ValidationError("regression_target must be present exactly for positives")


def regression_target(p: Cuboid, gt: Cuboid) -> tuple[float, float]:
    """Ground-truth frame bounds normalized by the proposal's mid-frame and half-length."""
    mid = (p.f_start + p.f_end) / 2.0
    half = (p.f_end - p.f_start + 1) / 2.0
    return (gt.f_start - mid) / half, (gt.f_end - mid) / half


def designate(
    p: Proposal,
    gts: Sequence[GroundTruthAction],
    thresholds: LabelingThresholds = LabelingThresholds(),
) -> LabeledProposal:
    """Assign one designation against the given ground truth of the same video.

    Best match = highest temporal IoU among GTs passing the spatial gate,
    ties broken by higher spatial IoU then lower GT index.  Positive needs
    that match to clear the temporal gate too; a proposal whose temporal IoU
    stays below the negative ceiling against every GT is a negative (hard if
    it passes the spatial gate inside the hard band); everything else is
    discarded and excluded from training.
    """
    overlaps = [(spatial_iou(p.cuboid, g.cuboid), temporal_iou(p.cuboid, g.cuboid)) for g in gts]
    gated = [(ti, si, -i) for i, (si, ti) in enumerate(overlaps) if si > thresholds.spatial_positive]
    if gated:
        ti, si, neg_i = max(gated)
        if ti > thresholds.temporal_positive:
            gt = gts[-neg_i]
            return LabeledProposal(
                proposal=p,
                designation=POSITIVE,
                action_class=gt.action_class,
                matched_gt=gt,
                regression_target=regression_target(p.cuboid, gt.cuboid),
            )
    if all(ti < thresholds.temporal_negative for _, ti in overlaps):
        hard = any(
            si > thresholds.spatial_positive
            and thresholds.hard_temporal_low < ti < thresholds.temporal_negative
            for si, ti in overlaps
        )
        return LabeledProposal(p, HARD_NEGATIVE if hard else EASY_NEGATIVE)
    return LabeledProposal(p, DISCARDED)


def designate_all(
    proposals: Iterable[Proposal],
    gts_by_video: dict[str, list[GroundTruthAction]],
    thresholds: LabelingThresholds = LabelingThresholds(),
) -> list[LabeledProposal]:
    return [designate(p, gts_by_video.get(p.video_id, []), thresholds) for p in proposals]


def select_training_set(labeled: Iterable[LabeledProposal]) -> list[LabeledProposal]:
    """Positives and hard negatives regardless of provenance; easy negatives
    only when they came from clustering; discarded never."""
    out = []
    for lp in labeled:
        if lp.designation in (POSITIVE, HARD_NEGATIVE):
            out.append(lp)
        elif lp.designation == EASY_NEGATIVE and lp.proposal.provenance == PROVENANCE_CLUSTERING:
            out.append(lp)
    return out


def balance_classes(
    training: Sequence[LabeledProposal],
    required_classes: Iterable[str] | None = None,
) -> list[LabeledProposal]:
    """Duplicate positives so every action class reaches the max class count.

    Duplicates cycle through each class's instances in order and are
    appended after the input; negatives pass through untouched.  When
    required_classes is given, classes without a single positive raise.
    """
    by_class: dict[str, list[LabeledProposal]] = {}
    for lp in training:
        if lp.designation == POSITIVE:
            by_class.setdefault(lp.action_class, []).append(lp)
    if required_classes is not None:
        missing = [c for c in required_classes if c not in by_class]
        if missing:
            raise ValidationError(f"no positive instances for classes: {', '.join(missing)}")
    if not by_class:
        return list(training)
    target = max(len(v) for v in by_class.values())
    out = list(training)
    for label in sorted(by_class):
        instances = by_class[label]
        out.extend(instances[i % len(instances)] for i in range(target - len(instances)))
    return out


def designation_counts(labeled: Iterable[LabeledProposal]) -> dict[str, int]:
    counts = {d: 0 for d in DESIGNATIONS}
    for lp in labeled:
        counts[lp.designation] += 1
    return counts


def write_training_manifest(path, training: Iterable[LabeledProposal]) -> None:
    """Training manifest consumed by external classifier trainers."""
    with open(path, "w", encoding="utf-8") as fh:
        for lp in training:
            target = lp.regression_target
            fh.write(json.dumps({
                "proposal_id": lp.proposal.proposal_id,
                "designation": lp.designation,
                "action_class": lp.action_class,
                "target_start": None if target is None else target[0],
                "target_end": None if target is None else target[1],
            }, sort_keys=True) + "\n")
