"""Class-wise greedy 3D non-maximum suppression over scored detections."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .geometry import Cuboid, spatial_iou, temporal_iou
from .ingest import ValidationError, _get_int, _get_number, _get_str, _read_records, class_index


@dataclass(frozen=True)
class ScoredDetection:
    """Classified, temporally refined cuboid entering NMS and scoring."""

    video_id: str
    proposal_id: str
    action_class: int  # 1-based action index; non-action proposals never reach here
    confidence: float
    cuboid: Cuboid

    def __post_init__(self):
        if self.action_class < 1:
            raise ValidationError("action_class must be >= 1")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class NmsParams:
    temporal_iou: float = 0.2
    spatial_iou: float = 0.05

    def __post_init__(self):
        for name in ("temporal_iou", "spatial_iou"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")


def nms_3d(dets: Sequence[ScoredDetection], params: NmsParams = NmsParams()) -> list[ScoredDetection]:
    """Greedy per-class suppression of overlapping cuboids.

    A detection is suppressed only when BOTH its temporal and its spatial
    IoU with an already-kept same-class detection exceed their thresholds.
    Output is ordered by class, then confidence descending (ties by
    proposal_id).  Detections from different videos never interact; run
    per video.
    """
    by_class: dict[int, list[ScoredDetection]] = {}
    for det in dets:
        by_class.setdefault(det.action_class, []).append(det)
    survivors: list[ScoredDetection] = []
    for cls in sorted(by_class):
        pending = sorted(by_class[cls], key=lambda d: (-d.confidence, d.proposal_id))
        kept: list[ScoredDetection] = []
        for det in pending:
            suppressed = any(
                temporal_iou(det.cuboid, k.cuboid) > params.temporal_iou
                and spatial_iou(det.cuboid, k.cuboid) > params.spatial_iou
                for k in kept
            )
            if not suppressed:
                kept.append(det)
        survivors.extend(kept)
    return survivors


def write_final_detections(path, dets: Iterable[ScoredDetection], action_classes: Sequence[str]) -> None:
    """Final-detections file: the system's deliverable and scoring input."""
    with open(path, "w", encoding="utf-8") as fh:
        for det in dets:
            c = det.cuboid
            fh.write(json.dumps({
                "video_id": det.video_id,
                "proposal_id": det.proposal_id,
                "action_class": action_classes[det.action_class - 1],
                "confidence": det.confidence,
                "x_min": c.x_min,
                "y_min": c.y_min,
                "x_max": c.x_max,
                "y_max": c.y_max,
                "f_start": c.f_start,
                "f_end": c.f_end,
            }, sort_keys=True) + "\n")


def load_final_detections(path, action_classes: Sequence[str]) -> list[ScoredDetection]:
    out: list[ScoredDetection] = []
    for lineno, obj in _read_records(path):
        where = f"{path}:{lineno}"
        label = _get_str(obj, "action_class", where)
        confidence = _get_number(obj, "confidence", where)
        if not 0.0 <= confidence <= 1.0:
            raise ValidationError(f"{where}: confidence {confidence} outside [0, 1]")
        try:
            cuboid = Cuboid(
                x_min=_get_number(obj, "x_min", where),
                y_min=_get_number(obj, "y_min", where),
                x_max=_get_number(obj, "x_max", where),
                y_max=_get_number(obj, "y_max", where),
                f_start=_get_int(obj, "f_start", where),
                f_end=_get_int(obj, "f_end", where),
            )
        except ValueError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
        out.append(ScoredDetection(
            video_id=_get_str(obj, "video_id", where),
            proposal_id=_get_str(obj, "proposal_id", where),
            action_class=class_index(label, action_classes),
            confidence=confidence,
            cuboid=cuboid,
        ))
    return out
