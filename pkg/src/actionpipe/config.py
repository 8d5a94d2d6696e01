"""Pipeline configuration: one JSON file wiring paths and every threshold."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .clustering import ClusterParams
from .ingest import DEFAULT_ACTION_CLASSES, DEFAULT_OBJECT_CLASSES, ValidationError
from .jitter import JitterParams
from .labeling import LabelingThresholds
from .nms import NmsParams
from .refine import LossParams
from .scoring import DEFAULT_RATE_GRID, IOU_MODES, MatchParams


@dataclass(frozen=True)
class PipelineConfig:
    detections: Path
    ground_truth: Path
    videos: Path
    output_dir: Path
    scores: Path | None = None
    action_classes: tuple[str, ...] = DEFAULT_ACTION_CLASSES
    object_classes: tuple[str, ...] | None = DEFAULT_OBJECT_CLASSES
    min_confidence: float = 0.5
    cluster: ClusterParams = ClusterParams()
    jitter: JitterParams = JitterParams()
    labeling: LabelingThresholds = LabelingThresholds()
    loss: LossParams = LossParams()
    nms: NmsParams = NmsParams()
    match: MatchParams = MatchParams()
    rate_grid: tuple[float, ...] = DEFAULT_RATE_GRID
    recall_iou_mode: str = "volume"

    def __post_init__(self):
        object.__setattr__(self, "action_classes", tuple(self.action_classes))
        if self.object_classes is not None:
            object.__setattr__(self, "object_classes", tuple(self.object_classes))
        object.__setattr__(self, "rate_grid", tuple(self.rate_grid))
        if not self.action_classes:
            raise ValidationError("action_classes must be nonempty")
        if len(set(self.action_classes)) != len(self.action_classes):
            raise ValidationError("action_classes must be unique")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValidationError("min_confidence must be in [0, 1]")
        if self.recall_iou_mode not in IOU_MODES:
            raise ValidationError(f"recall_iou_mode must be one of {IOU_MODES}")
        if any(r < 0 for r in self.rate_grid):
            raise ValidationError("rate_grid entries must be >= 0")


_SECTIONS = {
    "cluster": ClusterParams,
    "jitter": JitterParams,
    "labeling": LabelingThresholds,
    "loss": LossParams,
    "nms": NmsParams,
    "match": MatchParams,
}
_PATH_KEYS = ("detections", "ground_truth", "videos", "scores", "output_dir")


def config_to_dict(cfg: PipelineConfig) -> dict:
    out: dict = {
        "detections": str(cfg.detections),
        "ground_truth": str(cfg.ground_truth),
        "videos": str(cfg.videos),
        "scores": None if cfg.scores is None else str(cfg.scores),
        "output_dir": str(cfg.output_dir),
        "action_classes": list(cfg.action_classes),
        "object_classes": None if cfg.object_classes is None else list(cfg.object_classes),
        "min_confidence": cfg.min_confidence,
        "rate_grid": list(cfg.rate_grid),
        "recall_iou_mode": cfg.recall_iou_mode,
    }
    for name, _ in _SECTIONS.items():
        section = dataclasses.asdict(getattr(cfg, name))
        for key, value in section.items():
            if isinstance(value, tuple):
                section[key] = list(value)
        out[name] = section
    return out


def config_from_dict(data: dict, base_dir: Path | None = None) -> PipelineConfig:
    """Build a config from parsed JSON; relative paths resolve against base_dir."""
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    known = set(_PATH_KEYS) | set(_SECTIONS) | {
        "action_classes", "object_classes", "min_confidence", "rate_grid", "recall_iou_mode",
    }
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    kwargs: dict = {}
    for key in _PATH_KEYS:
        if key not in data or data[key] is None:
            if key == "scores":
                kwargs[key] = None
                continue
            raise ValidationError(f"config is missing required path {key!r}")
        path = Path(data[key])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        kwargs[key] = path
    for key in ("action_classes", "object_classes", "min_confidence", "rate_grid", "recall_iou_mode"):
        if key in data and data[key] is not None:
            kwargs[key] = data[key]
        elif key == "object_classes" and key in data:
            kwargs[key] = None  # explicit null keeps every object class
    for name, cls in _SECTIONS.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ValidationError(f"config section {name!r} must be an object")
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(section) - fields)
        if unknown:
            raise ValidationError(f"unknown keys in config section {name!r}: {', '.join(unknown)}")
        try:
            kwargs[name] = cls(**section)
        except TypeError as exc:
            raise ValidationError(f"bad config section {name!r}: {exc}") from exc
    return PipelineConfig(**kwargs)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


def save_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n", encoding="utf-8")
