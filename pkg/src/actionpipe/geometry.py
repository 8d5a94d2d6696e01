"""Cuboid geometry: spatial, temporal and 3-D overlap algebra.

A cuboid is an axis-aligned image rectangle swept over an inclusive frame
interval.  Spatial coordinates are continuous pixels; frame indices are
integers and both endpoints belong to the span, so [f, f] is one frame long.
All functions here are pure and safe for parallel use.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, replace
from typing import Iterable


@dataclass(frozen=True)
class Cuboid:
    """Axis-aligned spatio-temporal box (x_min, y_min, x_max, y_max, f_start, f_end)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    f_start: int
    f_end: int

    def __post_init__(self):
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "y_min", float(self.y_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "y_max", float(self.y_max))
        # operator.index accepts any integer type but rejects floats
        object.__setattr__(self, "f_start", operator.index(self.f_start))
        object.__setattr__(self, "f_end", operator.index(self.f_end))
        for name in ("x_min", "y_min", "x_max", "y_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite coordinate {name}={getattr(self, name)!r}")
        if not self.x_min < self.x_max:
            raise ValueError(f"empty x extent [{self.x_min}, {self.x_max}]")
        if not self.y_min < self.y_max:
            raise ValueError(f"empty y extent [{self.y_min}, {self.y_max}]")
        if self.f_start > self.f_end:
            raise ValueError(f"inverted frame span [{self.f_start}, {self.f_end}]")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def num_frames(self) -> int:
        return self.f_end - self.f_start + 1

    @property
    def volume(self) -> float:
        return self.area * self.num_frames

    @property
    def center_x(self) -> float:
        return (self.x_min + self.x_max) / 2.0

    @property
    def center_y(self) -> float:
        return (self.y_min + self.y_max) / 2.0

    @property
    def mid_frame(self) -> float:
        return (self.f_start + self.f_end) / 2.0


def spatial_iou(a: Cuboid, b: Cuboid) -> float:
    """Rectangle IoU of the two spatial boxes, ignoring frames."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def temporal_iou(a: Cuboid, b: Cuboid) -> float:
    """Frame-count IoU of the two temporal spans (inclusive bounds)."""
    inter = min(a.f_end, b.f_end) - max(a.f_start, b.f_start) + 1
    if inter <= 0:
        return 0.0
    return inter / (a.num_frames + b.num_frames - inter)


def iou_3d(a: Cuboid, b: Cuboid) -> float:
    """Volume IoU, volume being rectangle area times inclusive frame count.

    Reduces to temporal_iou when the spatial boxes coincide and to
    spatial_iou when the frame spans coincide.
    """
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    it = min(a.f_end, b.f_end) - max(a.f_start, b.f_start) + 1
    if ix <= 0.0 or iy <= 0.0 or it <= 0:
        return 0.0
    inter = ix * iy * it
    return inter / (a.volume + b.volume - inter)


def square_pad(c: Cuboid) -> Cuboid:
    """Pad the smaller spatial side about the center until width == height.

    Frames are untouched.  The output may extend outside image bounds; no
    clamping happens here.
    """
    if c.width == c.height:
        return c
    if c.width > c.height:
        half = c.width / 2.0
        return replace(c, y_min=c.center_y - half, y_max=c.center_y + half)
    half = c.height / 2.0
    return replace(c, x_min=c.center_x - half, x_max=c.center_x + half)


def bounding_cuboid(items: Iterable[Cuboid]) -> Cuboid:
    """Componentwise min/max envelope of a nonempty collection of cuboids."""
    items = list(items)
    if not items:
        raise ValueError("bounding_cuboid needs at least one cuboid")
    return Cuboid(
        x_min=min(c.x_min for c in items),
        y_min=min(c.y_min for c in items),
        x_max=max(c.x_max for c in items),
        y_max=max(c.y_max for c in items),
        f_start=min(c.f_start for c in items),
        f_end=max(c.f_end for c in items),
    )
