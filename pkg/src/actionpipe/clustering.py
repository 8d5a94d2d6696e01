"""Spatio-temporal clustering of per-frame detections into cuboid proposals.

Each detection becomes a 3-D feature (center x, center y, scaled frame).
An agglomerative linkage tree over those features is cut into k clusters,
k growing with video length, and every sufficiently large cluster is
bounded into one proposal cuboid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage as scipy_linkage

from .geometry import Cuboid
from .ingest import Detection, ValidationError, VideoMeta
from .proposals import PROVENANCE_CLUSTERING, Proposal

LINKAGE_METHODS = ("ward", "average", "single", "complete")


@dataclass(frozen=True)
class FeaturePoint:
    """Detection reduced to its box center and frame index."""

    x: float
    y: float
    f: int
    detection_ref: int  # index into the video's detection list


@dataclass(frozen=True)
class ClusterParams:
    linkage: str = "ward"
    temporal_scale: float = 1.0  # multiplier on the frame axis before distances
    clusters_per_frame: float = 0.028  # ~250 clusters for a 5-minute 30-fps video
    min_cluster_size: int = 1

    def __post_init__(self):
        if self.linkage not in LINKAGE_METHODS:
            raise ValidationError(f"linkage must be one of {LINKAGE_METHODS}, got {self.linkage!r}")
        if not self.temporal_scale > 0:
            raise ValidationError("temporal_scale must be positive")
        if not self.clusters_per_frame > 0:
            raise ValidationError("clusters_per_frame must be positive")
        if self.min_cluster_size < 1:
            raise ValidationError("min_cluster_size must be >= 1")


@dataclass(frozen=True, eq=False)
class LinkageTree:
    """Full agglomerative merge tree in scipy linkage-matrix form."""

    num_points: int
    merges: np.ndarray  # shape (num_points - 1, 4)


def detection_features(detections: Sequence[Detection]) -> list[FeaturePoint]:
    return [
        FeaturePoint(x=d.center_x, y=d.center_y, f=d.frame, detection_ref=i)
        for i, d in enumerate(detections)
    ]


def build_linkage(points: Sequence[FeaturePoint], params: ClusterParams) -> LinkageTree:
    """Agglomerative merge tree over (x, y, scale*f) with Euclidean distance."""
    if not points:
        raise ValidationError("cannot cluster an empty point set")
    if len(points) == 1:
        return LinkageTree(1, np.empty((0, 4)))
    feats = np.array([[p.x, p.y, params.temporal_scale * p.f] for p in points], dtype=np.float64)
    return LinkageTree(len(points), scipy_linkage(feats, method=params.linkage))


def cut_tree(tree: LinkageTree, k: int) -> list[list[int]]:
    """Partition the leaves into min(k, num_points) clusters.

    Replays the merge sequence so the cut at k+1 always refines the cut at
    k.  Clusters come back sorted by their smallest member index.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    n = tree.num_points
    k_eff = min(k, n)
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for i in range(n - k_eff):
        a = int(tree.merges[i, 0])
        b = int(tree.merges[i, 1])
        members[n + i] = members.pop(a) + members.pop(b)
    clusters = [sorted(m) for m in members.values()]
    clusters.sort(key=lambda c: c[0])
    return clusters


def num_clusters(num_frames: int, params: ClusterParams) -> int:
    """Cluster count proportional to video length, at least 1."""
    return max(1, math.ceil(params.clusters_per_frame * num_frames))


def clusters_to_proposals(
    partition: Sequence[Sequence[int]],
    detections: Sequence[Detection],
    video_meta: VideoMeta,
    params: ClusterParams,
) -> list[Proposal]:
    """One proposal per cluster of size >= min_cluster_size.

    The cuboid is the envelope of the member detection boxes over the member
    frames; smaller clusters are dropped.
    """
    out: list[Proposal] = []
    for cluster in partition:
        if len(cluster) < params.min_cluster_size:
            continue
        members = [detections[i] for i in cluster]
        cuboid = Cuboid(
            x_min=min(d.x_min for d in members),
            y_min=min(d.y_min for d in members),
            x_max=max(d.x_max for d in members),
            y_max=max(d.y_max for d in members),
            f_start=min(d.frame for d in members),
            f_end=max(d.frame for d in members),
        )
        out.append(Proposal(
            proposal_id=f"{video_meta.video_id}_c{len(out):04d}",
            video_id=video_meta.video_id,
            cuboid=cuboid,
            provenance=PROVENANCE_CLUSTERING,
        ))
    return out


def propose_video(
    detections: Sequence[Detection],
    video_meta: VideoMeta,
    params: ClusterParams,
) -> list[Proposal]:
    """Cluster one video's detections and bound each cluster into a proposal."""
    if not detections:
        return []
    points = detection_features(detections)
    tree = build_linkage(points, params)
    partition = cut_tree(tree, num_clusters(video_meta.num_frames, params))
    return clusters_to_proposals(partition, detections, video_meta, params)
