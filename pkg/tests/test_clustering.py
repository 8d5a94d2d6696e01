import numpy as np
import pytest

from actionpipe.clustering import (
    ClusterParams,
    build_linkage,
    clusters_to_proposals,
    cut_tree,
    detection_features,
    num_clusters,
    propose_video,
)
from actionpipe.geometry import Cuboid
from actionpipe.ingest import Detection, ValidationError, VideoMeta

META = VideoMeta("v1", 1000, 30.0, 640, 480)


def det(x, y, frame, size=10.0):
    return Detection("v1", frame, "person", x - size / 2, y - size / 2, x + size / 2, y + size / 2, 0.9)


def points_of(dets):
    return detection_features(dets)


class TestParams:
    def test_defaults_valid(self):
        p = ClusterParams()
        assert p.linkage == "ward"

    def test_rejects_bad_values(self):
        with pytest.raises(ValidationError):
            ClusterParams(linkage="centroid")
        with pytest.raises(ValidationError):
            ClusterParams(temporal_scale=0.0)
        with pytest.raises(ValidationError):
            ClusterParams(clusters_per_frame=-1.0)
        with pytest.raises(ValidationError):
            ClusterParams(min_cluster_size=0)


class TestBuildLinkage:
    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            build_linkage([], ClusterParams())

    def test_single_point(self):
        tree = build_linkage(points_of([det(5, 5, 0)]), ClusterParams())
        assert tree.num_points == 1 and tree.merges.shape == (0, 4)

    def test_two_points_merge_at_scaled_distance(self):
        dets = [det(0, 0, 0), det(3, 4, 0)]
        tree = build_linkage(points_of(dets), ClusterParams())
        assert tree.merges.shape == (1, 4)
        assert tree.merges[0, 2] == pytest.approx(5.0)

    def test_temporal_scale_enters_distance(self):
        dets = [det(0, 0, 0), det(0, 0, 10)]
        tree = build_linkage(points_of(dets), ClusterParams(temporal_scale=0.5))
        assert tree.merges[0, 2] == pytest.approx(5.0)

    def test_two_pairs_top_split(self):
        # two tight pairs far apart: the last merge joins the pairs
        dets = [det(0, 0, 0), det(1, 0, 1), det(200, 200, 0), det(201, 200, 1)]
        tree = build_linkage(points_of(dets), ClusterParams())
        parts = cut_tree(tree, 2)
        assert parts == [[0, 1], [2, 3]]


class TestCutTree:
    def test_k_one_single_cluster(self):
        dets = [det(i * 3.0, 0, i) for i in range(5)]
        tree = build_linkage(points_of(dets), ClusterParams())
        assert cut_tree(tree, 1) == [list(range(5))]

    def test_k_at_least_points_gives_singletons(self):
        dets = [det(i * 3.0, 0, i) for i in range(4)]
        tree = build_linkage(points_of(dets), ClusterParams())
        assert cut_tree(tree, 4) == [[0], [1], [2], [3]]
        assert cut_tree(tree, 99) == [[0], [1], [2], [3]]

    def test_invalid_k(self):
        tree = build_linkage(points_of([det(0, 0, 0)]), ClusterParams())
        with pytest.raises(ValidationError):
            cut_tree(tree, 0)

    def test_partition_property(self):
        rng = np.random.default_rng(1)
        dets = [det(float(x), float(y), int(f)) for x, y, f in
                zip(rng.uniform(0, 600, 40), rng.uniform(0, 400, 40), rng.integers(0, 300, 40))]
        tree = build_linkage(points_of(dets), ClusterParams())
        for k in (1, 3, 7, 40):
            parts = cut_tree(tree, k)
            assert len(parts) == min(k, 40)
            flat = sorted(i for part in parts for i in part)
            assert flat == list(range(40))

    def test_cut_refinement_monotonicity(self):
        rng = np.random.default_rng(2)
        dets = [det(float(x), float(y), int(f)) for x, y, f in
                zip(rng.uniform(0, 600, 30), rng.uniform(0, 400, 30), rng.integers(0, 300, 30))]
        tree = build_linkage(points_of(dets), ClusterParams())
        for k in range(1, 30):
            coarse = [frozenset(c) for c in cut_tree(tree, k)]
            fine = cut_tree(tree, k + 1)
            for part in fine:
                assert any(frozenset(part) <= c for c in coarse)


class TestClustersToProposals:
    def test_single_detection_cluster(self):
        dets = [Detection("v1", 5, "person", 10, 10, 20, 20, 0.9)]
        props = clusters_to_proposals([[0]], dets, META, ClusterParams())
        assert len(props) == 1
        assert props[0].cuboid == Cuboid(10, 10, 20, 20, 5, 5)
        assert props[0].provenance == "clustering"

    def test_envelope_of_two(self):
        dets = [
            Detection("v1", 0, "person", 0, 0, 10, 10, 0.9),
            Detection("v1", 9, "person", 20, 20, 30, 30, 0.9),
        ]
        props = clusters_to_proposals([[0, 1]], dets, META, ClusterParams())
        assert props[0].cuboid == Cuboid(0, 0, 30, 30, 0, 9)

    def test_min_cluster_size_filters(self):
        dets = [det(0, 0, 0), det(1, 0, 1), det(100, 100, 50)]
        props = clusters_to_proposals([[0, 1], [2]], dets, META, ClusterParams(min_cluster_size=2))
        assert len(props) == 1 and props[0].cuboid.f_end == 1

    def test_members_contained(self):
        rng = np.random.default_rng(4)
        dets = [det(float(x), float(y), int(f)) for x, y, f in
                zip(rng.uniform(50, 600, 25), rng.uniform(50, 400, 25), rng.integers(0, 300, 25))]
        props = propose_video(dets, META, ClusterParams(clusters_per_frame=0.005))
        by_id = {p.proposal_id: p for p in props}
        tree = build_linkage(points_of(dets), ClusterParams(clusters_per_frame=0.005))
        parts = cut_tree(tree, num_clusters(META.num_frames, ClusterParams(clusters_per_frame=0.005)))
        for idx, part in enumerate(parts):
            cuboid = by_id[f"v1_c{idx:04d}"].cuboid
            for i in part:
                d = dets[i]
                assert cuboid.x_min <= d.x_min and cuboid.x_max >= d.x_max
                assert cuboid.f_start <= d.frame <= cuboid.f_end


class TestProposeVideo:
    def test_empty_detections(self):
        assert propose_video([], META, ClusterParams()) == []

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        dets = [det(float(x), float(y), int(f)) for x, y, f in
                zip(rng.uniform(0, 600, 60), rng.uniform(0, 400, 60), rng.integers(0, 900, 60))]
        a = propose_video(dets, META, ClusterParams())
        b = propose_video(list(dets), META, ClusterParams())
        assert a == b

    def test_cluster_count_scales_with_video_length(self):
        assert num_clusters(900, ClusterParams()) == 26
        assert num_clusters(9000, ClusterParams()) == 252
        assert num_clusters(1, ClusterParams()) == 1
