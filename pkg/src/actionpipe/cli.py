"""Command-line driver wiring the pipeline end to end.

Subcommands: propose, label, finalize, score, synth, loss-oracle.  Every
threshold can be set in the JSON config and overridden per run; reruns with
the same config and seed produce byte-identical outputs.  Exit codes:
0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import labeling
from .clustering import propose_video
from .config import PipelineConfig, load_config
from .ingest import (
    ScoreRecord,
    ValidationError,
    ensure_path,
    load_detections,
    load_ground_truth,
    load_scores,
    load_video_meta,
)
from .jitter import jitter_proposals
from .nms import ScoredDetection, load_final_detections, nms_3d, write_final_detections
from .proposals import PROVENANCE_CLUSTERING, Proposal, load_proposals, write_proposals
from .refine import LossParams, apply_refinement, cross_entropy, full_loss, localization_loss
from .scoring import aggregate_det_curve, mean_pmiss_at, per_class_det_curves
from .synth import SCENARIOS, generate_fixture


def _propose_one(args) -> list[Proposal]:
    detections, meta, cluster_params, jitter_params = args
    clustered = propose_video(detections, meta, cluster_params)
    return jitter_proposals(clustered, jitter_params, meta)


def cmd_propose(cfg: PipelineConfig, jobs: int = 1) -> dict:
    videos = load_video_meta(ensure_path(cfg.videos))
    detections = load_detections(ensure_path(cfg.detections), videos, cfg.min_confidence, cfg.object_classes)
    tasks = [(dets, videos[vid], cfg.cluster, cfg.jitter) for vid, dets in detections.items()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_video = list(pool.map(_propose_one, tasks))
    else:
        per_video = [_propose_one(t) for t in tasks]
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out_path = cfg.output_dir / "proposals.jsonl"
    merged: list[Proposal] = []
    counts = {}
    for vid, props in zip(detections.keys(), per_video):
        clustered = sum(p.provenance == PROVENANCE_CLUSTERING for p in props)
        counts[vid] = {"clustering": clustered, "jittering": len(props) - clustered}
        merged.extend(props)
    write_proposals(out_path, merged)
    for vid, c in counts.items():
        print(f"{vid}: {c['clustering']} clustering + {c['jittering']} jittered proposals")
    print(f"wrote {len(merged)} proposals to {out_path}")
    return {"path": out_path, "counts": counts, "total": len(merged)}


def cmd_label(cfg: PipelineConfig) -> dict:
    videos = load_video_meta(ensure_path(cfg.videos))
    gts = load_ground_truth(ensure_path(cfg.ground_truth), videos, cfg.action_classes)
    proposals = load_proposals(ensure_path(cfg.output_dir / "proposals.jsonl"))
    labeled = labeling.designate_all(proposals, gts, cfg.labeling)
    counts = labeling.designation_counts(labeled)
    training = labeling.select_training_set(labeled)
    balanced = labeling.balance_classes(training)
    out_path = cfg.output_dir / "labels.jsonl"
    labeling.write_training_manifest(out_path, balanced)
    print("designations: " + "  ".join(f"{k}={v}" for k, v in counts.items()))
    per_class: dict[str, int] = {}
    for lp in balanced:
        if lp.designation == labeling.POSITIVE:
            per_class[lp.action_class] = per_class.get(lp.action_class, 0) + 1
    print(f"training set: {len(training)} selected, {len(balanced)} after balancing")
    if per_class:
        print("positives per class: " + "  ".join(f"{k}={v}" for k, v in sorted(per_class.items())))
    print(f"wrote training manifest to {out_path}")
    return {"path": out_path, "counts": counts, "training": len(training), "balanced": len(balanced)}


def _to_detection(prop: Proposal, record: ScoreRecord, cls: int) -> ScoredDetection:
    refined, _ = apply_refinement(prop.cuboid, record.refinement)
    return ScoredDetection(
        video_id=prop.video_id,
        proposal_id=prop.proposal_id,
        action_class=cls,
        confidence=record.class_scores[cls],
        cuboid=refined,
    )


def cmd_finalize(cfg: PipelineConfig, multi_label: bool = False, min_class_score: float = 0.05) -> dict:
    if cfg.scores is None:
        raise ValidationError("config has no scores path; finalize needs classifier scores")
    scores = load_scores(ensure_path(cfg.scores), num_classes=len(cfg.action_classes))
    proposals = load_proposals(ensure_path(cfg.output_dir / "proposals.jsonl"))
    by_video: dict[str, list[ScoredDetection]] = {}
    for prop in proposals:
        record = scores.get(prop.proposal_id)
        if record is None:
            raise ValidationError(f"no score record for proposal {prop.proposal_id!r}")
        if multi_label:
            for cls in range(1, len(record.class_scores)):
                if record.class_scores[cls] >= min_class_score:
                    by_video.setdefault(prop.video_id, []).append(_to_detection(prop, record, cls))
        else:
            cls = record.argmax_class
            if cls == 0:
                continue
            by_video.setdefault(prop.video_id, []).append(_to_detection(prop, record, cls))
    final: list[ScoredDetection] = []
    for vid in sorted(by_video):
        final.extend(nms_3d(by_video[vid], cfg.nms))
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out_path = cfg.output_dir / "detections_final.jsonl"
    write_final_detections(out_path, final, cfg.action_classes)
    print(f"wrote {len(final)} final detections to {out_path}")
    return {"path": out_path, "total": len(final)}


def cmd_score(cfg: PipelineConfig) -> dict:
    videos = load_video_meta(ensure_path(cfg.videos))
    gts_by_video = load_ground_truth(ensure_path(cfg.ground_truth), videos, cfg.action_classes)
    gts = [gt for group in gts_by_video.values() for gt in group]
    dets = load_final_detections(ensure_path(cfg.output_dir / "detections_final.jsonl"), cfg.action_classes)
    minutes = sum(meta.minutes for meta in videos.values())
    curves = per_class_det_curves(dets, gts, minutes, cfg.match, cfg.action_classes)
    if not curves:
        raise ValidationError("no action class has ground truth; nothing to score")
    aggregate = aggregate_det_curve(curves.values())
    report = {
        "video_minutes": minutes,
        "num_ground_truth": len(gts),
        "num_detections": len(dets),
        "rate_grid": list(cfg.rate_grid),
        "aggregate": {
            "mean_p_miss": mean_pmiss_at(aggregate, cfg.rate_grid),
            "points": [list(p) for p in aggregate.points],
        },
        "classes": {
            label: {
                "p_miss": mean_pmiss_at(curve, cfg.rate_grid),
                "points": [list(p) for p in curve.points],
            }
            for label, curve in curves.items()
        },
    }
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    report_path = cfg.output_dir / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    curve_dir = cfg.output_dir / "curves"
    curve_dir.mkdir(exist_ok=True)
    for label, curve in [("aggregate", aggregate)] + sorted(curves.items()):
        lines = ["# rate_fa p_miss"] + [f"{r:.6g} {p:.6g}" for r, p in curve.points]
        (curve_dir / f"{label}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("rate_fa:     " + "  ".join(f"{r:8.3g}" for r in cfg.rate_grid))
    print("mean p_miss: " + "  ".join(f"{p:8.3g}" for p in report["aggregate"]["mean_p_miss"]))
    print(f"wrote {report_path} and {len(curves) + 1} curve files under {curve_dir}")
    return {"path": report_path, "report": report}


def cmd_synth(output: Path, scenario: str, seed: int, num_videos: int) -> dict:
    summary = generate_fixture(output, scenario, seed, num_videos)
    print(
        f"fixture '{scenario}' seed={seed}: {summary['videos']} videos, "
        f"{summary['detections']} detections, {summary['ground_truth']} ground-truth actions, "
        f"{summary['proposals_scored']} proposals scored"
    )
    print(f"wrote fixture to {output}")
    return summary


def cmd_loss_oracle(input_path, output, loc_weight: float, num_classes: int) -> dict:
    """Evaluate loss queries so external trainers can check their math."""
    params = LossParams(loc_weight=loc_weight, num_classes=num_classes)
    results = []
    with open(ensure_path(input_path), "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                query = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{input_path}:{lineno}: malformed query: {exc}") from exc
            probs = query.get("class_scores")
            true_class = query.get("true_class")
            if not isinstance(probs, list) or not isinstance(true_class, int):
                raise ValidationError(f"{input_path}:{lineno}: need class_scores list and integer true_class")
            predicted = tuple(query["predicted"]) if "predicted" in query else None
            target = tuple(query["target"]) if "target" in query else None
            result = {"cross_entropy": cross_entropy(probs, true_class)}
            if predicted is not None and target is not None:
                result["localization_loss"] = localization_loss(predicted, target)
            else:
                result["localization_loss"] = None
            result["full_loss"] = full_loss(probs, true_class, predicted, target, params)
            results.append(result)
    stream = open(output, "w", encoding="utf-8") if output else sys.stdout
    try:
        for result in results:
            stream.write(json.dumps(result, sort_keys=True) + "\n")
    finally:
        if output:
            stream.close()
    return {"queries": len(results)}


def _override(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    """Apply per-flag overrides onto the loaded config."""
    if getattr(args, "output", None):
        cfg = dataclasses.replace(cfg, output_dir=Path(args.output))

    def section(cfg, name, mapping):
        updates = {
            field: getattr(args, attr)
            for field, attr in mapping.items()
            if getattr(args, attr, None) is not None
        }
        if updates:
            return dataclasses.replace(cfg, **{name: dataclasses.replace(getattr(cfg, name), **updates)})
        return cfg

    if getattr(args, "min_confidence", None) is not None:
        cfg = dataclasses.replace(cfg, min_confidence=args.min_confidence)
    cfg = section(cfg, "cluster", {
        "linkage": "linkage",
        "temporal_scale": "temporal_scale",
        "clusters_per_frame": "clusters_per_frame",
        "min_cluster_size": "min_cluster_size",
    })
    cfg = section(cfg, "jitter", {
        "stride": "stride",
        "half_windows": "half_windows",
        "min_span": "min_span",
    })
    if getattr(args, "no_clamp", False):
        cfg = dataclasses.replace(cfg, jitter=dataclasses.replace(cfg.jitter, clamp_to_video=False))
    if getattr(args, "include_end", False):
        cfg = dataclasses.replace(cfg, jitter=dataclasses.replace(cfg.jitter, include_end=True))
    cfg = section(cfg, "labeling", {
        "spatial_positive": "spatial_positive",
        "temporal_positive": "temporal_positive",
        "temporal_negative": "temporal_negative",
        "hard_temporal_low": "hard_temporal_low",
    })
    cfg = section(cfg, "nms", {
        "temporal_iou": "nms_temporal_iou",
        "spatial_iou": "nms_spatial_iou",
    })
    cfg = section(cfg, "match", {
        "temporal_iou": "match_temporal_iou",
        "spatial_iou": "match_spatial_iou",
    })
    if getattr(args, "rates", None) is not None:
        cfg = dataclasses.replace(cfg, rate_grid=tuple(args.rates))
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actionpipe",
        description="Turn per-frame object detections into scored spatio-temporal action detections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--output", help="override the config's output directory")

    p = sub.add_parser("propose", help="cluster detections and jitter into dense proposals")
    add_config(p)
    p.add_argument("--jobs", type=int, default=1, help="videos processed in parallel")
    p.add_argument("--min-confidence", dest="min_confidence", type=float, help="detection confidence floor")
    p.add_argument("--linkage", choices=("ward", "average", "single", "complete"))
    p.add_argument("--temporal-scale", dest="temporal_scale", type=float, help="frame-axis scale before distances")
    p.add_argument("--clusters-per-frame", dest="clusters_per_frame", type=float, help="cluster count per video frame")
    p.add_argument("--min-cluster-size", dest="min_cluster_size", type=int)
    p.add_argument("--stride", type=int, help="anchor stride in frames")
    p.add_argument("--half-windows", dest="half_windows", type=int, nargs="+", help="window half-extents in frames")
    p.add_argument("--min-span", dest="min_span", type=int, help="shortest surviving window, frames")
    p.add_argument("--no-clamp", dest="no_clamp", action="store_true", help="keep windows that cross video bounds")
    p.add_argument("--include-end", dest="include_end", action="store_true", help="always anchor on the last frame")

    p = sub.add_parser("label", help="designate proposals against ground truth and balance classes")
    add_config(p)
    p.add_argument("--spatial-positive", dest="spatial_positive", type=float)
    p.add_argument("--temporal-positive", dest="temporal_positive", type=float)
    p.add_argument("--temporal-negative", dest="temporal_negative", type=float)
    p.add_argument("--hard-temporal-low", dest="hard_temporal_low", type=float)

    p = sub.add_parser("finalize", help="join scores, refine bounds, filter non-action, run 3D-NMS")
    add_config(p)
    p.add_argument("--nms-temporal-iou", dest="nms_temporal_iou", type=float)
    p.add_argument("--nms-spatial-iou", dest="nms_spatial_iou", type=float)
    p.add_argument("--multi-label", dest="multi_label", action="store_true",
                   help="emit every action class above --min-class-score instead of the argmax")
    p.add_argument("--min-class-score", dest="min_class_score", type=float, default=0.05)

    p = sub.add_parser("score", help="DET curves and mean p_miss report")
    add_config(p)
    p.add_argument("--match-temporal-iou", dest="match_temporal_iou", type=float)
    p.add_argument("--match-spatial-iou", dest="match_spatial_iou", type=float)
    p.add_argument("--rates", type=float, nargs="+", help="rate_fa grid for the summary")

    p = sub.add_parser("synth", help="generate a synthetic fixture with oracle scores")
    p.add_argument("--output", required=True, help="fixture directory")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default="clean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--videos", type=int, default=10)

    p = sub.add_parser("loss-oracle", help="evaluate loss queries from a JSONL file")
    p.add_argument("--input", required=True, help="JSONL queries: class_scores, true_class, predicted?, target?")
    p.add_argument("--output", help="write results here instead of stdout")
    p.add_argument("--loc-weight", dest="loc_weight", type=float, default=0.25)
    p.add_argument("--num-classes", dest="num_classes", type=int, default=12)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            cmd_synth(Path(args.output), args.scenario, args.seed, args.videos)
        elif args.command == "loss-oracle":
            cmd_loss_oracle(args.input, args.output, args.loc_weight, args.num_classes)
        else:
            cfg = _override(load_config(args.config), args)
            if args.command == "propose":
                cmd_propose(cfg, jobs=args.jobs)
            elif args.command == "label":
                cmd_label(cfg)
            elif args.command == "finalize":
                cmd_finalize(cfg, args.multi_label, args.min_class_score)
            elif args.command == "score":
                cmd_score(cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
