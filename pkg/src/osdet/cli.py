"""Command-line interface.

Subcommands:
  synth      generate a synthetic annotation + proposal-dump pair
  partition  split proposals into training sample groups
  loss       evaluate the confidence and suppression losses on sample groups
  gbd        graph-based box determination (or the NMS baseline) per image
  pretest    derive the gamma and epsilon thresholds from a pretest set
  detect     run the full known/unknown pipeline over a proposal dump
  evaluate   score detection results against annotations, with figures

Reports embed the resolved configuration so every output file is
self-describing. Exit code 0 on success, 1 on validation or metric errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import PipelineConfig, load_config
from .energy import EnergyModel, l_suppression, negative_energies, select_lowest_t
from .formats import (
    AnnotationSet,
    DetectionSet,
    FormatError,
    ImageAnnotations,
    ImageDetections,
    ImageGocSamples,
    ImageProposals,
    ProposalDump,
    load_annotations,
    load_detections,
    load_dump,
    load_goc_samples,
    save_annotations,
    save_detections,
    save_dump,
    save_goc_samples,
)
from .gbd import build_graph, nms_baseline, recursive_partition, select_top
from .geometry import area, iou
from .goc_loss import l_con, l_neg, l_pos
from .inference import (
    CandidateRule,
    DetectionResult,
    EPSILON_GRID,
    UnknownDetection,
    pretest_epsilon,
    pretest_gamma,
    run_pipeline,
    select_candidates,
)
from .metrics import (
    MAP_THRESHOLDS,
    MetricsReport,
    aose,
    average_precision,
    map_by_threshold,
    pooled_unknown_flags,
    precision_recall_f1,
    wilderness_impact,
)
from .sampling import partition_samples
from .synth import SyntheticSceneSpec, generate_dataset

METRICS_REPORT_SCHEMA = "osdet/metrics-report"
LOSS_REPORT_SCHEMA = "osdet/loss-report"
PRETEST_SCHEMA = "osdet/pretest-thresholds"


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _map_images(fn, items: Sequence, jobs: Optional[int]) -> list:
    if jobs and jobs > 1:
        chunk = max(1, len(items) // (jobs * 4) or 1)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items, chunksize=chunk))
    return [fn(item) for item in items]


def _annotations_by_id(annotations: AnnotationSet) -> dict:
    return {img.image_id: img for img in annotations.images}


def _delimiter(fmt: str) -> str:
    return "\t" if fmt == "tsv" else ","


def _write_table(path: Path, rows: Sequence[Sequence], fmt: str):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, delimiter=_delimiter(fmt))
        writer.writerows(rows)


# ---------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    spec = SyntheticSceneSpec.from_file(args.spec) if args.spec else SyntheticSceneSpec()
    if args.seed is not None:
        spec.seed = args.seed
    if args.image_count is not None:
        spec.image_count = args.image_count
    annotations, dump = generate_dataset(spec)
    save_annotations(annotations, args.out_annotations)
    save_dump(dump, args.out_dump)
    n_objects = sum(len(img.instances) for img in annotations.images)
    n_proposals = sum(len(img.boxes) for img in dump.images)
    print(
        f"generated {spec.image_count} images, {n_objects} objects, "
        f"{n_proposals} proposals (seed {spec.seed})"
    )
    return 0


# ------------------------------------------------------------ partition


def _partition_image(
    img: ImageProposals,
    ann: ImageAnnotations,
    cfg: PipelineConfig,
    model: EnergyModel,
) -> ImageGocSamples:
    groups = partition_samples(img.boxes, ann.instances, cfg.partition_config())
    report = []
    pos_groups, con_groups, neg_groups = [], [], []
    for entry in groups.per_gt:
        gt = ann.instances[entry.gt_index]
        report.append(
            {
                "gt_index": entry.gt_index,
                "gt_label": gt.label,
                "complete": entry.complete,
                "partial": entry.partial,
                "oversized": entry.oversized,
                "non_object": entry.non_object,
                "unassigned": entry.unassigned,
            }
        )
        if entry.complete:
            pos_groups.append([float(img.goc[i]) for i in entry.complete])
            con_groups.append(
                [(float(img.goc[i]), iou(img.boxes[i], gt.box)) for i in entry.complete]
            )
        po = entry.partial_or_oversized()
        if po:
            neg_groups.append([float(img.goc[i]) for i in po])
    ne = negative_energies(img.logits, model) if len(img.boxes) else np.zeros(0)
    return ImageGocSamples(
        image_id=img.image_id,
        pos_groups=pos_groups,
        con_groups=con_groups,
        neg_groups=neg_groups,
        negative_energies=[float(v) for v in ne],
        groups_report=report,
    )


def cmd_partition(args) -> int:
    cfg = load_config(args.config).apply_overrides(e1=args.e1, e2=args.e2, rho=args.rho)
    dump = load_dump(args.dump)
    annotations = load_annotations(args.annotations)
    if annotations.num_classes != dump.num_classes:
        return _fail(
            f"annotation classes ({annotations.num_classes}) != "
            f"dump classes ({dump.num_classes})"
        )
    by_id = _annotations_by_id(annotations)
    model = cfg.energy_model(dump.num_classes)
    out = []
    for img in dump.images:
        ann = by_id.get(img.image_id)
        if ann is None:
            return _fail(f"no annotations for image {img.image_id!r}")
        if not ann.instances:
            return _fail(
                f"image {img.image_id!r} has no ground-truth instances; "
                "the sample partition is undefined"
            )
        out.append(_partition_image(img, ann, cfg, model))
    save_goc_samples(out, args.out)
    n_complete = sum(len(g) for img in out for g in img.pos_groups)
    n_po = sum(len(g) for img in out for g in img.neg_groups)
    print(
        f"partitioned {len(out)} images: {n_complete} complete, "
        f"{n_po} partial/oversized samples -> {args.out}"
    )
    return 0


# ----------------------------------------------------------------- loss


def _mean_or_none(values: list) -> Optional[float]:
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else None


def cmd_loss(args) -> int:
    cfg = load_config(args.config).apply_overrides(
        delta=args.delta,
        zeta=args.zeta,
        t_lowest=args.t,
        con_normalization=args.con_normalization,
    )
    gcfg = cfg.goc_config()
    samples = load_goc_samples(args.samples)
    per_image = []
    grad_records = []
    for img in samples:
        try:
            pos = con = None
            pos_g = con_g = None
            if img.pos_groups:
                pos, pos_g = l_pos(img.pos_groups)
            if img.con_groups:
                con, con_g = l_con(img.con_groups, gcfg.zeta, gcfg.con_normalization)
            neg, neg_g = l_neg(img.neg_groups, gcfg.delta)
            total = pos + neg + con if pos is not None and con is not None else None
            suppression = None
            selected = []
            supp_grad = []
            if img.negative_energies:
                ne = np.asarray(img.negative_energies)
                selected = select_lowest_t(ne, cfg.t_lowest)
                suppression, grad_e = l_suppression(-ne[selected])
                supp_grad = [float(v) for v in grad_e]
        except ValueError as exc:
            return _fail(f"image {img.image_id!r}: {exc}")
        per_image.append(
            {
                "image_id": img.image_id,
                "l_pos": pos,
                "l_neg": neg,
                "l_con": con,
                "l_goc": total,
                "l_suppression": suppression,
            }
        )
        if args.grad_out:
            grad_records.append(
                {
                    "image_id": img.image_id,
                    "pos_grads": [[float(v) for v in g] for g in (pos_g or [])],
                    "neg_grads": [[float(v) for v in g] for g in neg_g],
                    "con_grads": [[float(v) for v in g] for g in (con_g or [])],
                    "suppression": {
                        "selected": [int(i) for i in selected],
                        "d_loss_d_energy": supp_grad,
                    },
                }
            )
    aggregate = {
        key: _mean_or_none([row[key] for row in per_image])
        for key in ("l_pos", "l_neg", "l_con", "l_goc", "l_suppression")
    }
    report = {
        "schema": LOSS_REPORT_SCHEMA,
        "version": 1,
        "config": cfg.to_dict(),
        "per_image": per_image,
        "aggregate": aggregate,
    }
    Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    if args.grad_out:
        with Path(args.grad_out).open("w") as fh:
            for rec in grad_records:
                fh.write(json.dumps(rec) + "\n")
    for key, value in aggregate.items():
        print(f"{key}: " + (f"{value:.6f}" if value is not None else "n/a"))
    return 0


# ------------------------------------------------------------------ gbd


def _candidate_indices(img: ImageProposals, rule: CandidateRule) -> np.ndarray:
    cand = select_candidates(img.goc, rule)
    return np.array([i for i in cand if area(img.boxes[i]) > 0], dtype=int)


def _gbd_image(
    img: ImageProposals,
    rule: CandidateRule,
    epsilon: float,
    baseline: Optional[str],
    nms_iou: float,
    top_k: Optional[int],
) -> ImageDetections:
    cand = _candidate_indices(img, rule)
    unknown: list[UnknownDetection] = []
    if cand.size:
        boxes = [img.boxes[i] for i in cand]
        scores = img.goc[cand]
        if baseline == "nms":
            kept = nms_baseline(boxes, scores, nms_iou)
            if top_k is not None:
                kept = kept[:top_k]
        else:
            graph = build_graph(boxes)
            kept = select_top(recursive_partition(graph, epsilon), scores)
        unknown = [
            UnknownDetection(box=boxes[i], goc=float(scores[i])) for i in kept
        ]
    return ImageDetections(
        image_id=img.image_id, result=DetectionResult(known=[], unknown=unknown)
    )


def cmd_gbd(args) -> int:
    cfg = load_config(args.config).apply_overrides(
        epsilon=args.epsilon,
        candidate_rule=args.candidate_rule,
        candidate_k=args.candidate_k,
        candidate_tau=args.candidate_tau,
    )
    dump = load_dump(args.dump)
    rule = cfg.inference_config().candidate_rule
    worker = partial(
        _gbd_image,
        rule=rule,
        epsilon=cfg.epsilon,
        baseline=args.baseline,
        nms_iou=args.nms_iou if args.nms_iou is not None else cfg.known_nms_iou,
        top_k=args.top_k,
    )
    images = _map_images(worker, dump.images, args.jobs)
    save_detections(DetectionSet(num_classes=dump.num_classes, images=images), args.out)
    n_boxes = sum(len(img.result.unknown) for img in images)
    mode = "nms baseline" if args.baseline == "nms" else f"ncut (epsilon={cfg.epsilon})"
    print(f"selected {n_boxes} boxes over {len(images)} images with {mode} -> {args.out}")
    return 0


# -------------------------------------------------------------- pretest


def _epsilon_metric(
    epsilon: float,
    images: Sequence[tuple[ImageProposals, list]],
    rule: CandidateRule,
    iou_threshold: float,
) -> float:
    """Class-agnostic AP of the boxes the graph scheme selects, at one epsilon."""
    rows = []
    for img, gt_boxes in images:
        cand = _candidate_indices(img, rule)
        if cand.size:
            boxes = [img.boxes[i] for i in cand]
            scores = img.goc[cand]
            winners = select_top(
                recursive_partition(build_graph(boxes), epsilon), scores
            )
            rows.append(
                ([boxes[i] for i in winners], scores[winners], gt_boxes)
            )
        else:
            rows.append(([], np.zeros(0), gt_boxes))
    _, flags, total_gt = pooled_unknown_flags(rows, iou_threshold)
    if total_gt == 0:
        raise ValueError("pretest annotations contain no objects")
    return average_precision(flags, total_gt)


def cmd_pretest(args) -> int:
    cfg = load_config(args.config).apply_overrides(
        candidate_rule=args.candidate_rule,
        candidate_k=args.candidate_k,
        candidate_tau=args.candidate_tau,
    )
    dump = load_dump(args.dump)
    annotations = load_annotations(args.annotations)
    by_id = _annotations_by_id(annotations)
    missing = [img.image_id for img in dump.images if img.image_id not in by_id]
    if missing:
        return _fail(f"no annotations for images {missing[:3]}")
    energies = np.concatenate(
        [
            negative_energies(img.logits, cfg.energy_model(dump.num_classes))
            for img in dump.images
            if len(img.boxes)
        ]
        or [np.zeros(0)]
    )
    if energies.size == 0:
        return _fail("pretest dump contains no proposals")
    gamma = pretest_gamma(energies, fraction=args.fraction)
    images = [
        (img, [g.box for g in by_id[img.image_id].instances]) for img in dump.images
    ]
    rule = cfg.inference_config().candidate_rule
    metric = partial(_epsilon_metric, rule=rule, iou_threshold=cfg.iou_threshold)
    epsilon, curve = pretest_epsilon(images, lambda e, ims: metric(e, ims))

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = {
        "schema": PRETEST_SCHEMA,
        "version": 1,
        "gamma": gamma,
        "epsilon": epsilon,
        "epsilon_grid": [float(e) for e in EPSILON_GRID],
        "epsilon_ap": curve,
        "config": cfg.to_dict(),
    }
    (out_dir / "thresholds.json").write_text(json.dumps(result, indent=2) + "\n")
    _write_table(
        out_dir / f"epsilon_ap.{args.format}",
        [("epsilon", "known_ap")] + list(zip(EPSILON_GRID, curve)),
        args.format,
    )
    if not args.no_figures:
        from .plots import save_threshold_curve

        save_threshold_curve(
            EPSILON_GRID,
            curve,
            out_dir / "epsilon_ap.png",
            xlabel="ncut threshold",
            ylabel="known AP",
            title="Pretest threshold selection",
            marker_at=epsilon,
        )
    print(f"gamma: {gamma:.6f}")
    print(f"epsilon: {epsilon:.1f} (AP {max(curve):.4f})")
    return 0


# --------------------------------------------------------------- detect


def _detect_image(
    img: ImageProposals, model: EnergyModel, config
) -> ImageDetections:
    result = run_pipeline(img.boxes, img.goc, img.logits, model, config)
    return ImageDetections(image_id=img.image_id, result=result)


def cmd_detect(args) -> int:
    cfg = load_config(args.config).apply_overrides(
        gamma=args.gamma,
        beta=args.beta,
        epsilon=args.epsilon,
        candidate_rule=args.candidate_rule,
        candidate_k=args.candidate_k,
        candidate_tau=args.candidate_tau,
        known_score_threshold=args.known_score_threshold,
    )
    dump = load_dump(args.dump)
    model = cfg.energy_model(dump.num_classes)
    worker = partial(_detect_image, model=model, config=cfg.inference_config())
    images = _map_images(worker, dump.images, args.jobs)
    save_detections(DetectionSet(num_classes=dump.num_classes, images=images), args.out)
    n_known = sum(len(img.result.known) for img in images)
    n_unknown = sum(len(img.result.unknown) for img in images)
    print(
        f"detected {n_known} known / {n_unknown} unknown boxes "
        f"over {len(images)} images -> {args.out}"
    )
    return 0


# ------------------------------------------------------------- evaluate


def build_metrics_report(
    detections: DetectionSet, annotations: AnnotationSet, cfg: PipelineConfig
) -> tuple[MetricsReport, dict]:
    """Aggregate all metrics; returns the report plus plot-ready series."""
    num_classes = annotations.num_classes
    det_by_id = {img.image_id: img.result for img in detections.images}
    extra = set(det_by_id) - {img.image_id for img in annotations.images}
    if extra:
        raise ValueError(f"results contain unannotated images: {sorted(extra)[:3]}")

    unknown_rows = []
    known_rows = []
    wi_rows = []
    total_aose = 0
    for ann in annotations.images:
        result = det_by_id.get(ann.image_id, DetectionResult())
        known_gt = ann.known_instances(num_classes)
        unknown_gt = ann.unknown_instances(num_classes)
        u_boxes = [d.box for d in result.unknown]
        u_scores = np.array([d.goc for d in result.unknown], dtype=float)
        k_boxes = [d.box for d in result.known]
        k_labels = [d.label for d in result.known]
        k_scores = np.array([d.score for d in result.known], dtype=float)
        g_boxes = [g.box for g in known_gt]
        g_labels = [g.label for g in known_gt]
        u_gt_boxes = [g.box for g in unknown_gt]
        unknown_rows.append((u_boxes, u_scores, u_gt_boxes))
        known_rows.append((k_boxes, k_labels, k_scores, g_boxes, g_labels))
        wi_rows.append((k_boxes, k_labels, k_scores, g_boxes, g_labels, u_gt_boxes))
        total_aose += aose(k_boxes, k_scores, u_gt_boxes, cfg.iou_threshold)

    report = MetricsReport(aose=total_aose)
    series: dict = {}

    _, u_flags, u_total_gt = pooled_unknown_flags(unknown_rows, cfg.iou_threshold)
    if u_total_gt > 0:
        report.u_ap = average_precision(u_flags, u_total_gt, cfg.ap_method)
        tp = int(u_flags.sum())
        fp = int(u_flags.size - tp)
        fn = u_total_gt - tp
        report.u_pre, report.u_rec, report.u_f1 = precision_recall_f1(tp, fp, fn)
        if report.u_pre is None:
            report.notes.append("u_pre/u_f1 undefined: no unknown predictions")
        if u_flags.size:
            cum_tp = np.cumsum(u_flags)
            series["unknown_pr"] = (
                cum_tp / u_total_gt,
                cum_tp / np.arange(1, u_flags.size + 1),
            )
    else:
        report.notes.append("unknown metrics undefined: no unknown ground truth")

    has_known_gt = any(rows[3] for rows in known_rows)
    if has_known_gt:
        by_threshold = map_by_threshold(known_rows, MAP_THRESHOLDS, cfg.ap_method)
        report.map = float(np.mean(by_threshold))
        series["known_ap_by_iou"] = (list(MAP_THRESHOLDS), by_threshold)
        try:
            report.wi = wilderness_impact(wi_rows, cfg.recall_level, cfg.iou_threshold)
        except ValueError as exc:
            report.notes.append(f"wi undefined: {exc}")
    else:
        report.notes.append("map/wi undefined: no known ground truth")
    return report, series


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config).apply_overrides(
        iou_threshold=args.iou_threshold,
        recall_level=args.recall_level,
        ap_method=args.ap_method,
    )
    detections = load_detections(args.results)
    annotations = load_annotations(args.annotations)
    if detections.num_classes != annotations.num_classes:
        return _fail(
            f"results classes ({detections.num_classes}) != "
            f"annotation classes ({annotations.num_classes})"
        )
    report, series = build_metrics_report(detections, annotations, cfg)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema": METRICS_REPORT_SCHEMA,
        "version": 1,
        "config": cfg.to_dict(),
        "metrics": report.to_dict(),
    }
    (out_dir / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n")
    rows = [("metric", "value")] + [
        (key, "" if value is None else value)
        for key, value in report.to_dict().items()
        if key != "notes"
    ]
    _write_table(out_dir / f"metrics.{args.format}", rows, args.format)

    if "unknown_pr" in series:
        recall, precision = series["unknown_pr"]
        _write_table(
            out_dir / f"unknown_pr_curve.{args.format}",
            [("recall", "precision")] + list(zip(recall, precision)),
            args.format,
        )
    if "known_ap_by_iou" in series:
        thresholds, aps = series["known_ap_by_iou"]
        _write_table(
            out_dir / f"known_ap_by_iou.{args.format}",
            [("iou_threshold", "ap")] + list(zip(thresholds, aps)),
            args.format,
        )
    if not args.no_figures:
        from .plots import save_pr_curve, save_threshold_curve

        if "unknown_pr" in series:
            recall, precision = series["unknown_pr"]
            save_pr_curve(recall, precision, out_dir / "unknown_pr_curve.png")
        if "known_ap_by_iou" in series:
            thresholds, aps = series["known_ap_by_iou"]
            save_threshold_curve(
                thresholds,
                aps,
                out_dir / "known_ap_by_iou.png",
                xlabel="IoU threshold",
                ylabel="mean AP",
                title="Known AP across IoU thresholds",
            )

    for key, value in report.to_dict().items():
        if key == "notes":
            continue
        if value is None:
            print(f"{key}: n/a")
        elif isinstance(value, int):
            print(f"{key}: {value}")
        else:
            print(f"{key}: {value:.6f}")
    for note in report.notes:
        print(f"note: {note}")
    return 0


# ----------------------------------------------------------------- main


def _add_config_arg(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file with threshold overrides")


def _add_candidate_args(p: argparse.ArgumentParser):
    p.add_argument(
        "--candidate-rule", choices=["top_k", "goc_at_least"], default=None
    )
    p.add_argument("--candidate-k", type=int, default=None)
    p.add_argument("--candidate-tau", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osdet",
        description="Post-processing, losses, and evaluation for open-set detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene dataset")
    p.add_argument("--spec", help="JSON scene spec (defaults used when omitted)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--image-count", type=int, default=None)
    p.add_argument("--out-annotations", required=True)
    p.add_argument("--out-dump", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("partition", help="split proposals into sample groups")
    _add_config_arg(p)
    p.add_argument("--dump", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--e1", type=float, default=None)
    p.add_argument("--e2", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("loss", help="evaluate losses on partitioned samples")
    _add_config_arg(p)
    p.add_argument("--samples", required=True, help="output of the partition command")
    p.add_argument("--out", required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--zeta", type=float, default=None)
    p.add_argument("--t", type=int, default=None, help="suppression proposal count")
    p.add_argument(
        "--con-normalization", choices=["literal_floor", "pairwise_mean"], default=None
    )
    p.add_argument("--grad-out", help="optional JSONL gradient dump")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("gbd", help="graph-based box determination per image")
    _add_config_arg(p)
    p.add_argument("--dump", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epsilon", type=float, default=None)
    _add_candidate_args(p)
    p.add_argument("--baseline", choices=["nms"], default=None)
    p.add_argument("--nms-iou", type=float, default=None)
    p.add_argument("--top-k", type=int, default=None, help="cap kept boxes (baseline)")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_gbd)

    p = sub.add_parser("pretest", help="derive gamma and epsilon thresholds")
    _add_config_arg(p)
    p.add_argument("--dump", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument(
        "--fraction",
        type=float,
        default=0.95,
        help="fraction of proposals that must exceed gamma",
    )
    _add_candidate_args(p)
    p.add_argument("--format", choices=["csv", "tsv"], default="csv")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_pretest)

    p = sub.add_parser("detect", help="run the full pipeline over a dump")
    _add_config_arg(p)
    p.add_argument("--dump", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--known-score-threshold", type=float, default=None)
    _add_candidate_args(p)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="score detections against annotations")
    _add_config_arg(p)
    p.add_argument("--results", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--iou-threshold", type=float, default=None)
    p.add_argument("--recall-level", type=float, default=None)
    p.add_argument("--ap-method", choices=["all_point", "eleven_point"], default=None)
    p.add_argument("--format", choices=["csv", "tsv"], default="csv")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, ValueError, RuntimeError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
