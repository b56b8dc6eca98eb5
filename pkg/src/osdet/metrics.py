"""Detection metrics for mixed known/unknown evaluation.

Matching follows the standard greedy protocol: predictions in descending
confidence order each claim the highest-IoU unmatched ground truth at or
above the IoU threshold. On top of that sit average precision (all-point
envelope integration, 11-point optional), the unknown precision/recall/F1
triple, the open-set error count, the wilderness impact ratio, and mAP
averaged over the 0.50:0.05:0.95 threshold grid.

Rates that are undefined (no predictions, no ground truth) are reported as
None rather than coerced to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import Box, boxes_to_array, iou_matrix

MAP_THRESHOLDS = tuple(np.round(np.arange(0.50, 0.951, 0.05), 2))


@dataclass
class MatchResult:
    """Greedy matching outcome, in descending-confidence prediction order."""

    order: np.ndarray  # original prediction indices, confidence-sorted
    tp: np.ndarray  # bool per sorted prediction
    matched_gt: np.ndarray  # GT index per sorted prediction, -1 for FP
    gt_matched: np.ndarray  # bool per GT
    num_gt: int
    iou_threshold: float


def match(
    pred_boxes: Sequence[Box],
    confidences: np.ndarray,
    gt_boxes: Sequence[Box],
    iou_threshold: float,
) -> MatchResult:
    """Greedily match predictions to ground truths at one IoU threshold.

    Each ground truth is matched at most once; ties on IoU go to the lower
    GT index, ties on confidence to the lower prediction index.
    """
    confidences = np.asarray(confidences, dtype=float).ravel()
    if len(pred_boxes) != confidences.size:
        raise ValueError("boxes and confidences must have equal length")
    order = np.argsort(-confidences, kind="stable")
    num_gt = len(gt_boxes)
    tp = np.zeros(order.size, dtype=bool)
    matched_gt = np.full(order.size, -1, dtype=int)
    gt_matched = np.zeros(num_gt, dtype=bool)
    if order.size and num_gt:
        ious = iou_matrix(boxes_to_array(pred_boxes), boxes_to_array(gt_boxes))
        for rank, p in enumerate(order):
            row = np.where(gt_matched, -1.0, ious[p])
            g = int(np.argmax(row))
            if row[g] >= iou_threshold:
                tp[rank] = True
                matched_gt[rank] = g
                gt_matched[g] = True
    return MatchResult(
        order=order,
        tp=tp,
        matched_gt=matched_gt,
        gt_matched=gt_matched,
        num_gt=num_gt,
        iou_threshold=iou_threshold,
    )


def average_precision(
    tp_sequence: np.ndarray, num_gt: int, method: str = "all_point"
) -> float:
    """Area under the precision-recall curve for a confidence-sorted TP/FP flag sequence."""
    if num_gt <= 0:
        raise ValueError("average precision undefined with no ground truth")
    tp = np.asarray(tp_sequence, dtype=bool).ravel()
    if tp.size == 0:
        return 0.0
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(~tp)
    recall = cum_tp / num_gt
    precision = cum_tp / (cum_tp + cum_fp)
    if method == "all_point":
        mrec = np.concatenate(([0.0], recall, [1.0]))
        mpre = np.concatenate(([0.0], precision, [0.0]))
        for i in range(mpre.size - 2, -1, -1):
            mpre[i] = max(mpre[i], mpre[i + 1])
        changed = np.nonzero(mrec[1:] != mrec[:-1])[0]
        return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))
    if method == "eleven_point":
        total = 0.0
        for t in np.linspace(0.0, 1.0, 11):
            mask = recall >= t
            total += float(precision[mask].max()) if mask.any() else 0.0
        return total / 11.0
    raise ValueError(f"unknown AP method: {method!r}")


def harmonic_f1(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def precision_recall_f1(
    tp: int, fp: int, fn: int
) -> tuple[Optional[float], Optional[float], Optional[float]]:
    """(precision, recall, f1) from raw counts; undefined rates come back as None."""
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be nonnegative")
    pre = tp / (tp + fp) if tp + fp > 0 else None
    rec = tp / (tp + fn) if tp + fn > 0 else None
    f1 = harmonic_f1(pre, rec) if pre is not None and rec is not None else None
    return pre, rec, f1


def aose(
    known_boxes: Sequence[Box],
    known_confidences: np.ndarray,
    unknown_gt_boxes: Sequence[Box],
    iou_threshold: float = 0.5,
) -> int:
    """Count of unknown ground-truth boxes claimed by known-class predictions."""
    if not unknown_gt_boxes:
        return 0
    result = match(known_boxes, known_confidences, unknown_gt_boxes, iou_threshold)
    return int(result.gt_matched.sum())


def _pooled_class_aware_flags(
    per_image: Sequence[tuple[Sequence[Box], Sequence[int], np.ndarray, Sequence[Box], Sequence[int]]],
    iou_threshold: float,
) -> tuple[np.ndarray, np.ndarray, list[tuple[int, int]], int]:
    """Class-aware matching pooled over images.

    Each element of per_image is (pred_boxes, pred_labels, confidences,
    gt_boxes, gt_labels). Returns confidence-sorted pooled (confidences, tp
    flags, (image, prediction) ids) plus the total GT count.
    """
    confs: list[float] = []
    flags: list[bool] = []
    ids: list[tuple[int, int]] = []
    total_gt = 0
    for img_idx, (pboxes, plabels, pconf, gboxes, glabels) in enumerate(per_image):
        pconf = np.asarray(pconf, dtype=float).ravel()
        plabels = list(plabels)
        glabels = list(glabels)
        total_gt += len(gboxes)
        for cls in sorted(set(plabels) | set(glabels)):
            p_idx = [i for i, l in enumerate(plabels) if l == cls]
            g_idx = [i for i, l in enumerate(glabels) if l == cls]
            res = match(
                [pboxes[i] for i in p_idx],
                pconf[p_idx],
                [gboxes[i] for i in g_idx],
                iou_threshold,
            )
            for rank, local in enumerate(res.order):
                confs.append(float(pconf[p_idx[local]]))
                flags.append(bool(res.tp[rank]))
                ids.append((img_idx, p_idx[local]))
    order = np.argsort(-np.asarray(confs), kind="stable")
    return (
        np.asarray(confs)[order],
        np.asarray(flags, dtype=bool)[order],
        [ids[i] for i in order],
        total_gt,
    )


def wilderness_impact(
    per_image: Sequence[
        tuple[Sequence[Box], Sequence[int], np.ndarray, Sequence[Box], Sequence[int], Sequence[Box]]
    ],
    recall_level: float = 0.8,
    iou_threshold: float = 0.5,
) -> float:
    """Closed-set precision over open-set precision minus one, at the first
    operating point whose known recall reaches recall_level.

    Each element of per_image is (pred_boxes, pred_labels, confidences,
    known_gt_boxes, known_gt_labels, unknown_gt_boxes). Known predictions
    that land on unknown ground truth count as false positives only in the
    open-set evaluation; the closed-set evaluation ignores them.
    """
    closed_rows = _pooled_class_aware_flags(
        [(p, pl, c, g, gl) for p, pl, c, g, gl, _ in per_image], iou_threshold
    )
    confs, tp_flags, ids, total_gt = closed_rows
    if total_gt == 0:
        raise ValueError("wilderness impact undefined with no known ground truth")

    # Flag non-TP predictions that claim an unknown ground truth (open-set errors).
    unknown_hit = np.zeros(tp_flags.size, dtype=bool)
    per_image_unknown = {i: list(row[5]) for i, row in enumerate(per_image)}
    taken: dict[int, np.ndarray] = {
        i: np.zeros(len(b), dtype=bool) for i, b in per_image_unknown.items()
    }
    for rank in range(tp_flags.size):
        if tp_flags[rank]:
            continue
        img, pred = ids[rank]
        u_boxes = per_image_unknown[img]
        if not u_boxes:
            continue
        pbox = per_image[img][0][pred]
        ious = iou_matrix(boxes_to_array([pbox]), boxes_to_array(u_boxes))[0]
        ious = np.where(taken[img], -1.0, ious)
        g = int(np.argmax(ious))
        if ious[g] >= iou_threshold:
            unknown_hit[rank] = True
            taken[img][g] = True

    def precision_at_recall(flags: np.ndarray) -> float:
        cum_tp = np.cumsum(flags)
        recall = cum_tp / total_gt
        reached = np.nonzero(recall >= recall_level)[0]
        if reached.size == 0:
            raise ValueError(
                f"recall level {recall_level} unreachable "
                f"(max recall {recall.max() if recall.size else 0.0:.3f})"
            )
        k = reached[0]
        return float(cum_tp[k] / (k + 1))

    p_open = precision_at_recall(tp_flags)
    p_closed = precision_at_recall(tp_flags[~unknown_hit])
    return p_closed / p_open - 1.0


def map_by_threshold(
    per_image: Sequence[tuple[Sequence[Box], Sequence[int], np.ndarray, Sequence[Box], Sequence[int]]],
    thresholds: Sequence[float] = MAP_THRESHOLDS,
    method: str = "all_point",
) -> list[float]:
    """Mean per-class AP at each IoU threshold.

    Classes with no ground truth anywhere are excluded from the class mean.
    """
    classes = sorted({l for _, _, _, _, gl in per_image for l in gl})
    if not classes:
        raise ValueError("mAP undefined with no ground truth")
    per_threshold = []
    for thr in thresholds:
        class_aps = []
        for cls in classes:
            confs: list[float] = []
            flags: list[bool] = []
            num_gt = 0
            for pboxes, plabels, pconf, gboxes, glabels in per_image:
                pconf = np.asarray(pconf, dtype=float).ravel()
                p_idx = [i for i, l in enumerate(plabels) if l == cls]
                g_idx = [i for i, l in enumerate(glabels) if l == cls]
                num_gt += len(g_idx)
                res = match(
                    [pboxes[i] for i in p_idx],
                    pconf[p_idx],
                    [gboxes[i] for i in g_idx],
                    thr,
                )
                confs.extend(float(pconf[p_idx[i]]) for i in res.order)
                flags.extend(bool(f) for f in res.tp)
            if num_gt == 0:
                continue
            order = np.argsort(-np.asarray(confs), kind="stable") if confs else []
            sorted_flags = np.asarray(flags, dtype=bool)[order] if confs else np.zeros(0, bool)
            class_aps.append(average_precision(sorted_flags, num_gt, method))
        per_threshold.append(float(np.mean(class_aps)))
    return per_threshold


def map_range(
    per_image: Sequence[tuple[Sequence[Box], Sequence[int], np.ndarray, Sequence[Box], Sequence[int]]],
    thresholds: Sequence[float] = MAP_THRESHOLDS,
    method: str = "all_point",
) -> float:
    """Mean over IoU thresholds of the mean per-class AP."""
    return float(np.mean(map_by_threshold(per_image, thresholds, method)))


@dataclass
class MetricsReport:
    """Aggregate metric values; None marks an undefined quantity."""

    map: Optional[float] = None
    u_ap: Optional[float] = None
    u_pre: Optional[float] = None
    u_rec: Optional[float] = None
    u_f1: Optional[float] = None
    aose: Optional[int] = None
    wi: Optional[float] = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "map": self.map,
            "u_ap": self.u_ap,
            "u_pre": self.u_pre,
            "u_rec": self.u_rec,
            "u_f1": self.u_f1,
            "aose": self.aose,
            "wi": self.wi,
            "notes": list(self.notes),
        }


def pooled_unknown_flags(
    per_image: Sequence[tuple[Sequence[Box], np.ndarray, Sequence[Box]]],
    iou_threshold: float = 0.5,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Class-blind pooled matching of unknown predictions against unknown GT.

    Each element is (pred_boxes, scores, gt_boxes). Returns pooled
    confidence-sorted (confidences, tp flags) and the total GT count.
    """
    confs: list[float] = []
    flags: list[bool] = []
    total_gt = 0
    for pboxes, scores, gboxes in per_image:
        scores = np.asarray(scores, dtype=float).ravel()
        total_gt += len(gboxes)
        res = match(pboxes, scores, gboxes, iou_threshold)
        confs.extend(float(scores[i]) for i in res.order)
        flags.extend(bool(f) for f in res.tp)
    if confs:
        order = np.argsort(-np.asarray(confs), kind="stable")
        return np.asarray(confs)[order], np.asarray(flags, dtype=bool)[order], total_gt
    return np.zeros(0), np.zeros(0, dtype=bool), total_gt
