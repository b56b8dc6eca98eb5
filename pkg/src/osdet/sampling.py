"""Training-sample partitioner for the generalized-object-confidence head.

Each proposal is assigned to the ground-truth instance it overlaps most
(argmax IoU, ties to the lowest GT index). Within each group the proposals
are split by overlap regime into complete / partial / oversized / non-object
sets; mid-band proposals that satisfy neither the IoP nor the IoC criterion
are left unassigned and excluded from all losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Box, areas, boxes_to_array, intersection_matrix, iou_matrix

UNKNOWN_LABEL_OFFSET = 1  # unknown sentinel is num_classes + 1


@dataclass(frozen=True)
class GroundTruthInstance:
    """A labeled box; label is a known class in 1..C or the unknown sentinel C+1."""

    box: Box
    label: int

    def __post_init__(self):
        if self.label < 1:
            raise ValueError(f"label must be >= 1, got {self.label}")
        if self.box.width <= 0 or self.box.height <= 0:
            raise ValueError("ground-truth box must have positive area")


@dataclass(frozen=True)
class PartitionConfig:
    """Overlap thresholds for the four-way sample split."""

    e1: float = 0.0
    e2: float = 0.5
    rho: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.e1 <= self.e2 <= 1.0):
            raise ValueError(f"need 0 <= e1 <= e2 <= 1, got e1={self.e1}, e2={self.e2}")
        if not (0.0 <= self.rho <= 1.0):
            raise ValueError(f"need 0 <= rho <= 1, got rho={self.rho}")


@dataclass
class GtSampleGroups:
    """Index sets for the proposals assigned to one ground-truth instance."""

    gt_index: int
    complete: list[int] = field(default_factory=list)
    partial: list[int] = field(default_factory=list)
    oversized: list[int] = field(default_factory=list)
    non_object: list[int] = field(default_factory=list)
    unassigned: list[int] = field(default_factory=list)

    def partial_or_oversized(self) -> list[int]:
        """Deduplicated union of the partial and oversized sets, sorted."""
        return sorted(set(self.partial) | set(self.oversized))


@dataclass
class SampleGroups:
    per_gt: list[GtSampleGroups]


def assign_to_gt(
    proposals: Sequence[Box], gts: Sequence[GroundTruthInstance]
) -> dict[int, list[int]]:
    """Assign every proposal to its max-IoU ground truth; ties to the lowest GT index."""
    if not gts:
        raise ValueError("cannot assign proposals: no ground-truth instances")
    groups: dict[int, list[int]] = {k: [] for k in range(len(gts))}
    if not proposals:
        return groups
    ious = iou_matrix(boxes_to_array(proposals), boxes_to_array(g.box for g in gts))
    best = np.argmax(ious, axis=1)  # first occurrence wins ties
    for i, k in enumerate(best):
        groups[int(k)].append(i)
    return groups


def _overlap_ratios(
    proposals: Sequence[Box], indices: Sequence[int], gt_box: Box
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    boxes = boxes_to_array(proposals[i] for i in indices)
    gt = boxes_to_array([gt_box])
    inter = intersection_matrix(boxes, gt)[:, 0]
    prop_areas = areas(boxes)
    gt_area = areas(gt)[0]
    union = prop_areas + gt_area - inter
    iou = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        iop = np.where(prop_areas > 0, inter / np.where(prop_areas > 0, prop_areas, 1.0), 0.0)
    ioc = inter / gt_area
    return iou, iop, ioc


def partition_group(
    proposals: Sequence[Box],
    indices: Sequence[int],
    gt: GroundTruthInstance,
    gt_index: int,
    cfg: PartitionConfig,
) -> GtSampleGroups:
    """Split one GT's proposal group by overlap regime.

    Callers must pass only indices produced by `assign_to_gt` for this GT.
    Membership rules, applied in order per proposal:
      complete    IoU >= e2
      non-object  IoU < e1, or IoU == 0 when e1 == 0
      partial     IoP >= rho   (mid band)
      oversized   IoC >= rho   (mid band; may overlap partial)
      unassigned  mid band with neither ratio criterion met
    """
    out = GtSampleGroups(gt_index=gt_index)
    if not indices:
        return out
    iou, iop, ioc = _overlap_ratios(proposals, indices, gt.box)
    for pos, idx in enumerate(indices):
        u, p, c = iou[pos], iop[pos], ioc[pos]
        if u >= cfg.e2:
            out.complete.append(idx)
        elif u < cfg.e1 or (cfg.e1 == 0.0 and u == 0.0):
            out.non_object.append(idx)
        else:
            hit = False
            if p >= cfg.rho:
                out.partial.append(idx)
                hit = True
            if c >= cfg.rho:
                out.oversized.append(idx)
                hit = True
            if not hit:
                out.unassigned.append(idx)
    return out


def partition_samples(
    proposals: Sequence[Box],
    gts: Sequence[GroundTruthInstance],
    cfg: PartitionConfig,
) -> SampleGroups:
    """Assign proposals to ground truths and split every group."""
    assignment = assign_to_gt(proposals, gts)
    per_gt = [
        partition_group(proposals, assignment[k], gts[k], k, cfg)
        for k in range(len(gts))
    ]
    return SampleGroups(per_gt=per_gt)
