"""Loss kernels for the generalized object confidence (GOC) score.

Three components over per-ground-truth sample groups, each returned together
with its analytic gradient with respect to the per-proposal scores:

  pos  squared pull of complete-box scores towards one
  neg  hinge pushing partial/oversized scores below a ceiling delta
  con  contrastive hinge preferring higher scores for higher-IoU boxes

Gradients stop at the scores; backpropagation into a feature extractor is an
external trainer's job.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

CON_NORMALIZATIONS = ("literal_floor", "pairwise_mean")


@dataclass(frozen=True)
class GocSample:
    """One scored proposal: raw score, IoU to its ground truth, and group tag."""

    score: float
    iou_to_gt: float
    group_tag: str

    def __post_init__(self):
        if self.group_tag not in ("complete", "partial", "oversized"):
            raise ValueError(f"unknown group tag: {self.group_tag!r}")


@dataclass(frozen=True)
class GocLossConfig:
    delta: float = 0.5
    zeta: float = 0.01
    con_normalization: str = "literal_floor"

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.zeta <= 0:
            raise ValueError(f"zeta must be positive, got {self.zeta}")
        if self.con_normalization not in CON_NORMALIZATIONS:
            raise ValueError(f"unknown normalization: {self.con_normalization!r}")


def _as_group_arrays(groups: Sequence[Sequence[float]]) -> list[np.ndarray]:
    return [np.asarray(g, dtype=float) for g in groups]


def l_pos(groups: Sequence[Sequence[float]]) -> tuple[float, list[np.ndarray]]:
    """Mean squared distance of complete-box scores from one, averaged over groups.

    Every group must be nonempty; the per-group mean divides by the group size.
    """
    if not groups:
        raise ValueError("l_pos needs at least one group")
    arrays = _as_group_arrays(groups)
    if any(a.size == 0 for a in arrays):
        raise ValueError("l_pos: empty complete-sample group")
    k = len(arrays)
    loss = 0.0
    grads = []
    for a in arrays:
        d = a - 1.0
        loss += float(np.mean(d * d))
        grads.append(2.0 * d / (k * a.size))
    return loss / k, grads


def l_neg(
    groups: Sequence[Sequence[float]], delta: float
) -> tuple[float, list[np.ndarray]]:
    """Hinge suppressing partial/oversized scores to below delta.

    Empty groups contribute nothing and are excluded from the group average;
    with no nonempty group at all the loss is 0.
    """
    arrays = _as_group_arrays(groups)
    nonempty = [a for a in arrays if a.size > 0]
    if not nonempty:
        return 0.0, [np.zeros_like(a) for a in arrays]
    k_eff = len(nonempty)
    loss = 0.0
    grads = []
    for a in arrays:
        if a.size == 0:
            grads.append(np.zeros(0))
            continue
        excess = a - delta
        active = excess > 0
        loss += float(np.sum(np.where(active, excess, 0.0))) / a.size
        grads.append(np.where(active, 1.0, 0.0) / (k_eff * a.size))
    return loss / k_eff, grads


def l_con(
    groups: Sequence[Sequence[tuple[float, float]]],
    zeta: float,
    normalization: str = "literal_floor",
) -> tuple[float, list[np.ndarray]]:
    """Contrastive hinge over complete-box pairs within each group.

    For every unordered pair whose IoUs differ, the lower-IoU score is pushed
    below the higher-IoU score by the margin zeta. Equal-IoU pairs are
    skipped. The per-group sum is scaled by floor(2/n) under "literal_floor"
    or by 2/(n*(n-1)) under "pairwise_mean"; groups with fewer than two
    members contribute 0 but still count in the group average.
    """
    if normalization not in CON_NORMALIZATIONS:
        raise ValueError(f"unknown normalization: {normalization!r}")
    if not groups:
        raise ValueError("l_con needs at least one group")
    k = len(groups)
    loss = 0.0
    grads = []
    for group in groups:
        scores = np.array([s for s, _ in group], dtype=float)
        ious = np.array([u for _, u in group], dtype=float)
        grad = np.zeros_like(scores)
        n = scores.size
        if n >= 2:
            factor = float(2 // n) if normalization == "literal_floor" else 2.0 / (n * (n - 1))
            if factor != 0.0:
                group_sum = 0.0
                for i in range(n):
                    for j in range(i + 1, n):
                        if ious[i] == ious[j]:
                            continue
                        lo, hi = (i, j) if ious[i] < ious[j] else (j, i)
                        margin = scores[lo] - scores[hi] + zeta
                        if margin > 0:
                            group_sum += margin
                            grad[lo] += factor / k
                            grad[hi] -= factor / k
                loss += factor * group_sum
        grads.append(grad)
    return loss / k, grads


def l_goc(pos: float, neg: float, con: float) -> float:
    """Total GOC loss: plain sum of the three components."""
    return pos + neg + con


@dataclass
class GocLossResult:
    pos: float
    neg: float
    con: float
    total: float
    pos_grads: list[np.ndarray]
    neg_grads: list[np.ndarray]
    con_grads: list[np.ndarray]


def evaluate_goc(
    pos_groups: Sequence[Sequence[float]],
    neg_groups: Sequence[Sequence[float]],
    con_groups: Sequence[Sequence[tuple[float, float]]],
    cfg: GocLossConfig,
) -> GocLossResult:
    """Compute all three components and the total on one sample partition."""
    pos, pos_g = l_pos(pos_groups)
    neg, neg_g = l_neg(neg_groups, cfg.delta)
    con, con_g = l_con(con_groups, cfg.zeta, cfg.con_normalization)
    return GocLossResult(
        pos=pos,
        neg=neg,
        con=con,
        total=l_goc(pos, neg, con),
        pos_grads=pos_g,
        neg_grads=neg_g,
        con_grads=con_g,
    )
