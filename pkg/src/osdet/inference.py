"""End-to-end prediction assembly.

Proposals are routed to the known or unknown branch by their negative
energy. The known branch applies a score threshold and per-class NMS; the
unknown branch selects high-confidence candidates, partitions them with the
normalized-cut scheme, and keeps the best box per group. The two outputs are
concatenated, dropping unknown boxes that duplicate a known prediction.

Also implements the pretest threshold procedures: the negative-energy
percentile for gamma and the grid search over normalized-cut thresholds for
epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import softmax

from .energy import EnergyModel, negative_energies
from .gbd import build_graph, nms_baseline, recursive_partition, select_top
from .geometry import Box, area, boxes_to_array, iou_matrix

EPSILON_GRID = tuple(np.round(np.arange(1, 11) * 0.1, 1))


@dataclass(frozen=True)
class CandidateRule:
    """How to pick the proposals that enter graph-based box determination."""

    kind: str  # "top_k" or "goc_at_least"
    k: int = 100
    tau: float = 0.5

    def __post_init__(self):
        if self.kind not in ("top_k", "goc_at_least"):
            raise ValueError(f"unknown candidate rule: {self.kind!r}")
        if self.kind == "top_k" and self.k < 1:
            raise ValueError(f"top_k needs k >= 1, got {self.k}")
        if self.kind == "goc_at_least" and not math.isfinite(self.tau):
            raise ValueError(f"goc_at_least needs a finite threshold, got {self.tau}")


@dataclass(frozen=True)
class InferenceConfig:
    gamma: float = 4.5
    beta: float = 0.98
    epsilon: float = 0.5
    candidate_rule: CandidateRule = CandidateRule("top_k", k=100)
    known_score_threshold: float = 0.05
    known_nms_iou: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if not (0.0 <= self.epsilon <= 2.0):
            raise ValueError(f"epsilon must be in [0, 2], got {self.epsilon}")


@dataclass(frozen=True)
class KnownDetection:
    box: Box
    label: int  # class id in 1..C
    score: float


@dataclass(frozen=True)
class UnknownDetection:
    box: Box
    goc: float


@dataclass
class DetectionResult:
    known: list[KnownDetection] = field(default_factory=list)
    unknown: list[UnknownDetection] = field(default_factory=list)


def route_proposals(
    negative_energy: np.ndarray, gamma: float
) -> tuple[np.ndarray, np.ndarray]:
    """Split proposal indices into (known, unknown) by negative energy.

    Proposals at exactly gamma go to the known branch.
    """
    ne = np.asarray(negative_energy, dtype=float).ravel()
    known = np.nonzero(ne >= gamma)[0]
    unknown = np.nonzero(ne < gamma)[0]
    return known, unknown


def select_candidates(goc: np.ndarray, rule: CandidateRule) -> np.ndarray:
    """Indices of the proposals admitted to graph-based determination.

    top_k keeps the k highest scores (ties to the lower index); goc_at_least
    keeps every proposal at or above the threshold. The result may be empty.
    """
    scores = np.asarray(goc, dtype=float).ravel()
    if rule.kind == "top_k":
        order = np.argsort(-scores, kind="stable")
        return np.sort(order[: min(rule.k, scores.size)])
    return np.nonzero(scores >= rule.tau)[0]


def merge(
    known: Sequence[KnownDetection],
    unknown: Sequence[UnknownDetection],
    beta: float,
) -> DetectionResult:
    """Drop unknown predictions whose IoU with any known prediction exceeds beta."""
    known = list(known)
    unknown = list(unknown)
    if known and unknown:
        ious = iou_matrix(
            boxes_to_array(u.box for u in unknown),
            boxes_to_array(k.box for k in known),
        )
        unknown = [u for u, row in zip(unknown, ious) if row.max() <= beta]
    return DetectionResult(known=known, unknown=unknown)


def pretest_gamma(values: Sequence[float], fraction: float = 0.95) -> float:
    """Threshold below which the given fraction of values lies above.

    Nearest-rank percentile: the ceil((1 - fraction) * N)-th smallest value.
    """
    arr = np.sort(np.asarray(list(values), dtype=float).ravel())
    if arr.size == 0:
        raise ValueError("pretest_gamma needs at least one value")
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    rank = max(1, math.ceil(arr.size * (1.0 - fraction) - 1e-9))
    return float(arr[rank - 1])


def pretest_epsilon(
    images: Sequence,
    metric_fn: Callable[[float, Sequence], float],
    grid: Sequence[float] = EPSILON_GRID,
) -> tuple[float, list[float]]:
    """Grid search for the normalized-cut threshold maximizing known AP.

    metric_fn(epsilon, images) must return the AP of known objects under
    that threshold. Ties resolve to the smaller epsilon. Returns the chosen
    value and the full AP curve over the grid.
    """
    if len(images) == 0:
        raise ValueError("pretest_epsilon needs a nonempty pretest set")
    best_eps: Optional[float] = None
    best_ap = -np.inf
    curve = []
    for eps in grid:
        ap = float(metric_fn(float(eps), images))
        curve.append(ap)
        if ap > best_ap:
            best_ap = ap
            best_eps = float(eps)
    assert best_eps is not None
    return best_eps, curve


def known_branch(
    boxes: Sequence[Box],
    logits: np.ndarray,
    indices: np.ndarray,
    config: InferenceConfig,
) -> list[KnownDetection]:
    """Score threshold plus per-class NMS over the known-routed proposals."""
    if indices.size == 0:
        return []
    probs = softmax(np.asarray(logits, dtype=float)[indices], axis=1)
    labels = np.argmax(probs, axis=1) + 1
    scores = probs[np.arange(indices.size), labels - 1]
    keep = scores >= config.known_score_threshold
    detections: list[KnownDetection] = []
    for cls in np.unique(labels[keep]):
        mask = keep & (labels == cls)
        cls_global = indices[mask]
        cls_boxes = [boxes[i] for i in cls_global]
        kept = nms_baseline(cls_boxes, scores[mask], config.known_nms_iou)
        detections.extend(
            KnownDetection(box=cls_boxes[i], label=int(cls), score=float(scores[mask][i]))
            for i in kept
        )
    detections.sort(key=lambda d: -d.score)
    return detections


def unknown_branch(
    boxes: Sequence[Box],
    goc: np.ndarray,
    indices: np.ndarray,
    config: InferenceConfig,
) -> list[UnknownDetection]:
    """Candidate selection, graph partitioning, and top-1 pick per group.

    Zero-area proposals cannot form graph nodes and are dropped from the
    candidate set.
    """
    goc = np.asarray(goc, dtype=float).ravel()
    if indices.size == 0:
        return []
    local = select_candidates(goc[indices], config.candidate_rule)
    candidates = indices[local]
    candidates = np.array([i for i in candidates if area(boxes[i]) > 0], dtype=int)
    if candidates.size == 0:
        return []
    graph = build_graph([boxes[i] for i in candidates])
    partition = recursive_partition(graph, config.epsilon)
    winners = select_top(partition, goc[candidates])
    return [
        UnknownDetection(box=boxes[candidates[w]], goc=float(goc[candidates[w]]))
        for w in winners
    ]


def run_pipeline(
    boxes: Sequence[Box],
    goc: np.ndarray,
    logits: np.ndarray,
    model: EnergyModel,
    config: InferenceConfig,
) -> DetectionResult:
    """Full single-image pipeline: route, run both branches, merge."""
    goc = np.asarray(goc, dtype=float).ravel()
    logits = np.asarray(logits, dtype=float).reshape(len(boxes), -1)
    if goc.size != len(boxes):
        raise ValueError("goc scores and boxes must have equal length")
    if len(boxes) == 0:
        return DetectionResult()
    ne = negative_energies(logits, model)
    known_idx, unknown_idx = route_proposals(ne, config.gamma)
    known = known_branch(boxes, logits, known_idx, config)
    unknown = unknown_branch(boxes, goc, unknown_idx, config)
    return merge(known, unknown, config.beta)
