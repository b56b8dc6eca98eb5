"""Graph-based top-scoring box determination.

Proposals become nodes of a weighted undirected graph whose edge weights are
pairwise IoU. The graph is split by recursive two-way normalized cuts until
no subgraph admits a split with a normalized-cut value below the threshold;
one box per final subgraph (the highest-scoring) is emitted. A greedy NMS
baseline is included for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import eigh

from .geometry import Box, areas, boxes_to_array, iou_matrix


@dataclass
class ProposalGraph:
    """Symmetric nonnegative IoU weight matrix with zero diagonal."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if w.shape[0] == 0:
            raise ValueError("graph needs at least one node")
        if not np.allclose(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("diagonal must be zero")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("weights must lie in [0, 1]")
        self.weights = w

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)


@dataclass
class Partition:
    """Disjoint nonempty node groups covering every node of a graph."""

    groups: list[list[int]]

    def __post_init__(self):
        seen: set[int] = set()
        for g in self.groups:
            if not g:
                raise ValueError("empty group in partition")
            if seen.intersection(g):
                raise ValueError("overlapping groups in partition")
            seen.update(g)

    @property
    def num_nodes(self) -> int:
        return sum(len(g) for g in self.groups)


def build_graph(boxes: Sequence[Box]) -> ProposalGraph:
    """IoU graph over the boxes; every box must have positive area."""
    if not boxes:
        raise ValueError("cannot build a graph from no boxes")
    arr = boxes_to_array(boxes)
    if np.any(areas(arr) <= 0):
        raise ValueError("all boxes must have positive area")
    w = iou_matrix(arr, arr)
    np.fill_diagonal(w, 0.0)
    w = (w + w.T) / 2.0  # exact symmetry against float noise
    return ProposalGraph(weights=w)


def ncut_value(g: ProposalGraph, a: Sequence[int], b: Sequence[int]) -> float:
    """Normalized-cut value cut/assoc(A) + cut/assoc(B) of a bipartition.

    A side with zero association necessarily has zero cut and contributes 0.
    """
    a = list(a)
    b = list(b)
    if not a or not b:
        raise ValueError("both sides of the cut must be nonempty")
    if set(a) & set(b):
        raise ValueError("cut sides must be disjoint")
    if len(a) + len(b) != g.n or set(a) | set(b) != set(range(g.n)):
        raise ValueError("cut sides must cover all nodes")
    w = g.weights
    cut = float(w[np.ix_(a, b)].sum())
    if cut == 0.0:
        return 0.0
    assoc_a = float(w[a, :].sum())
    assoc_b = float(w[b, :].sum())
    return cut / assoc_a + cut / assoc_b


def _fiedler_order(g: ProposalGraph) -> np.ndarray:
    """Node order along the second eigenvector of the normalized Laplacian."""
    d = g.degrees
    inv_sqrt = 1.0 / np.sqrt(d)
    lap = -g.weights * inv_sqrt[:, None] * inv_sqrt[None, :]
    np.fill_diagonal(lap, 1.0)
    lap = (lap + lap.T) / 2.0
    _, vecs = eigh(lap)
    y = vecs[:, 1] * inv_sqrt
    nonzero = np.nonzero(np.abs(y) > 1e-12)[0]
    if nonzero.size and y[nonzero[0]] < 0:
        y = -y
    return np.argsort(y, kind="stable")


def spectral_bipartition(
    g: ProposalGraph,
) -> tuple[list[int], list[int], float]:
    """Best two-way split along the second generalized eigenvector.

    Candidate splits are the thresholds between consecutive sorted
    eigenvector entries; the one minimizing the normalized-cut value wins.
    Requires at least two nodes, all with positive degree (isolated nodes
    must be peeled off by the caller).
    """
    if g.n < 2:
        raise ValueError("need at least two nodes to bipartition")
    d = g.degrees
    if np.any(d == 0):
        raise ValueError("graph has isolated nodes; peel them into singletons first")
    order = _fiedler_order(g)
    w = g.weights
    # Incremental sweep: move nodes from B to A in eigenvector order,
    # tracking cut(A, B) and assoc(A).
    total_assoc = float(d.sum())
    link_to_a = np.zeros(g.n)
    cut = 0.0
    assoc_a = 0.0
    best_split = 1
    best_val = np.inf
    ordered_y_positions = order.tolist()
    for step in range(g.n - 1):
        v = ordered_y_positions[step]
        cut += float(d[v]) - 2.0 * float(link_to_a[v])
        assoc_a += float(d[v])
        link_to_a += w[v]
        assoc_b = total_assoc - assoc_a
        if assoc_a > 0 and assoc_b > 0:
            val = cut / assoc_a + cut / assoc_b
        else:
            val = 0.0 if cut == 0.0 else np.inf
        if val < best_val:
            best_val = val
            best_split = step + 1
    a = sorted(int(i) for i in order[:best_split])
    b = sorted(int(i) for i in order[best_split:])
    return a, b, ncut_value(g, a, b)


def recursive_partition(g: ProposalGraph, epsilon: float) -> Partition:
    """Recursively bipartition while the best split's ncut is below epsilon.

    At every level, zero-degree nodes of the current subgraph are peeled into
    singleton groups before the eigensolve; a multi-node subgraph becomes
    final when its best split is no longer accepted.
    """
    if not (0.0 <= epsilon <= 2.0):
        raise ValueError(f"epsilon must be in [0, 2], got {epsilon}")
    weights = g.weights

    def split(nodes: list[int]) -> list[list[int]]:
        sub = weights[np.ix_(nodes, nodes)]
        deg = sub.sum(axis=1)
        groups = [[nodes[i]] for i in range(len(nodes)) if deg[i] == 0]
        remaining = [nodes[i] for i in range(len(nodes)) if deg[i] > 0]
        if not remaining:
            return groups
        if len(remaining) == 1:
            groups.append(remaining)
            return groups
        subgraph = ProposalGraph(weights[np.ix_(remaining, remaining)])
        a, b, val = spectral_bipartition(subgraph)
        if val < epsilon:
            groups.extend(split([remaining[i] for i in a]))
            groups.extend(split([remaining[i] for i in b]))
        else:
            groups.append(remaining)
        return groups

    return Partition(groups=split(list(range(g.n))))


def select_top(partition: Partition, goc: np.ndarray) -> list[int]:
    """Highest-scoring node of each group; ties resolve to the lowest index."""
    scores = np.asarray(goc, dtype=float).ravel()
    if scores.size != partition.num_nodes:
        raise ValueError(
            f"score vector length {scores.size} != node count {partition.num_nodes}"
        )
    winners = []
    for group in partition.groups:
        members = sorted(group)
        winners.append(members[int(np.argmax(scores[members]))])
    return winners


def nms_baseline(
    boxes: Sequence[Box], scores: np.ndarray, iou_threshold: float
) -> list[int]:
    """Greedy non-maximum suppression: keep the best box, drop overlaps above
    the threshold, repeat. Returns kept indices in descending score order."""
    scores = np.asarray(scores, dtype=float).ravel()
    if len(boxes) != scores.size:
        raise ValueError("boxes and scores must have equal length")
    if not boxes:
        return []
    arr = boxes_to_array(boxes)
    order = np.argsort(-scores, kind="stable")
    ious = iou_matrix(arr, arr)
    keep: list[int] = []
    alive = np.ones(len(boxes), dtype=bool)
    for i in order:
        if not alive[i]:
            continue
        keep.append(int(i))
        alive &= ious[i] <= iou_threshold
        alive[i] = False
    return keep
