"""Axis-aligned box arithmetic and the three overlap ratios (IoU, IoP, IoC).

Boxes are stored in corner form (x_min, y_min, x_max, y_max) with continuous
coordinates; zero-area boxes are constructible but rejected by the ratio
operations that would divide by zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in continuous pixel coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValueError(
                f"negative extent: ({self.x_min}, {self.y_min}, "
                f"{self.x_max}, {self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> "Box":
        if w < 0 or h < 0:
            raise ValueError(f"negative size: w={w}, h={h}")
        return cls(x, y, x + w, y + h)

    def to_xywh(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.width, self.height)


def area(b: Box) -> float:
    return b.width * b.height


def intersection_area(a: Box, b: Box) -> float:
    """Area of the axis-aligned intersection; 0 when disjoint."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: Box, b: Box) -> float:
    """Intersection over union. Undefined (raises) when both boxes have zero area."""
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    if union <= 0:
        raise ValueError("IoU undefined: both boxes have zero area")
    return inter / union


def iop(b: Box, y: Box) -> float:
    """Intersection over the predicted box b."""
    ab = area(b)
    if ab <= 0:
        raise ValueError("IoP undefined: predicted box has zero area")
    return intersection_area(b, y) / ab


def ioc(b: Box, y: Box) -> float:
    """Intersection over the correct (ground-truth) box y."""
    ay = area(y)
    if ay <= 0:
        raise ValueError("IoC undefined: ground-truth box has zero area")
    return intersection_area(b, y) / ay


def boxes_to_array(boxes: Iterable[Box]) -> np.ndarray:
    """Stack boxes into an (N, 4) float array in corner form."""
    out = np.array([(b.x_min, b.y_min, b.x_max, b.y_max) for b in boxes], dtype=float)
    return out.reshape(-1, 4)


def array_to_boxes(arr: np.ndarray) -> list[Box]:
    return [Box(*row) for row in np.asarray(arr, dtype=float).reshape(-1, 4)]


def areas(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    return (arr[:, 2] - arr[:, 0]) * (arr[:, 3] - arr[:, 1])


def intersection_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise intersection areas between (N, 4) and (M, 4) corner-form arrays."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    return np.clip(iw, 0, None) * np.clip(ih, 0, None)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between (N, 4) and (M, 4) corner-form arrays.

    Pairs where both boxes have zero area get IoU 0 rather than raising; the
    scalar `iou` is the strict entry point for single pairs.
    """
    inter = intersection_matrix(a, b)
    union = areas(np.asarray(a).reshape(-1, 4))[:, None] + areas(
        np.asarray(b).reshape(-1, 4)
    )[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
    return out


def pairwise_iou(boxes: Sequence[Box]) -> np.ndarray:
    """Symmetric IoU matrix over one list of boxes, unit diagonal for positive areas."""
    arr = boxes_to_array(boxes)
    return iou_matrix(arr, arr)
