"""Synthetic scene generation for end-to-end fixtures.

Scenes place ground-truth boxes inside an image extent and emit jittered
proposals around each object plus background distractors. Oracle score
parameters control the separation between object and non-object confidence
and between known / unknown / non-object negative energy, mimicking the
score distributions of a trained two-branch detector. Everything is driven
by a single seed, so a spec generates identical files on every run.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .formats import AnnotationSet, ImageAnnotations, ImageProposals, ProposalDump
from .geometry import Box, boxes_to_array, iou_matrix
from .sampling import GroundTruthInstance

_PLACEMENT_RETRIES = 200
_KNOWN_LOGIT_MARGIN = 4.0


@dataclass(frozen=True)
class ScoreProfile:
    mean: float
    spread: float


@dataclass
class SyntheticSceneSpec:
    width: float = 640.0
    height: float = 480.0
    num_classes: int = 3
    image_count: int = 1
    object_count: tuple[int, int] = (1, 4)
    box_size: tuple[float, float] = (60.0, 160.0)
    proposals_per_object: tuple[int, int] = (3, 6)
    jitter: float = 0.0  # fractional corner jitter relative to box size
    distractor_count: tuple[int, int] = (0, 0)
    known_fraction: float = 0.0  # fraction of objects drawn from known classes
    overlap_pairs: int = 0  # extra objects placed overlapping an existing one
    max_gt_iou: float = 0.3  # overlap cap between independently placed objects
    goc_object: ScoreProfile = field(default_factory=lambda: ScoreProfile(1.0, 0.02))
    goc_distractor: ScoreProfile = field(default_factory=lambda: ScoreProfile(0.0, 0.02))
    ne_known: ScoreProfile = field(default_factory=lambda: ScoreProfile(8.0, 0.3))
    ne_unknown: ScoreProfile = field(default_factory=lambda: ScoreProfile(2.0, 0.3))
    ne_distractor: ScoreProfile = field(default_factory=lambda: ScoreProfile(-2.0, 0.3))
    seed: int = 0

    def __post_init__(self):
        if self.jitter < 0 or self.jitter >= 0.5:
            raise ValueError(f"jitter must be in [0, 0.5), got {self.jitter}")
        if self.num_classes < 1:
            raise ValueError("need at least one known class")
        if not (0.0 <= self.known_fraction <= 1.0):
            raise ValueError("known_fraction must be in [0, 1]")
        if self.box_size[0] <= 0 or self.box_size[0] > self.box_size[1]:
            raise ValueError(f"bad box_size range {self.box_size}")

    @classmethod
    def from_file(cls, path: str | Path) -> "SyntheticSceneSpec":
        raw = json.loads(Path(path).read_text())
        for key in ("goc_object", "goc_distractor", "ne_known", "ne_unknown", "ne_distractor"):
            if key in raw:
                raw[key] = ScoreProfile(*raw[key])
        for key in ("object_count", "box_size", "proposals_per_object", "distractor_count"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)

    def to_dict(self) -> dict:
        return asdict(self)


def _place_box(
    rng: np.random.Generator, spec: SyntheticSceneSpec, existing: list[Box]
) -> Box:
    lo, hi = spec.box_size
    hi_w = min(hi, spec.width)
    hi_h = min(hi, spec.height)
    if lo > hi_w or lo > hi_h:
        raise RuntimeError("box size range does not fit the image extent")
    for _ in range(_PLACEMENT_RETRIES):
        w = rng.uniform(lo, hi_w)
        h = rng.uniform(lo, hi_h)
        x = rng.uniform(0.0, spec.width - w)
        y = rng.uniform(0.0, spec.height - h)
        box = Box(x, y, x + w, y + h)
        if not existing:
            return box
        overlaps = iou_matrix(
            boxes_to_array([box]), boxes_to_array(existing)
        )[0]
        if overlaps.max() <= spec.max_gt_iou:
            return box
    raise RuntimeError(
        f"could not place a box after {_PLACEMENT_RETRIES} attempts; "
        "loosen max_gt_iou or shrink the objects"
    )


def _place_overlapping(
    rng: np.random.Generator, spec: SyntheticSceneSpec, base: Box
) -> Box:
    """A companion box overlapping `base` with moderate IoU, inside the extent."""
    w, h = base.width, base.height
    for _ in range(_PLACEMENT_RETRIES):
        dx = rng.uniform(0.3, 0.6) * w * rng.choice([-1.0, 1.0])
        dy = rng.uniform(-0.2, 0.2) * h
        scale = rng.uniform(0.9, 1.1)
        nw, nh = w * scale, h * scale
        x = min(max(base.x_min + dx, 0.0), spec.width - nw)
        y = min(max(base.y_min + dy, 0.0), spec.height - nh)
        if x < 0 or y < 0:
            continue
        box = Box(x, y, x + nw, y + nh)
        overlap = iou_matrix(boxes_to_array([box]), boxes_to_array([base]))[0, 0]
        if 0.2 <= overlap <= 0.7:
            return box
    raise RuntimeError("could not place an overlapping companion box")


def _jittered(rng: np.random.Generator, spec: SyntheticSceneSpec, gt: Box) -> Box:
    j = spec.jitter
    if j == 0.0:
        return gt
    w, h = gt.width, gt.height
    return Box(
        gt.x_min + rng.uniform(-j, j) * w,
        gt.y_min + rng.uniform(-j, j) * h,
        gt.x_max + rng.uniform(-j, j) * w,
        gt.y_max + rng.uniform(-j, j) * h,
    )


def _logits_for_energy(
    rng: np.random.Generator,
    spec: SyntheticSceneSpec,
    profile: ScoreProfile,
    label: int | None,
) -> list[float]:
    """Unit-weight logits whose negative energy equals a draw from `profile`.

    With a known label, that class leads the others by a fixed margin and
    still realizes the drawn negative energy exactly.
    """
    target = rng.normal(profile.mean, profile.spread)
    c = spec.num_classes
    if label is None:
        return [target - math.log(c)] * c
    top = target - math.log(1.0 + (c - 1) * math.exp(-_KNOWN_LOGIT_MARGIN))
    row = [top - _KNOWN_LOGIT_MARGIN] * c
    row[label - 1] = top
    return row


def generate_scene(
    spec: SyntheticSceneSpec, rng: np.random.Generator, image_id: str
) -> tuple[ImageAnnotations, ImageProposals]:
    """One image: placed ground truths plus jittered and distractor proposals."""
    base_count = int(rng.integers(spec.object_count[0], spec.object_count[1] + 1))
    gt_boxes: list[Box] = []
    for _ in range(base_count):
        gt_boxes.append(_place_box(rng, spec, gt_boxes))
    for p in range(spec.overlap_pairs):
        gt_boxes.append(_place_overlapping(rng, spec, gt_boxes[p % base_count]))

    instances = []
    for box in gt_boxes:
        if rng.uniform() < spec.known_fraction:
            label = int(rng.integers(1, spec.num_classes + 1))
        else:
            label = spec.num_classes + 1
        instances.append(GroundTruthInstance(box=box, label=label))

    boxes: list[Box] = []
    goc: list[float] = []
    logits: list[list[float]] = []
    for inst in instances:
        known = inst.label <= spec.num_classes
        ne_profile = spec.ne_known if known else spec.ne_unknown
        count = int(
            rng.integers(spec.proposals_per_object[0], spec.proposals_per_object[1] + 1)
        )
        for _ in range(count):
            boxes.append(_jittered(rng, spec, inst.box))
            goc.append(rng.normal(spec.goc_object.mean, spec.goc_object.spread))
            logits.append(
                _logits_for_energy(rng, spec, ne_profile, inst.label if known else None)
            )
    n_distract = int(
        rng.integers(spec.distractor_count[0], spec.distractor_count[1] + 1)
    )
    for _ in range(n_distract):
        lo, hi = spec.box_size
        w = rng.uniform(lo, min(hi, spec.width))
        h = rng.uniform(lo, min(hi, spec.height))
        x = rng.uniform(0.0, spec.width - w)
        y = rng.uniform(0.0, spec.height - h)
        boxes.append(Box(x, y, x + w, y + h))
        goc.append(rng.normal(spec.goc_distractor.mean, spec.goc_distractor.spread))
        logits.append(_logits_for_energy(rng, spec, spec.ne_distractor, None))

    annotations = ImageAnnotations(image_id=image_id, instances=instances)
    proposals = ImageProposals(
        image_id=image_id,
        boxes=boxes,
        goc=np.asarray(goc, dtype=float),
        logits=np.asarray(logits, dtype=float).reshape(len(boxes), spec.num_classes),
    )
    return annotations, proposals


def generate_dataset(spec: SyntheticSceneSpec) -> tuple[AnnotationSet, ProposalDump]:
    """Deterministic multi-image dataset: seed and spec fully determine the output."""
    rng = np.random.default_rng(spec.seed)
    ann_images = []
    prop_images = []
    for i in range(spec.image_count):
        ann, props = generate_scene(spec, rng, image_id=f"scene-{i:05d}")
        ann_images.append(ann)
        prop_images.append(props)
    annotations = AnnotationSet(num_classes=spec.num_classes, images=ann_images)
    dump = ProposalDump(
        num_classes=spec.num_classes,
        class_names=[f"class-{i + 1}" for i in range(spec.num_classes)],
        images=prop_images,
    )
    return annotations, dump
