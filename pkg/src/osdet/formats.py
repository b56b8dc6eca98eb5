"""Line-delimited record formats for proposals, annotations, detections,
and loss-ready sample groups.

Every file starts with a one-line JSON header carrying a schema name and
version, followed by one JSON object per image. Boxes are serialized in
(x, y, w, h) form and converted to corner form at ingestion; validation
failures name the offending record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import Box
from .inference import DetectionResult, KnownDetection, UnknownDetection
from .sampling import GroundTruthInstance

SCHEMA_VERSION = 1
PROPOSALS_SCHEMA = "osdet/proposals"
ANNOTATIONS_SCHEMA = "osdet/annotations"
DETECTIONS_SCHEMA = "osdet/detections"
GOC_SAMPLES_SCHEMA = "osdet/goc-samples"


class FormatError(ValueError):
    """A file failed schema validation."""


@dataclass
class ImageProposals:
    image_id: str
    boxes: list[Box]
    goc: np.ndarray  # (N,)
    logits: np.ndarray  # (N, C)


@dataclass
class ProposalDump:
    num_classes: int
    class_names: list[str]
    images: list[ImageProposals] = field(default_factory=list)


@dataclass
class ImageAnnotations:
    image_id: str
    instances: list[GroundTruthInstance]

    def known_instances(self, num_classes: int) -> list[GroundTruthInstance]:
        return [g for g in self.instances if g.label <= num_classes]

    def unknown_instances(self, num_classes: int) -> list[GroundTruthInstance]:
        return [g for g in self.instances if g.label == num_classes + 1]


@dataclass
class AnnotationSet:
    num_classes: int
    images: list[ImageAnnotations] = field(default_factory=list)


@dataclass
class ImageDetections:
    image_id: str
    result: DetectionResult


@dataclass
class DetectionSet:
    num_classes: int
    images: list[ImageDetections] = field(default_factory=list)


@dataclass
class ImageGocSamples:
    """Kernel-ready loss inputs for one image.

    pos_groups / con_groups hold the complete-box samples per ground truth
    (scores, and (score, iou) pairs respectively); neg_groups hold the
    partial-or-oversized scores. negative_energies feed the suppression loss.
    """

    image_id: str
    pos_groups: list[list[float]]
    con_groups: list[list[tuple[float, float]]]
    neg_groups: list[list[float]]
    negative_energies: list[float] = field(default_factory=list)
    groups_report: Optional[list[dict]] = None


def _box_from_xywh(raw, where: str) -> Box:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 4):
        raise FormatError(f"{where}: box must be [x, y, w, h], got {raw!r}")
    try:
        return Box.from_xywh(*(float(v) for v in raw))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from exc


def _read_records(path: Path, schema: str) -> tuple[dict, list[dict]]:
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict) or header.get("schema") != schema:
        raise FormatError(
            f"{path}: expected schema {schema!r}, got {header.get('schema')!r}"
        )
    if header.get("version") != SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported version {header.get('version')!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON record: {exc}") from exc
    return header, records


def _check_unique_ids(path: Path, records: Sequence[dict]):
    seen = set()
    for rec in records:
        image_id = rec.get("image_id")
        if image_id is None:
            raise FormatError(f"{path}: record without image_id")
        if image_id in seen:
            raise FormatError(f"{path}: duplicate image_id {image_id!r}")
        seen.add(image_id)


def _write_lines(path: Path, header: dict, records: Sequence[dict]):
    path = Path(path)
    with path.open("w") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def load_dump(path: str | Path) -> ProposalDump:
    path = Path(path)
    header, records = _read_records(path, PROPOSALS_SCHEMA)
    num_classes = header.get("num_classes")
    if not isinstance(num_classes, int) or num_classes < 1:
        raise FormatError(f"{path}: num_classes must be a positive integer")
    class_names = header.get("class_names") or [str(i + 1) for i in range(num_classes)]
    if len(class_names) != num_classes:
        raise FormatError(
            f"{path}: {len(class_names)} class names for {num_classes} classes"
        )
    _check_unique_ids(path, records)
    images = []
    for rec in records:
        image_id = rec["image_id"]
        boxes, goc, logits = [], [], []
        for i, prop in enumerate(rec.get("proposals", [])):
            where = f"{path}: image {image_id!r}, proposal {i}"
            boxes.append(_box_from_xywh(prop.get("box"), where))
            if "goc" not in prop:
                raise FormatError(f"{where}: missing goc score")
            goc.append(float(prop["goc"]))
            row = prop.get("logits")
            if not isinstance(row, list) or len(row) != num_classes:
                got = len(row) if isinstance(row, list) else row
                raise FormatError(
                    f"{where}: logits length {got} != num_classes {num_classes}"
                )
            logits.append([float(v) for v in row])
        images.append(
            ImageProposals(
                image_id=image_id,
                boxes=boxes,
                goc=np.asarray(goc, dtype=float),
                logits=np.asarray(logits, dtype=float).reshape(len(boxes), num_classes),
            )
        )
    return ProposalDump(num_classes=num_classes, class_names=list(class_names), images=images)


def save_dump(dump: ProposalDump, path: str | Path):
    header = {
        "schema": PROPOSALS_SCHEMA,
        "version": SCHEMA_VERSION,
        "num_classes": dump.num_classes,
        "class_names": dump.class_names,
    }
    records = []
    for img in dump.images:
        records.append(
            {
                "image_id": img.image_id,
                "proposals": [
                    {
                        "box": list(box.to_xywh()),
                        "goc": float(g),
                        "logits": [float(v) for v in row],
                    }
                    for box, g, row in zip(img.boxes, img.goc, img.logits)
                ],
            }
        )
    _write_lines(Path(path), header, records)


def load_annotations(path: str | Path) -> AnnotationSet:
    path = Path(path)
    header, records = _read_records(path, ANNOTATIONS_SCHEMA)
    num_classes = header.get("num_classes")
    if not isinstance(num_classes, int) or num_classes < 1:
        raise FormatError(f"{path}: num_classes must be a positive integer")
    _check_unique_ids(path, records)
    images = []
    for rec in records:
        image_id = rec["image_id"]
        instances = []
        for i, inst in enumerate(rec.get("instances", [])):
            where = f"{path}: image {image_id!r}, instance {i}"
            box = _box_from_xywh(inst.get("box"), where)
            label = inst.get("label")
            if not isinstance(label, int) or not (1 <= label <= num_classes + 1):
                raise FormatError(
                    f"{where}: label {label!r} outside 1..{num_classes + 1}"
                )
            try:
                instances.append(GroundTruthInstance(box=box, label=label))
            except ValueError as exc:
                raise FormatError(f"{where}: {exc}") from exc
        images.append(ImageAnnotations(image_id=image_id, instances=instances))
    return AnnotationSet(num_classes=num_classes, images=images)


def save_annotations(annotations: AnnotationSet, path: str | Path):
    header = {
        "schema": ANNOTATIONS_SCHEMA,
        "version": SCHEMA_VERSION,
        "num_classes": annotations.num_classes,
    }
    records = [
        {
            "image_id": img.image_id,
            "instances": [
                {"box": list(g.box.to_xywh()), "label": g.label} for g in img.instances
            ],
        }
        for img in annotations.images
    ]
    _write_lines(Path(path), header, records)


def load_detections(path: str | Path) -> DetectionSet:
    path = Path(path)
    header, records = _read_records(path, DETECTIONS_SCHEMA)
    num_classes = header.get("num_classes")
    if not isinstance(num_classes, int) or num_classes < 1:
        raise FormatError(f"{path}: num_classes must be a positive integer")
    _check_unique_ids(path, records)
    images = []
    for rec in records:
        image_id = rec["image_id"]
        known = []
        for i, det in enumerate(rec.get("known", [])):
            where = f"{path}: image {image_id!r}, known detection {i}"
            box = _box_from_xywh(det.get("box"), where)
            label = det.get("label")
            if not isinstance(label, int) or not (1 <= label <= num_classes):
                raise FormatError(f"{where}: label {label!r} outside 1..{num_classes}")
            known.append(KnownDetection(box=box, label=label, score=float(det["score"])))
        unknown = []
        for i, det in enumerate(rec.get("unknown", [])):
            where = f"{path}: image {image_id!r}, unknown detection {i}"
            box = _box_from_xywh(det.get("box"), where)
            unknown.append(UnknownDetection(box=box, goc=float(det["goc"])))
        images.append(
            ImageDetections(
                image_id=image_id, result=DetectionResult(known=known, unknown=unknown)
            )
        )
    return DetectionSet(num_classes=num_classes, images=images)


def save_detections(detections: DetectionSet, path: str | Path):
    header = {
        "schema": DETECTIONS_SCHEMA,
        "version": SCHEMA_VERSION,
        "num_classes": detections.num_classes,
    }
    records = []
    for img in detections.images:
        records.append(
            {
                "image_id": img.image_id,
                "known": [
                    {"box": list(d.box.to_xywh()), "label": d.label, "score": d.score}
                    for d in img.result.known
                ],
                "unknown": [
                    {"box": list(d.box.to_xywh()), "goc": d.goc}
                    for d in img.result.unknown
                ],
            }
        )
    _write_lines(Path(path), header, records)


def _score_groups(raw, where: str) -> list[list[float]]:
    if not isinstance(raw, list):
        raise FormatError(f"{where}: expected a list of score groups")
    return [[float(v) for v in group] for group in raw]


def _pair_groups(raw, where: str) -> list[list[tuple[float, float]]]:
    if not isinstance(raw, list):
        raise FormatError(f"{where}: expected a list of (score, iou) groups")
    out = []
    for group in raw:
        pairs = []
        for pair in group:
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                raise FormatError(f"{where}: expected [score, iou] pairs, got {pair!r}")
            pairs.append((float(pair[0]), float(pair[1])))
        out.append(pairs)
    return out


def load_goc_samples(path: str | Path) -> list[ImageGocSamples]:
    path = Path(path)
    _, records = _read_records(path, GOC_SAMPLES_SCHEMA)
    _check_unique_ids(path, records)
    images = []
    for rec in records:
        image_id = rec["image_id"]
        where = f"{path}: image {image_id!r}"
        inputs = rec.get("loss_inputs")
        if not isinstance(inputs, dict):
            raise FormatError(f"{where}: missing loss_inputs")
        images.append(
            ImageGocSamples(
                image_id=image_id,
                pos_groups=_score_groups(inputs.get("pos_groups", []), where),
                con_groups=_pair_groups(inputs.get("con_groups", []), where),
                neg_groups=_score_groups(inputs.get("neg_groups", []), where),
                negative_energies=[float(v) for v in rec.get("negative_energies", [])],
                groups_report=rec.get("groups"),
            )
        )
    return images


def save_goc_samples(images: Sequence[ImageGocSamples], path: str | Path):
    header = {"schema": GOC_SAMPLES_SCHEMA, "version": SCHEMA_VERSION}
    records = []
    for img in images:
        rec = {
            "image_id": img.image_id,
            "loss_inputs": {
                "pos_groups": img.pos_groups,
                "con_groups": [[[s, u] for s, u in g] for g in img.con_groups],
                "neg_groups": img.neg_groups,
            },
            "negative_energies": img.negative_energies,
        }
        if img.groups_report is not None:
            rec["groups"] = img.groups_report
        records.append(rec)
    _write_lines(Path(path), header, records)
