"""Detection evaluation: greedy IoU matching, AP at IoU 0.5, FP ratio."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .compositor import BBox
from .fpfilter import Detection
from .errors import NoDetections, NoGroundTruth


@dataclass
class GroundTruth:
    image_id: str
    bbox: BBox
    category: str


@dataclass
class MatchOutcome:
    """Per-detection TP/FP labels (detection order) and per-gt matched flags."""

    labels: list[bool] = field(default_factory=list)  # True = TP
    matched: list[bool] = field(default_factory=list)

    @property
    def tp(self) -> int:
        return sum(self.labels)

    @property
    def fp(self) -> int:
        return len(self.labels) - self.tp


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    ix = max(0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


def match(
    detections: list[Detection],
    ground_truths: list[GroundTruth],
    iou_thresh: float = 0.5,
) -> MatchOutcome:
    """Greedy VOC-style matching within one class.

    Detections in descending-confidence order each claim the unmatched
    same-image ground truth with highest IoU >= iou_thresh, else count FP.
    """
    order = sorted(
        range(len(detections)), key=lambda i: (-detections[i].confidence, i)
    )
    matched = [False] * len(ground_truths)
    labels = [False] * len(detections)
    for i in order:
        det = detections[i]
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(ground_truths):
            if matched[j] or gt.image_id != det.image_id:
                continue
            o = iou(det.bbox, gt.bbox)
            if o > best_iou:
                best_iou, best_j = o, j
        if best_j >= 0 and best_iou >= iou_thresh:
            matched[best_j] = True
            labels[i] = True
    return MatchOutcome(labels=labels, matched=matched)


def fp_ratio(outcome: MatchOutcome) -> float:
    """FP / (TP + FP) over the matched detections."""
    total = len(outcome.labels)
    if total == 0:
        raise NoDetections("fp_ratio needs at least one detection")
    return outcome.fp / total


def ap50(
    detections: list[Detection],
    ground_truths: list[GroundTruth],
    iou_thresh: float = 0.5,
) -> float:
    """Average precision by all-points interpolation (precision envelope)."""
    if not ground_truths:
        raise NoGroundTruth("no ground truth for class")
    if not detections:
        return 0.0
    order = sorted(
        range(len(detections)), key=lambda i: (-detections[i].confidence, i)
    )
    outcome = match(detections, ground_truths, iou_thresh)
    tps = np.array([outcome.labels[i] for i in order], dtype=np.float64)
    fps = 1.0 - tps
    cum_tp = np.cumsum(tps)
    cum_fp = np.cumsum(fps)
    recall = cum_tp / len(ground_truths)
    precision = cum_tp / (cum_tp + cum_fp)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    idx = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))


def map50(
    detections: list[Detection],
    ground_truths: list[GroundTruth],
    classes: list[str],
    iou_thresh: float = 0.5,
):
    """Per-class AP and their mean; classes without ground truth are reported
    separately and excluded from the mean."""
    per_class = {}
    missing = []
    for c in classes:
        dets = [d for d in detections if d.category == c]
        gts = [g for g in ground_truths if g.category == c]
        if not gts:
            missing.append(c)
            continue
        per_class[c] = ap50(dets, gts, iou_thresh)
    mean = float(np.mean(list(per_class.values()))) if per_class else 0.0
    return per_class, mean, missing


def match_all_classes(
    detections: list[Detection],
    ground_truths: list[GroundTruth],
    classes: list[str],
    iou_thresh: float = 0.5,
    min_confidence: float = 0.0,
) -> MatchOutcome:
    """Pool per-class match outcomes over the given classes (for FP ratio)."""
    combined = MatchOutcome()
    for c in classes:
        dets = [
            d
            for d in detections
            if d.category == c and d.confidence >= min_confidence
        ]
        gts = [g for g in ground_truths if g.category == c]
        out = match(dets, gts, iou_thresh)
        combined.labels.extend(out.labels)
        combined.matched.extend(out.matched)
    return combined


def load_coco_ground_truth(path):
    """Read the compositor's COCO-style annotations into GroundTruth records.

    Returns (ground_truths, category_names {id: name}).
    """
    with open(path, "r", encoding="utf-8") as f:
        coco = json.load(f)
    cat_names = {c["id"]: c["name"] for c in coco["categories"]}
    img_names = {im["id"]: im["file_name"].rsplit(".", 1)[0] for im in coco["images"]}
    gts = [
        GroundTruth(
            image_id=img_names[a["image_id"]],
            bbox=BBox.from_xywh(a["bbox"]),
            category=cat_names[a["category_id"]],
        )
        for a in coco["annotations"]
    ]
    return gts, cat_names


def write_metrics_report(
    path,
    detections_before: list[Detection],
    detections_after: list[Detection],
    ground_truths: list[GroundTruth],
    classes: list[str],
    iou_thresh: float = 0.5,
    min_confidence: float = 0.0,
) -> dict:
    per_class, mean, missing = map50(detections_after, ground_truths, classes, iou_thresh)
    before = match_all_classes(
        detections_before, ground_truths, classes, iou_thresh, min_confidence
    )
    after = match_all_classes(
        detections_after, ground_truths, classes, iou_thresh, min_confidence
    )
    report = {
        "per_class_ap": per_class,
        "map50": mean,
        "classes_without_ground_truth": missing,
        "fp_ratio_before": fp_ratio(before) if before.labels else None,
        "fp_ratio_after": fp_ratio(after) if after.labels else None,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
        f.write("\n")
    return report
