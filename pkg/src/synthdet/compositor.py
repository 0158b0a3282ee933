"""Saliency-driven cropping and seeded copy-paste dataset synthesis.

Masks are thresholded, the tightest box around the foreground is cropped
(optionally with a per-pixel alpha), and each crop is randomly down-sized
and pasted onto a background drawn from the base dataset, producing an
annotated COCO-style training set.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from PIL import Image

from .errors import (
    BoxOutOfBounds,
    EmptyBackgroundPool,
    EmptyMask,
    MissingAsset,
    PatchTooLarge,
)


@dataclass(frozen=True)
class BBox:
    """Half-open pixel rectangle [x_min, x_max) x [y_min, y_max)."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box {self}")
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"negative origin {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    def to_xywh(self) -> list[int]:
        return [self.x_min, self.y_min, self.width, self.height]

    @staticmethod
    def from_xywh(xywh) -> "BBox":
        x, y, w, h = xywh
        return BBox(int(x), int(y), int(x + w), int(y + h))


@dataclass
class Annotation:
    image_id: str
    bbox: BBox
    category: str


class PasteMode(str, Enum):
    BOX = "box"
    SALIENCY_MAP = "saliency"
    SEGMENTATION_MAP = "segmentation"


@dataclass
class CompositorConfig:
    mode: PasteMode = PasteMode.BOX
    threshold: int = 128
    scale_min: float = 0.3
    scale_max: float = 1.0
    overlap_max: float = 0.5
    max_attempts: int = 50


def binarize_mask(mask: np.ndarray, threshold: int = 128) -> np.ndarray:
    """Foreground iff pixel value >= threshold."""
    return np.asarray(mask) >= threshold


def min_enclosing_box(binary: np.ndarray) -> BBox:
    """Tightest half-open rectangle covering all foreground pixels."""
    ys, xs = np.nonzero(binary)
    if ys.size == 0:
        raise EmptyMask("no foreground pixels")
    return BBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def crop(image: np.ndarray, box: BBox, mode: PasteMode, mask: np.ndarray | None = None):
    """Cut the box from the image; alpha from the binarized mask in map modes.

    Returns (patch, alpha) where alpha is None in box mode.
    """
    h, w = image.shape[:2]
    if box.x_max > w or box.y_max > h:
        raise BoxOutOfBounds(f"{box} outside {w}x{h} image")
    patch = np.ascontiguousarray(image[box.y_min : box.y_max, box.x_min : box.x_max])
    if mode == PasteMode.BOX:
        return patch, None
    if mask is None:
        raise ValueError(f"{mode.value} mode needs the mask")
    alpha = np.ascontiguousarray(mask[box.y_min : box.y_max, box.x_min : box.x_max])
    return patch, alpha.astype(bool)


def bbox_iou(a: BBox, b: BBox) -> float:
    ix = max(0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


def _scale_nearest(patch: np.ndarray, alpha, new_w: int, new_h: int):
    h, w = patch.shape[:2]
    ys = (np.arange(new_h) * h // new_h).clip(0, h - 1)
    xs = (np.arange(new_w) * w // new_w).clip(0, w - 1)
    scaled = patch[ys][:, xs]
    scaled_alpha = alpha[ys][:, xs] if alpha is not None else None
    return scaled, scaled_alpha


def paste(
    background: np.ndarray,
    existing: list[Annotation],
    patch: np.ndarray,
    category: str,
    rng: np.random.Generator,
    alpha: np.ndarray | None = None,
    image_id: str = "",
    cfg: CompositorConfig | None = None,
):
    """Scale the patch by a uniform factor, place it fully inside the background,
    redraw the position while it overlaps existing boxes beyond overlap_max
    (keeping the lowest-overlap attempt), and composite.

    Returns (image, annotation, attempts_used).
    """
    cfg = cfg or CompositorConfig()
    bg_h, bg_w = background.shape[:2]
    p_h, p_w = patch.shape[:2]

    fit_bound = min(cfg.scale_max, bg_w / p_w, bg_h / p_h)
    if fit_bound < cfg.scale_min:
        raise PatchTooLarge(f"patch {p_w}x{p_h} cannot fit in {bg_w}x{bg_h}")
    scale = float(rng.uniform(cfg.scale_min, fit_bound))
    new_w = max(1, min(bg_w, int(round(p_w * scale))))
    new_h = max(1, min(bg_h, int(round(p_h * scale))))
    scaled, scaled_alpha = _scale_nearest(patch, alpha, new_w, new_h)

    best = None  # (max_iou, box)
    attempts = 0
    for attempts in range(1, cfg.max_attempts + 1):
        x = int(rng.integers(0, bg_w - new_w + 1))
        y = int(rng.integers(0, bg_h - new_h + 1))
        box = BBox(x, y, x + new_w, y + new_h)
        worst = max((bbox_iou(box, a.bbox) for a in existing), default=0.0)
        if best is None or worst < best[0]:
            best = (worst, box)
        if worst <= cfg.overlap_max:
            break
    _, box = best

    out = background.copy()
    region = out[box.y_min : box.y_max, box.x_min : box.x_max]
    if scaled_alpha is None:
        region[...] = scaled
    else:
        region[scaled_alpha] = scaled[scaled_alpha]
    return out, Annotation(image_id=image_id, bbox=box, category=category), attempts


def load_image(path) -> np.ndarray:
    if not os.path.exists(path):
        raise MissingAsset(str(path))
    return np.asarray(Image.open(path).convert("RGB"))


def load_mask(path) -> np.ndarray:
    if not os.path.exists(path):
        raise MissingAsset(str(path))
    return np.asarray(Image.open(path).convert("L"))


@dataclass
class SynthesisInstance:
    """One selected crop to composite: resolved asset paths plus provenance."""

    ordinal: int
    category: str
    image_path: str
    mask_path: str
    source_id: str


def coco_annotations(
    image_sizes: dict[str, tuple[int, int]],
    annotations: list[Annotation],
    categories: list[str],
) -> dict:
    """COCO-style dict: images[], annotations[] (xywh boxes), categories[]."""
    cat_ids = {name: i + 1 for i, name in enumerate(categories)}
    images = [
        {"id": i + 1, "file_name": f"{image_id}.png", "width": wh[0], "height": wh[1]}
        for i, (image_id, wh) in enumerate(sorted(image_sizes.items()))
    ]
    img_ids = {img["file_name"][:-4]: img["id"] for img in images}
    anns = [
        {
            "id": i + 1,
            "image_id": img_ids[a.image_id],
            "category_id": cat_ids[a.category],
            "bbox": a.bbox.to_xywh(),
            "area": a.bbox.area,
            "iscrowd": 0,
        }
        for i, a in enumerate(annotations)
    ]
    cats = [{"id": cat_ids[c], "name": c} for c in categories]
    return {"images": images, "annotations": anns, "categories": cats}


def synthesize_dataset(
    instances: list[SynthesisInstance],
    backgrounds: list[str],
    out_dir: str,
    cfg: CompositorConfig | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> dict:
    """Composite one output image per instance; write images, a COCO-style
    annotations.json, and a run report of skips and placement retries.

    RNG streams derive from (seed, ordinal) so output is independent of
    scheduling; identical seeds give byte-identical annotation JSON.
    """
    cfg = cfg or CompositorConfig()
    if not backgrounds:
        raise EmptyBackgroundPool("no background images")
    os.makedirs(os.path.join(out_dir, "images"), exist_ok=True)

    def compose_one(inst: SynthesisInstance):
        rng = np.random.default_rng(np.random.SeedSequence([seed, inst.ordinal]))
        bg_index = int(rng.integers(len(backgrounds)))
        bg_path = backgrounds[bg_index]
        background = load_image(bg_path)
        image = load_image(inst.image_path)
        mask = load_mask(inst.mask_path)
        if mask.shape != image.shape[:2]:
            raise MissingAsset(
                f"mask {inst.mask_path} is {mask.shape}, image is {image.shape[:2]}"
            )
        binary = binarize_mask(mask, cfg.threshold)
        try:
            box = min_enclosing_box(binary)
        except EmptyMask:
            return None, {"ordinal": inst.ordinal, "source_id": inst.source_id}
        patch, alpha = crop(image, box, cfg.mode, binary)
        image_id = f"synth_{inst.ordinal:06d}_{inst.category}"
        composed, ann, attempts = paste(
            background,
            [],
            patch,
            inst.category,
            rng,
            alpha=alpha,
            image_id=image_id,
            cfg=cfg,
        )
        out_path = os.path.join(out_dir, "images", f"{image_id}.png")
        Image.fromarray(composed).save(out_path)
        size = (composed.shape[1], composed.shape[0])
        return (image_id, size, ann, attempts, os.path.basename(bg_path)), None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(compose_one, instances))
    else:
        results = [compose_one(i) for i in instances]

    image_sizes: dict[str, tuple[int, int]] = {}
    annotations: list[Annotation] = []
    skipped = []
    retries = []
    backgrounds_used = []
    for ok, skip in results:
        if skip is not None:
            skipped.append(skip)
            continue
        image_id, size, ann, attempts, bg_name = ok
        image_sizes[image_id] = size
        annotations.append(ann)
        backgrounds_used.append({"image_id": image_id, "background": bg_name})
        if attempts > 1:
            retries.append({"image_id": image_id, "attempts": attempts})

    categories = sorted({i.category for i in instances})
    coco = coco_annotations(image_sizes, annotations, categories)
    ann_path = os.path.join(out_dir, "annotations.json")
    with open(ann_path, "w", encoding="utf-8") as f:
        json.dump(coco, f, indent=2)
        f.write("\n")
    report = {
        "instances": len(instances),
        "composed": len(annotations),
        "skipped_empty_mask": skipped,
        "placement_retries": retries,
        "backgrounds_used": backgrounds_used,
    }
    with open(os.path.join(out_dir, "run_report.json"), "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
        f.write("\n")
    return report
