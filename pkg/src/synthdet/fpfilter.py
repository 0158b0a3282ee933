"""False-positive retrieval: softmax-normalized CLIP scores over a category
name list, thresholded to drop low-scoring detections."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .compositor import BBox
from .embstore import EmbeddingMatrix
from .errors import (
    AlignmentMismatch,
    DimMismatch,
    IndexOutOfRange,
    UnknownCategory,
)


@dataclass
class Detection:
    image_id: str
    bbox: BBox
    category: str
    confidence: float

    def __post_init__(self):
        if not np.isfinite(self.confidence):
            raise ValueError("non-finite confidence")


class ListMode(str, Enum):
    NOVEL_ONLY = "novel"
    BASE_AND_NOVEL = "all"


@dataclass
class CategoryList:
    names: list[str]
    mode: ListMode = ListMode.BASE_AND_NOVEL

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("category names must be unique")
        if len(self.names) < 2:
            raise ValueError("category list needs at least 2 names")
        self._index = {n: i for i, n in enumerate(self.names)}

    def __len__(self):
        return len(self.names)

    def index_of(self, name: str) -> int | None:
        return self._index.get(name)


@dataclass
class FilterConfig:
    threshold: float = 0.1
    mode: ListMode = ListMode.BASE_AND_NOVEL
    temperature: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


def _cosine_row(crop: np.ndarray, texts: EmbeddingMatrix) -> np.ndarray:
    crop = np.asarray(crop, dtype=np.float64).ravel()
    if crop.shape[0] != texts.dim:
        raise DimMismatch(f"crop dim {crop.shape[0]} vs text dim {texts.dim}")
    sims = texts.data.astype(np.float64) @ crop
    return np.clip(sims, -1.0, 1.0)


def softmax_scores(
    crop_embedding, text_embeddings: EmbeddingMatrix, temperature: float = 1.0
) -> np.ndarray:
    """exp(cos_i / tau) normalized over the whole list; sums to 1."""
    sims = _cosine_row(crop_embedding, text_embeddings) / temperature
    e = np.exp(sims - sims.max())
    return e / e.sum()


def clip_score(
    crop_embedding,
    text_embeddings: EmbeddingMatrix,
    target_index: int,
    temperature: float = 1.0,
) -> float:
    """Softmax-normalized similarity of the crop against the target text."""
    if not 0 <= target_index < text_embeddings.count:
        raise IndexOutOfRange(f"target {target_index} outside 0..{text_embeddings.count - 1}")
    return float(softmax_scores(crop_embedding, text_embeddings, temperature)[target_index])


@dataclass
class FilterOutcome:
    kept: list[Detection]
    removed: list[Detection]
    removed_scores: list[float]
    kept_scores: list[float | None] = field(default_factory=list)


def filter_detections(
    detections: list[Detection],
    crop_embeddings: EmbeddingMatrix,
    categories: CategoryList,
    text_embeddings: EmbeddingMatrix,
    cfg: FilterConfig,
) -> FilterOutcome:
    """Keep each detection iff its softmax score at the predicted category is
    >= threshold. crop_embeddings rows align with the detection order.

    In novel-only mode, detections of categories absent from the list bypass
    the filter unscored; in base+novel mode an unknown category is an error.
    """
    if len(detections) != crop_embeddings.count:
        raise AlignmentMismatch(
            f"{len(detections)} detections vs {crop_embeddings.count} embedding rows"
        )
    if len(categories) != text_embeddings.count:
        raise AlignmentMismatch(
            f"{len(categories)} names vs {text_embeddings.count} text rows"
        )
    kept, removed = [], []
    kept_scores, removed_scores = [], []
    for det, crop in zip(detections, crop_embeddings.data):
        target = categories.index_of(det.category)
        if target is None:
            if cfg.mode == ListMode.NOVEL_ONLY:
                kept.append(det)
                kept_scores.append(None)
                continue
            raise UnknownCategory(det.category)
        score = clip_score(crop, text_embeddings, target, cfg.temperature)
        if score >= cfg.threshold:
            kept.append(det)
            kept_scores.append(score)
        else:
            removed.append(det)
            removed_scores.append(score)
    return FilterOutcome(kept, removed, removed_scores, kept_scores)


def load_detections(path, category_names: dict[int, str]) -> list[Detection]:
    """Read a COCO-results JSON list of {image_id, category_id, bbox, score}."""
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    return [
        Detection(
            image_id=str(d["image_id"]),
            bbox=BBox.from_xywh(d["bbox"]),
            category=category_names[int(d["category_id"])],
            confidence=float(d["score"]),
        )
        for d in raw
    ]


def save_detections(dets: list[Detection], path, category_ids: dict[str, int]) -> None:
    out = [
        {
            "image_id": d.image_id,
            "category_id": category_ids[d.category],
            "bbox": d.bbox.to_xywh(),
            "score": d.confidence,
        }
        for d in dets
    ]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(out, f, indent=2)
        f.write("\n")


def save_removed_report(outcome: FilterOutcome, path, category_ids: dict[str, int]) -> None:
    entries = [
        {
            "image_id": d.image_id,
            "category_id": category_ids[d.category],
            "bbox": d.bbox.to_xywh(),
            "score": d.confidence,
            "clip_score": s,
        }
        for d, s in zip(outcome.removed, outcome.removed_scores)
    ]
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"removed": entries}, f, indent=2)
        f.write("\n")
