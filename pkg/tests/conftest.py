import json
import os

import numpy as np
import pytest
from PIL import Image

from synthdet import embstore


def write_emb(path, data):
    embstore.save_embeddings(
        embstore.EmbeddingMatrix(np.asarray(data, dtype=np.float32)), path
    )


def write_manifest(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")


@pytest.fixture
def fixture_assets(tmp_path):
    """Bundled-style asset tree: 5 categories x 30 candidates of 8-D embeddings,
    paired 32x32 images + masks, 10 backgrounds, text embeddings, and a
    detections + crops pair for the filter stage."""
    rng = np.random.default_rng(12345)
    root = tmp_path / "assets"
    for sub in ("embeddings", "images", "masks", "backgrounds"):
        (root / sub).mkdir(parents=True)

    base = ["person", "car", "dog"]
    novel = ["bird", "bus", "cow", "motorbike", "sofa"]
    all_cats = base + novel

    # one anchor direction per category in 8-D, plus noise per candidate
    anchors = {c: rng.normal(size=8) for c in all_cats}
    for cat in novel:
        vecs = np.stack(
            [anchors[cat] + 0.3 * rng.normal(size=8) for _ in range(30)]
        ).astype(np.float32)
        write_emb(root / "embeddings" / f"{cat}.gen.emb", vecs)
        write_manifest(
            root / "embeddings" / f"{cat}.gen.jsonl",
            [
                {
                    "row_index": i,
                    "image_id": f"{cat}_{i:03d}",
                    "category": cat,
                    "source": "generated",
                }
                for i in range(30)
            ],
        )
        real = np.stack(
            [anchors[cat] + 0.2 * rng.normal(size=8) for _ in range(3)]
        ).astype(np.float32)
        write_emb(root / "embeddings" / f"{cat}.real.emb", real)
        for i in range(30):
            img = rng.integers(60, 255, size=(32, 32, 3), dtype=np.uint8)
            Image.fromarray(img).save(root / "images" / f"{cat}_{i:03d}.png")
            mask = np.zeros((32, 32), dtype=np.uint8)
            mask[6:26, 8:24] = 255
            Image.fromarray(mask, mode="L").save(root / "masks" / f"{cat}_{i:03d}.png")

    for b in range(10):
        bg = np.full((64, 64, 3), 10 + b, dtype=np.uint8)
        Image.fromarray(bg).save(root / "backgrounds" / f"bg_{b:02d}.png")

    write_emb(
        root / "embeddings" / "texts.emb",
        np.stack([anchors[c] for c in all_cats]).astype(np.float32),
    )
    write_manifest(
        root / "embeddings" / "texts.jsonl",
        [
            {"row_index": i, "image_id": f"text_{c}", "category": c, "source": "text"}
            for i, c in enumerate(all_cats)
        ],
    )

    # detections over a small hand-built ground truth
    cat_ids = {c: i + 1 for i, c in enumerate(all_cats)}
    gt = {
        "images": [
            {"id": 1, "file_name": "val_000.png", "width": 64, "height": 64},
            {"id": 2, "file_name": "val_001.png", "width": 64, "height": 64},
        ],
        "annotations": [
            {"id": 1, "image_id": 1, "category_id": cat_ids["bird"], "bbox": [4, 4, 20, 20], "area": 400, "iscrowd": 0},
            {"id": 2, "image_id": 2, "category_id": cat_ids["bus"], "bbox": [10, 10, 30, 20], "area": 600, "iscrowd": 0},
        ],
        "categories": [{"id": v, "name": k} for k, v in cat_ids.items()],
    }
    with open(root / "ground_truth.json", "w") as f:
        json.dump(gt, f)

    dets = [
        {"image_id": "val_000", "category_id": cat_ids["bird"], "bbox": [4, 4, 20, 20], "score": 0.9},
        {"image_id": "val_001", "category_id": cat_ids["bus"], "bbox": [10, 10, 30, 20], "score": 0.8},
        {"image_id": "val_001", "category_id": cat_ids["cow"], "bbox": [40, 40, 10, 10], "score": 0.7},
    ]
    with open(root / "detections.json", "w") as f:
        json.dump(dets, f)
    # crops: TPs near their category anchor, the FP near a base anchor
    crops = np.stack(
        [anchors["bird"], anchors["bus"], anchors["person"]]
    ).astype(np.float32)
    write_emb(root / "crops.emb", crops)

    return {
        "root": str(root),
        "base": base,
        "novel": novel,
    }
