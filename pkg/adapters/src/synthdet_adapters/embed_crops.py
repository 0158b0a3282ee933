"""Embed the bbox crop of each detection, one EMB1 row per detection in order."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .common import (
    ImageUnreadable,
    ModelUnavailable,
    get_embedder,
    load_rgb,
    write_emb1,
    write_manifest,
)


def crop_detection(image: np.ndarray, bbox) -> np.ndarray:
    x, y, w, h = (int(v) for v in bbox)
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate bbox {bbox}")
    return image[y : y + h, x : x + w]


def embed_crops(image_dir, detections_path, out_emb, out_manifest, model, dim=8):
    with open(detections_path, "r", encoding="utf-8") as f:
        detections = json.load(f)
    embedder = get_embedder(model, dim=dim)
    rows = []
    entries = []
    cache: dict[str, np.ndarray] = {}
    for i, det in enumerate(detections):
        if "bbox" not in det:
            raise ValueError(f"detection {i} missing bbox")
        image_id = str(det["image_id"])
        if image_id not in cache:
            cache[image_id] = load_rgb(os.path.join(image_dir, image_id + ".png"))
        patch = crop_detection(cache[image_id], det["bbox"])
        rows.append(embedder.embed_image(patch))
        entries.append(
            {
                "row_index": i,
                "image_id": f"{image_id}#det{i}",
                "category": str(det.get("category_id", "")),
                "source": "generated",
            }
        )
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), embedder.dim)
    write_emb1(out_emb, data)
    write_manifest(out_manifest, entries)
    return len(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="embed detection crops to EMB1")
    parser.add_argument("--input", required=True, help="image directory")
    parser.add_argument("--detections", required=True, help="COCO-results JSON")
    parser.add_argument("--output", required=True, help="output EMB1 path")
    parser.add_argument("--output-manifest", help="defaults to <output>.jsonl")
    parser.add_argument("--model", default="debug-hash")
    parser.add_argument("--dim", type=int, default=8)
    args = parser.parse_args(argv)
    out_manifest = args.output_manifest or os.path.splitext(args.output)[0] + ".jsonl"
    try:
        count = embed_crops(
            args.input, args.detections, args.output, out_manifest, args.model, args.dim
        )
    except (ModelUnavailable, ImageUnreadable, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"embedded {count} crops -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
