"""Embed a directory of images into an EMB1 file, one row per manifest entry."""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .common import (
    ImageUnreadable,
    ModelUnavailable,
    get_embedder,
    load_rgb,
    read_manifest,
    write_emb1,
    write_manifest,
)


def embed_images(image_dir, manifest_path, out_emb, out_manifest, model, dim=8):
    entries = read_manifest(manifest_path)
    embedder = get_embedder(model, dim=dim)
    rows = []
    out_entries = []
    for e in sorted(entries, key=lambda e: e["row_index"]):
        path = os.path.join(image_dir, e["image_id"] + ".png")
        pixels = load_rgb(path)
        rows.append(embedder.embed_image(pixels))
        h, w = pixels.shape[:2]
        out_entries.append({**e, "width": w, "height": h})
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), embedder.dim)
    write_emb1(out_emb, data)
    write_manifest(out_manifest, out_entries)
    return len(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="image directory")
    parser.add_argument("--manifest", required=True, help="input JSONL manifest")
    parser.add_argument("--output", required=True, help="output EMB1 path")
    parser.add_argument("--output-manifest", help="defaults to <output>.jsonl")
    parser.add_argument("--model", default="debug-hash")
    parser.add_argument("--dim", type=int, default=8, help="debug-hash output dim")
    args = parser.parse_args(argv)
    out_manifest = args.output_manifest or os.path.splitext(args.output)[0] + ".jsonl"
    try:
        count = embed_images(
            args.input, args.manifest, args.output, out_manifest, args.model, args.dim
        )
    except (ModelUnavailable, ImageUnreadable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"embedded {count} images -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
