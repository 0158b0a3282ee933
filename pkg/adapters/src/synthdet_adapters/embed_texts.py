"""Embed text prompts into an EMB1 file.

Input is either the pipeline's prompts JSON ({"prompts": {category: [...]}}),
where each category's first prompt is embedded as its text row, or a JSONL
file of {"text": ..., "category": ...} records embedded line by line.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .common import ModelUnavailable, get_embedder, write_emb1, write_manifest


def _read_inputs(path):
    with open(path, "r", encoding="utf-8") as f:
        raw = f.read()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and "prompts" in doc:
        return [
            {"text": prompts[0] if prompts else cat, "category": cat}
            for cat, prompts in doc["prompts"].items()
        ]
    return [json.loads(line) for line in raw.splitlines() if line.strip()]


def embed_texts(input_path, out_emb, out_manifest, model, dim=8):
    records = _read_inputs(input_path)
    embedder = get_embedder(model, dim=dim)
    rows = [embedder.embed_text(r["text"]) for r in records]
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), embedder.dim)
    write_emb1(out_emb, data)
    write_manifest(
        out_manifest,
        [
            {
                "row_index": i,
                "image_id": f"text_{r.get('category', i)}",
                "category": r.get("category", ""),
                "source": "text",
                "text": r["text"],
            }
            for i, r in enumerate(records)
        ],
    )
    return len(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="embed text prompts to EMB1")
    parser.add_argument("--input", required=True, help="prompts JSON or JSONL")
    parser.add_argument("--output", required=True, help="output EMB1 path")
    parser.add_argument("--output-manifest", help="defaults to <output>.jsonl")
    parser.add_argument("--model", default="debug-hash")
    parser.add_argument("--dim", type=int, default=8)
    args = parser.parse_args(argv)
    out_manifest = args.output_manifest or os.path.splitext(args.output)[0] + ".jsonl"
    try:
        count = embed_texts(args.input, args.output, out_manifest, args.model, args.dim)
    except ModelUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"embedded {count} texts -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
