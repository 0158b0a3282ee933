"""Generate candidate images from a prompts file.

The debug-noise model emits deterministic pseudo-images (seeded by prompt
text and sample index) so downstream stages can run offline; a diffusion
backend can replace it behind the same flags.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np
from PIL import Image

from .common import ModelUnavailable, write_manifest


def _noise_image(prompt: str, index: int, size: int) -> np.ndarray:
    digest = hashlib.sha256(f"{prompt}\x00{index}".encode("utf-8")).digest()
    rng = np.random.default_rng(np.frombuffer(digest, dtype=np.uint64))
    return rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)


def generate_images(prompts_path, out_dir, count, model="debug-noise", size=64):
    if model != "debug-noise":
        raise ModelUnavailable(f"generator {model!r} is not wired in")
    with open(prompts_path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    row = 0
    for category, prompts in doc["prompts"].items():
        for p_idx, prompt in enumerate(prompts):
            for i in range(count):
                image_id = f"{category}_p{p_idx:02d}_{i:03d}"
                pixels = _noise_image(prompt, i, size)
                tmp = os.path.join(out_dir, image_id + ".png.tmp")
                Image.fromarray(pixels).save(tmp, format="PNG")
                os.replace(tmp, os.path.join(out_dir, image_id + ".png"))
                entries.append(
                    {
                        "row_index": row,
                        "image_id": image_id,
                        "category": category,
                        "source": "generated",
                        "prompt": prompt,
                        "width": size,
                        "height": size,
                    }
                )
                row += 1
    write_manifest(os.path.join(out_dir, "images.jsonl"), entries)
    return row


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="prompts JSON")
    parser.add_argument("--output", required=True, help="image output directory")
    parser.add_argument("--count", type=int, default=4, help="images per prompt")
    parser.add_argument("--model", default="debug-noise")
    parser.add_argument("--size", type=int, default=64)
    args = parser.parse_args(argv)
    try:
        total = generate_images(args.input, args.output, args.count, args.model, args.size)
    except ModelUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"generated {total} images -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
