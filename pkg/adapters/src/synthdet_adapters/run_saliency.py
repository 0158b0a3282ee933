"""Produce 8-bit grayscale saliency masks for every image in a directory.

The debug-luminance model marks above-median-luminance pixels as salient,
which is enough to exercise the crop-and-paste pipeline offline; a real
salient-object model can be wired in behind the same flags.
"""
from __future__ import annotations

import argparse
import glob
import os
import sys

import numpy as np
from PIL import Image

from .common import ImageUnreadable, ModelUnavailable, load_rgb, write_manifest


def luminance_saliency(pixels: np.ndarray) -> np.ndarray:
    lum = pixels.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    cut = np.median(lum)
    return np.where(lum >= cut, 255, 0).astype(np.uint8)


def run_saliency(image_dir, out_dir, model="debug-luminance"):
    if model != "debug-luminance":
        raise ModelUnavailable(f"saliency model {model!r} is not wired in")
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    paths = sorted(glob.glob(os.path.join(image_dir, "*.png")))
    for i, path in enumerate(paths):
        pixels = load_rgb(path)
        mask = luminance_saliency(pixels)
        name = os.path.basename(path)
        tmp = os.path.join(out_dir, name + ".tmp")
        Image.fromarray(mask, mode="L").save(tmp, format="PNG")
        os.replace(tmp, os.path.join(out_dir, name))
        entries.append(
            {
                "row_index": i,
                "image_id": os.path.splitext(name)[0],
                "category": "",
                "source": "generated",
                "width": pixels.shape[1],
                "height": pixels.shape[0],
            }
        )
    write_manifest(os.path.join(out_dir, "masks.jsonl"), entries)
    return len(paths)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="image directory")
    parser.add_argument("--output", required=True, help="mask output directory")
    parser.add_argument("--model", default="debug-luminance")
    args = parser.parse_args(argv)
    try:
        count = run_saliency(args.input, args.output, args.model)
    except (ModelUnavailable, ImageUnreadable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} masks -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
