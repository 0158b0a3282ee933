"""Shared plumbing for the adapter scripts: EMB1/manifest writers, atomic
file output, and the model registry.

Adapters never post-process embeddings (no normalization); that is the
pipeline's job, so fixtures and real model outputs follow one code path.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile

import numpy as np
from PIL import Image


class ModelUnavailable(Exception):
    pass


class ImageUnreadable(Exception):
    pass


EMB1_MAGIC = b"EMB1"


def write_emb1(path, data: np.ndarray) -> None:
    """Atomic EMB1 write: magic, u32-LE count, u32-LE dim, f32-LE row-major."""
    data = np.ascontiguousarray(data, dtype="<f4")
    payload = struct.pack("<4sII", EMB1_MAGIC, data.shape[0], data.shape[1])
    payload += data.tobytes()
    _atomic_write_bytes(path, payload)


def write_manifest(path, entries: list[dict]) -> None:
    text = "".join(json.dumps(e) + "\n" for e in entries)
    _atomic_write_bytes(path, text.encode("utf-8"))


def _atomic_write_bytes(path, blob: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_manifest(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def load_rgb(path) -> np.ndarray:
    try:
        return np.asarray(Image.open(path).convert("RGB"))
    except (OSError, ValueError) as exc:
        raise ImageUnreadable(f"{path}: {exc}") from exc


def _hash_rng(blob: bytes) -> np.random.Generator:
    digest = hashlib.sha256(blob).digest()
    return np.random.default_rng(np.frombuffer(digest, dtype=np.uint64))


class HashEmbedder:
    """Deterministic stand-in model: embedding drawn from a byte-hash-seeded
    RNG. Lets the whole pipeline run offline with stable outputs."""

    def __init__(self, dim: int = 8):
        self.dim = dim

    def embed_image(self, pixels: np.ndarray) -> np.ndarray:
        return _hash_rng(np.ascontiguousarray(pixels).tobytes()).normal(size=self.dim)

    def embed_text(self, text: str) -> np.ndarray:
        return _hash_rng(text.encode("utf-8")).normal(size=self.dim)


class ClipEmbedder:
    """Real CLIP encoders via transformers; needs local model weights."""

    def __init__(self, model_id: str):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ModelUnavailable(f"transformers/torch not installed: {exc}") from exc
        try:
            self.model = CLIPModel.from_pretrained(model_id)
            self.processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise ModelUnavailable(f"cannot load {model_id}: {exc}") from exc
        self.dim = self.model.config.projection_dim

    def embed_image(self, pixels: np.ndarray) -> np.ndarray:
        import torch

        inputs = self.processor(images=Image.fromarray(pixels), return_tensors="pt")
        with torch.no_grad():
            feats = self.model.get_image_features(**inputs)
        return feats[0].numpy().astype(np.float64)

    def embed_text(self, text: str) -> np.ndarray:
        import torch

        inputs = self.processor(text=[text], return_tensors="pt", padding=True)
        with torch.no_grad():
            feats = self.model.get_text_features(**inputs)
        return feats[0].numpy().astype(np.float64)


def get_embedder(model_id: str, dim: int = 8):
    if model_id == "debug-hash":
        return HashEmbedder(dim=dim)
    return ClipEmbedder(model_id)
