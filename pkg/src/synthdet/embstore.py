"""Embedding matrices, their on-disk EMB1 format, and cosine-similarity primitives.

EMB1 layout: magic b"EMB1", u32-LE row count, u32-LE dimension, then
count*dim float32-LE values row-major. The JSONL manifest sidecar binds
row indices to image ids, categories, and a source tag.
"""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimMismatch,
    MalformedHeader,
    ManifestInvalid,
    MissingAsset,
    NonFiniteValue,
    TruncatedData,
    ZeroNormRow,
)

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sII")

SOURCES = ("generated", "real", "text")


@dataclass
class EmbeddingMatrix:
    """N x D float32 feature matrix with an explicit unit-norm flag."""

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError("embedding data must be 2-D")
        if not np.isfinite(self.data).all():
            raise NonFiniteValue("embedding data contains NaN/Inf")
        if self.normalized:
            norms = np.linalg.norm(self.data.astype(np.float64), axis=1)
            if self.count and np.abs(norms - 1.0).max() > 1e-4:
                raise ValueError("normalized flag set but rows are not unit norm")

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass
class ManifestEntry:
    row_index: int
    image_id: str
    category: str
    source: str


@dataclass
class Manifest:
    """Ordered provenance records, one per embedding row."""

    entries: list[ManifestEntry] = field(default_factory=list)

    def __post_init__(self):
        rows = [e.row_index for e in self.entries]
        if sorted(rows) != list(range(len(self.entries))):
            raise ManifestInvalid("row_index values must be exactly 0..count-1")
        ids = [e.image_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ManifestInvalid("duplicate image_id in manifest")
        for e in self.entries:
            if e.source not in SOURCES:
                raise ManifestInvalid(f"unknown source {e.source!r}")

    def __len__(self):
        return len(self.entries)

    def by_row(self, row: int) -> ManifestEntry:
        return self.entries[row] if self.entries[row].row_index == row else next(
            e for e in self.entries if e.row_index == row
        )

    def image_ids(self, rows) -> list[str]:
        return [self.by_row(r).image_id for r in rows]


def load_embeddings(path) -> EmbeddingMatrix:
    """Read an EMB1 file; the result carries normalized=False."""
    try:
        f = open(path, "rb")
    except FileNotFoundError as exc:
        raise MissingAsset(str(path)) from exc
    with f:
        header = f.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise MalformedHeader(f"{path}: file shorter than EMB1 header")
        magic, count, dim = _HEADER.unpack(header)
        if magic != MAGIC:
            raise MalformedHeader(f"{path}: bad magic {magic!r}")
        payload = f.read()
    expected = count * dim * 4
    if len(payload) < expected:
        raise TruncatedData(
            f"{path}: payload {len(payload)} bytes, expected {expected}"
        )
    data = np.frombuffer(payload[:expected], dtype="<f4").reshape(count, dim)
    if not np.isfinite(data).all():
        raise NonFiniteValue(f"{path}: payload contains NaN/Inf")
    return EmbeddingMatrix(data=data.copy(), normalized=False)


def save_embeddings(m: EmbeddingMatrix, path) -> None:
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, m.count, m.dim))
        f.write(np.ascontiguousarray(m.data, dtype="<f4").tobytes())


def load_manifest(path) -> Manifest:
    entries = []
    if not os.path.exists(path):
        raise MissingAsset(str(path))
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            entries.append(
                ManifestEntry(
                    row_index=int(obj["row_index"]),
                    image_id=str(obj["image_id"]),
                    category=str(obj["category"]),
                    source=str(obj["source"]),
                )
            )
    return Manifest(entries=entries)


def save_manifest(manifest: Manifest, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for e in manifest.entries:
            f.write(
                json.dumps(
                    {
                        "row_index": e.row_index,
                        "image_id": e.image_id,
                        "category": e.category,
                        "source": e.source,
                    }
                )
                + "\n"
            )


def l2_normalize(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Divide each row by its Euclidean norm; raises ZeroNormRow on a zero row."""
    norms = np.linalg.norm(m.data.astype(np.float64), axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ZeroNormRow(int(zero[0]))
    out = (m.data.astype(np.float64) / norms[:, None]).astype(np.float32)
    return EmbeddingMatrix(data=out, normalized=True)


def cosine_sim(a, b) -> float:
    """cos angle between two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimMismatch(f"vector dims {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0:
        raise ZeroNormRow(0)
    if nb == 0.0:
        raise ZeroNormRow(1)
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def pairwise_cosine(a: EmbeddingMatrix, b: EmbeddingMatrix) -> np.ndarray:
    """count_a x count_b cosine matrix; accumulation in float64 for determinism."""
    if a.dim != b.dim:
        raise DimMismatch(f"dims {a.dim} vs {b.dim}")
    da = a.data.astype(np.float64)
    db = b.data.astype(np.float64)
    na = np.linalg.norm(da, axis=1)
    nb = np.linalg.norm(db, axis=1)
    if (na == 0.0).any():
        raise ZeroNormRow(int(np.nonzero(na == 0.0)[0][0]))
    if (nb == 0.0).any():
        raise ZeroNormRow(int(np.nonzero(nb == 0.0)[0][0]))
    sims = (da / na[:, None]) @ (db / nb[:, None]).T
    return np.clip(sims, -1.0, 1.0)
