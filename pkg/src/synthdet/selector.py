"""Representative-sample selection over embedding pools.

Eight strategies: seeded random, max-similarity rankings (to the mean
generated feature, to raw scores, or to the mean real feature), uniform
sampling over sorted scores, and one-per-cluster picks from k-means or
spectral clustering. All ties break toward the lower row index so every
strategy is a pure function of (inputs, seed).
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .embstore import EmbeddingMatrix, cosine_sim, l2_normalize
from .errors import (
    DegenerateAffinity,
    DimMismatch,
    EmptyCluster,
    NonFiniteValue,
    PoolTooSmall,
)


class Strategy(str, Enum):
    RANDOM = "random"
    SYN_MAX = "syn_max"
    CLIP_MAX = "clip_max"
    INSTANCE_MAX = "instance_max"
    CLIP_UNIFORM = "clip_uniform"
    INSTANCE_UNIFORM = "instance_uniform"
    KMEANS_CLUSTER = "kmeans_cluster"
    SPECTRAL_CLUSTER = "spectral_cluster"


@dataclass
class SelectionConfig:
    strategy: Strategy = Strategy.SPECTRAL_CLUSTER
    g: int = 20
    k: int | None = None  # cluster count; defaults to g (one pick per cluster)
    sigma: float | None = None  # spectral kernel width; None = median heuristic
    seed: int = 0
    max_iters: int = 100

    def cluster_count(self) -> int:
        return self.g if self.k is None else self.k


@dataclass
class SelectionResult:
    category: str
    indices: list[int]
    strategy: Strategy
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("selected indices must be distinct")


def category_rng(seed: int, category: str) -> np.random.Generator:
    """Independent RNG stream per (seed, category); parallel order never matters."""
    return np.random.default_rng(
        np.random.SeedSequence([seed, zlib.crc32(category.encode("utf-8"))])
    )


def _check_pool(n: int, g: int) -> None:
    if g > n:
        raise PoolTooSmall(f"need {g} samples from pool of {n}")


def _top_g_desc(scores: np.ndarray, g: int) -> list[int]:
    # stable sort on negated scores keeps lower indices first among ties
    order = np.argsort(-scores, kind="stable")
    return [int(i) for i in order[:g]]


def select_random(n: int, cfg: SelectionConfig, category: str = "") -> SelectionResult:
    _check_pool(n, cfg.g)
    rng = category_rng(cfg.seed, category)
    indices = rng.choice(n, size=cfg.g, replace=False)
    return SelectionResult(category, [int(i) for i in indices], Strategy.RANDOM)


def select_syn_max(
    gen: EmbeddingMatrix, cfg: SelectionConfig, category: str = ""
) -> SelectionResult:
    """Rank rows by cosine similarity to the re-normalized mean generated feature."""
    _check_pool(gen.count, cfg.g)
    mean = gen.data.astype(np.float64).mean(axis=0)
    scores = np.array([cosine_sim(row, mean) for row in gen.data])
    idx = _top_g_desc(scores, cfg.g)
    return SelectionResult(
        category, idx, Strategy.SYN_MAX, {"scores": [float(scores[i]) for i in idx]}
    )


def select_clip_max(
    scores, cfg: SelectionConfig, category: str = ""
) -> SelectionResult:
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise NonFiniteValue("scores contain NaN/Inf")
    _check_pool(scores.shape[0], cfg.g)
    idx = _top_g_desc(scores, cfg.g)
    return SelectionResult(
        category, idx, Strategy.CLIP_MAX, {"scores": [float(scores[i]) for i in idx]}
    )


def select_instance_max(
    gen: EmbeddingMatrix,
    real: EmbeddingMatrix,
    cfg: SelectionConfig,
    category: str = "",
) -> SelectionResult:
    """Rank generated rows by cosine similarity to the mean real-instance feature."""
    if gen.dim != real.dim:
        raise DimMismatch(f"dims {gen.dim} vs {real.dim}")
    _check_pool(gen.count, cfg.g)
    mean = real.data.astype(np.float64).mean(axis=0)
    scores = np.array([cosine_sim(row, mean) for row in gen.data])
    idx = _top_g_desc(scores, cfg.g)
    return SelectionResult(
        category,
        idx,
        Strategy.INSTANCE_MAX,
        {"scores": [float(scores[i]) for i in idx]},
    )


def uniform_sample_sorted(values, g: int) -> list[int]:
    """Endpoint-inclusive even spacing over the value-sorted order.

    Sort rows ascending by value (ties by index), then take sorted
    positions floor(i*(N-1)/(G-1)) for i = 0..G-1 and map back to the
    original row indices.
    """
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise NonFiniteValue("values contain NaN/Inf")
    n = values.shape[0]
    if g < 2:
        raise ValueError("uniform sampling needs g >= 2")
    _check_pool(n, g)
    order = np.argsort(values, kind="stable")
    positions = [(i * (n - 1)) // (g - 1) for i in range(g)]
    return [int(order[p]) for p in positions]


def select_clip_uniform(
    scores, cfg: SelectionConfig, category: str = ""
) -> SelectionResult:
    idx = uniform_sample_sorted(scores, cfg.g)
    return SelectionResult(category, idx, Strategy.CLIP_UNIFORM)


def select_instance_uniform(
    gen: EmbeddingMatrix,
    real: EmbeddingMatrix,
    cfg: SelectionConfig,
    category: str = "",
) -> SelectionResult:
    if gen.dim != real.dim:
        raise DimMismatch(f"dims {gen.dim} vs {real.dim}")
    mean = real.data.astype(np.float64).mean(axis=0)
    values = np.array([cosine_sim(row, mean) for row in gen.data])
    idx = uniform_sample_sorted(values, cfg.g)
    return SelectionResult(category, idx, Strategy.INSTANCE_UNIFORM)


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = x[first]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with chosen centers
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def kmeans(
    features,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    rng: np.random.Generator | None = None,
):
    """Lloyd's algorithm with k-means++ seeding.

    Returns (centers, assignments, wcss_history). Empty clusters are
    re-seeded with the point farthest from its current center, which keeps
    WCSS non-increasing across iterations.
    """
    x = features.data if isinstance(features, EmbeddingMatrix) else np.asarray(features)
    x = x.astype(np.float64)
    n = x.shape[0]
    if k > n:
        raise PoolTooSmall(f"k={k} exceeds pool size {n}")
    if rng is None:
        rng = np.random.default_rng(seed)

    centers = _kmeans_pp_init(x, k, rng)
    assignments = np.full(n, -1, dtype=np.int64)
    wcss_history: list[float] = []
    for _ in range(max_iters):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assignments = d2.argmin(axis=1)
        # repair empty clusters with the globally worst-fit point
        for j in range(k):
            if not (new_assignments == j).any():
                worst = int(d2[np.arange(n), new_assignments].argmax())
                centers[j] = x[worst]
                d2[:, j] = ((x - centers[j]) ** 2).sum(axis=1)
                new_assignments = d2.argmin(axis=1)
        wcss_history.append(float(d2[np.arange(n), new_assignments].sum()))
        if (new_assignments == assignments).all():
            break
        assignments = new_assignments
        for j in range(k):
            centers[j] = x[assignments == j].mean(axis=0)
    return centers, assignments, wcss_history


def median_sigma(x: np.ndarray) -> float:
    """Median pairwise Euclidean distance; data-driven spectral kernel width."""
    n = x.shape[0]
    if n < 2:
        return 1.0
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    iu = np.triu_indices(n, k=1)
    med = float(np.median(np.sqrt(d2[iu])))
    return med if med > 0.0 else 1.0


def spectral_cluster(
    features, k: int, sigma: float | None = None, seed: int = 0
) -> np.ndarray:
    """Normalized-cuts spectral clustering: Gaussian affinity, D^-1/2 A D^-1/2,
    top-k eigenvectors, row-normalize, k-means in the spectral embedding."""
    x = features.data if isinstance(features, EmbeddingMatrix) else np.asarray(features)
    x = x.astype(np.float64)
    n = x.shape[0]
    if k > n:
        raise PoolTooSmall(f"k={k} exceeds pool size {n}")
    if k == n:
        return np.arange(n, dtype=np.int64)
    if sigma is None:
        sigma = median_sigma(x)
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    affinity = np.exp(-d2 / (2.0 * sigma * sigma))
    np.fill_diagonal(affinity, 0.0)
    degrees = affinity.sum(axis=1)
    isolated = np.nonzero(degrees <= 1e-12)[0]
    if isolated.size:
        raise DegenerateAffinity(int(i) for i in isolated)
    d_inv_sqrt = 1.0 / np.sqrt(degrees)
    laplacian = affinity * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]
    eigvals, eigvecs = np.linalg.eigh(laplacian)
    embedding = eigvecs[:, -k:]  # eigenvectors for the k largest eigenvalues
    norms = np.linalg.norm(embedding, axis=1)
    norms[norms == 0.0] = 1.0
    embedding = embedding / norms[:, None]
    _, assignments, _ = kmeans(embedding, k, seed=seed)
    return assignments


def select_cluster_nearest(
    features: EmbeddingMatrix,
    assignments,
    k: int,
    category: str = "",
    strategy: Strategy = Strategy.KMEANS_CLUSTER,
) -> SelectionResult:
    """One pick per cluster: the member with maximum cosine similarity to the
    re-normalized cluster mean; ties toward the lower row index."""
    assignments = np.asarray(assignments)
    indices = []
    diagnostics = {"cluster_sizes": [], "similarities": []}
    for j in range(k):
        members = np.nonzero(assignments == j)[0]
        if members.size == 0:
            raise EmptyCluster(f"cluster {j} has no members")
        mean = features.data[members].astype(np.float64).mean(axis=0)
        sims = np.array([cosine_sim(features.data[m], mean) for m in members])
        best = int(members[int(np.argmax(sims))])  # argmax takes first max: low index
        indices.append(best)
        diagnostics["cluster_sizes"].append(int(members.size))
        diagnostics["similarities"].append(float(sims.max()))
    return SelectionResult(category, indices, strategy, diagnostics)


def run_selection(
    cfg: SelectionConfig,
    category: str,
    gen: EmbeddingMatrix | None = None,
    real: EmbeddingMatrix | None = None,
    scores=None,
) -> SelectionResult:
    """Dispatch one category's selection by strategy.

    gen/real matrices are normalized here if needed; scores are raw per-row
    CLIP scores for the score-based strategies.
    """
    s = cfg.strategy

    def norm(m):
        return m if m.normalized else l2_normalize(m)

    if s == Strategy.RANDOM:
        if gen is None:
            raise ValueError("random strategy needs the generated pool for its size")
        return select_random(gen.count, cfg, category)
    if s == Strategy.SYN_MAX:
        return select_syn_max(norm(gen), cfg, category)
    if s == Strategy.CLIP_MAX:
        return select_clip_max(scores, cfg, category)
    if s == Strategy.INSTANCE_MAX:
        return select_instance_max(norm(gen), norm(real), cfg, category)
    if s == Strategy.CLIP_UNIFORM:
        return select_clip_uniform(scores, cfg, category)
    if s == Strategy.INSTANCE_UNIFORM:
        return select_instance_uniform(norm(gen), norm(real), cfg, category)

    g = norm(gen)
    k = cfg.cluster_count()
    if s == Strategy.KMEANS_CLUSTER:
        rng = category_rng(cfg.seed, category)
        _, assignments, _ = kmeans(g, k, max_iters=cfg.max_iters, rng=rng)
        return select_cluster_nearest(g, assignments, k, category, Strategy.KMEANS_CLUSTER)
    if s == Strategy.SPECTRAL_CLUSTER:
        seed = int(category_rng(cfg.seed, category).integers(2**32))
        assignments = spectral_cluster(g, k, sigma=cfg.sigma, seed=seed)
        return select_cluster_nearest(
            g, assignments, k, category, Strategy.SPECTRAL_CLUSTER
        )
    raise ValueError(f"unknown strategy {s}")
