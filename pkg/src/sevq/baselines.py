"""Exact and classical baselines: brute-force SE minimum, k-means, RVQ.

The brute-force search enumerates every set partition as a restricted
growth string in lexicographic order, so ties resolve toward the first
enumerated partition and the evaluation count equals the Bell number of
the vertex count.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2

import numpy as np

from .codebook import Codebook
from .entropy import Partition
from .errors import ConfigError, DataError
from .graph import FeatureGraph

_BRUTE_FORCE_MAX = 12


@dataclass(frozen=True)
class ExactResult:
    best_partition: Partition
    best_se: float
    partitions_evaluated: int


def _growth_strings(n: int):
    """Yield all restricted growth strings of length n, lexicographically."""
    a = [0] * n
    b = [0] * n  # b[i] = max(a[:i])
    yield a
    while True:
        i = n - 1
        while i > 0 and a[i] > b[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, n):
            a[j] = 0
            b[j] = max(b[j - 1], a[j - 1])
        yield a


def brute_force_min_se(G: FeatureGraph) -> ExactResult:
    """Exact 2-d structural entropy minimum over all partitions.

    Only feasible for small graphs; refuses more than 12 vertices.
    """
    n = G.n
    if n > _BRUTE_FORCE_MAX:
        raise DataError(f"brute force is capped at {_BRUTE_FORCE_MAX} vertices, got {n}")
    V = G.volume
    if V <= 0.0:
        raise DataError("graph has zero volume; entropy is undefined")
    deg = [float(d) for d in G.degrees]
    ei, ej, ew = G.edge_list()
    edges = list(zip(ei.tolist(), ej.tolist(), ew.tolist()))

    best_se = float("inf")
    best: list[int] | None = None
    count = 0
    for labels in _growth_strings(n):
        count += 1
        L = max(labels) + 1
        vol = [0.0] * L
        for v in range(n):
            vol[labels[v]] += deg[v]
        internal = [0.0] * L
        for i, j, w in edges:
            if labels[i] == labels[j]:
                internal[labels[i]] += 2.0 * w
        se = 0.0
        for v in range(n):
            d = deg[v]
            if d > 0.0:
                se -= (d / V) * log2(d / vol[labels[v]])
        for k in range(L):
            g = vol[k] - internal[k]
            if g > 1e-15:
                se -= (g / V) * log2(vol[k] / V)
        if se < best_se:
            best_se = se
            best = list(labels)
    assert best is not None
    return ExactResult(
        best_partition=Partition.from_labels(G, np.asarray(best, dtype=np.int64)),
        best_se=float(best_se),
        partitions_evaluated=count,
    )


def _squared_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(X * X, axis=1)[:, None]
        - 2.0 * X @ C.T
        + np.sum(C * C, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def _kmeanspp_init(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    T = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[int(rng.integers(T))]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        s = d2.sum()
        if s <= 0.0:
            idx = int(rng.integers(T))
        else:
            idx = int(rng.choice(T, p=d2 / s))
        centers[k] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[k]) ** 2, axis=1))
    return centers


def kmeans(
    X: np.ndarray,
    K: int,
    seed: int | np.random.Generator = 0,
    max_iter: int = 300,
    return_history: bool = False,
) -> Codebook | tuple[Codebook, list[float]]:
    """Lloyd's algorithm with k-means++ seeding, fully seed-deterministic.

    Iterates until assignments are stable or ``max_iter`` passes.  An
    emptied cluster is reseeded at the point currently farthest from its
    assigned center, lowest point index on exact ties.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DataError("k-means needs a non-empty 2-d matrix")
    if not 1 <= K <= X.shape[0]:
        raise DataError(f"K must lie in [1, {X.shape[0]}], got {K}")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(X, K, rng)
    prev = None
    history: list[float] = []
    for _ in range(max_iter):
        d2 = _squared_distances(X, centers)
        labels = np.argmin(d2, axis=1)
        counts = np.bincount(labels, minlength=K)
        for k in np.flatnonzero(counts == 0):
            t = int(np.argmax(d2[np.arange(X.shape[0]), labels]))
            labels[t] = k
            counts = np.bincount(labels, minlength=K)
        history.append(float(np.sum((X - centers[labels]) ** 2)))
        if prev is not None and np.array_equal(labels, prev):
            break
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        centers = sums / counts[:, None]
        prev = labels
    cb = Codebook(centroids=centers, member_counts=counts, labels=labels)
    return (cb, history) if return_history else cb


@dataclass(frozen=True)
class RvqBaseline:
    """Residual quantizer with Euclidean nearest-centroid assignment."""

    stage_centroids: tuple[np.ndarray, ...]

    @property
    def stages(self) -> int:
        return len(self.stage_centroids)

    def encode(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        tokens = np.empty((X.shape[0], self.stages), dtype=np.int64)
        R = X.copy()
        for s, C in enumerate(self.stage_centroids):
            t = np.argmin(_squared_distances(R, C), axis=1)
            tokens[:, s] = t
            R -= C[t]
        return tokens

    def decode(self, tokens: np.ndarray) -> np.ndarray:
        tokens = np.asarray(tokens, dtype=np.int64)
        out = np.zeros((tokens.shape[0], self.stage_centroids[0].shape[1]))
        for s, C in enumerate(self.stage_centroids):
            out += C[tokens[:, s]]
        return out


def euclidean_rvq(
    X: np.ndarray, K: int | list[int], S: int, seed: int = 0
) -> tuple[RvqBaseline, np.ndarray]:
    """Train an S-stage Euclidean residual quantizer.

    ``K`` is one cluster count for every stage or a per-stage list.  All
    stage k-means runs draw from a single generator seeded once, so the
    whole model is a deterministic function of (X, K, S, seed).
    """
    X = np.asarray(X, dtype=np.float64)
    Ks = [int(K)] * S if np.isscalar(K) else [int(k) for k in K]
    if len(Ks) != S:
        raise ConfigError(f"need one K per stage: got {len(Ks)} values for S={S}")
    rng = np.random.default_rng(seed)
    R = X.copy()
    tokens = np.empty((X.shape[0], S), dtype=np.int64)
    stage_centroids: list[np.ndarray] = []
    for s in range(S):
        cb = kmeans(R, Ks[s], seed=rng)
        t = np.argmin(_squared_distances(R, cb.centroids), axis=1)
        tokens[:, s] = t
        R -= cb.centroids[t]
        stage_centroids.append(cb.centroids)
    return RvqBaseline(stage_centroids=tuple(stage_centroids)), tokens
