"""Codebook discovery by greedy structural-entropy minimization.

The vanilla minimizer starts from singleton clusters and repeatedly
merges the edge-connected cluster pair whose merge lowers the partition
entropy the most, stopping when no merge is a strict decrease.  Merging
two clusters with no connecting edge can never strictly decrease the
entropy (the combined cut is unchanged while the volume term worsens),
so disconnected pairs are never candidates.  The hierarchical variant
runs the same greedy inside bounded subsets of clusters so that large
graphs stay tractable, doubling the subset size whenever a full round
stalls.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, InternalError
from .entropy import Partition, partition_se
from .graph import FeatureGraph, induced_subgraph

# A merge must beat this threshold to count as a strict entropy decrease.
MERGE_EPS = 1e-12


@dataclass(frozen=True)
class Codebook:
    """Cluster centroids extracted from a partition of training rows."""

    centroids: np.ndarray
    member_counts: np.ndarray
    labels: np.ndarray | None = None
    source_partition: Partition | None = None

    @property
    def K(self) -> int:
        return self.centroids.shape[0]


def _xlog2(v: float) -> float:
    return 0.0 if v <= 0.0 else v * np.log2(v)


def _pair_delta(Va: float, ga: float, Vb: float, gb: float, cab: float, V: float) -> float:
    Vm = Va + Vb
    gm = max(ga + gb - 2.0 * cab, 0.0)
    vol_part = (_xlog2(Va) + _xlog2(Vb) - _xlog2(Vm)) / V
    cut = 0.0
    if ga > 0.0:
        cut += ga * np.log2(Va / V)
    if gb > 0.0:
        cut += gb * np.log2(Vb / V)
    if gm > 0.0:
        cut -= gm * np.log2(Vm / V)
    return vol_part - cut / V


def _greedy_merge(
    G: FeatureGraph, groups: list[list[int]]
) -> tuple[list[list[int]], float, list[float]]:
    """Greedy pairwise merging from an initial grouping.

    Returns the surviving groups, the entropy of the initial grouping,
    and the entropy trace recorded after each accepted merge.  Group
    indices double as cluster ids; a merge keeps the smaller id, so the
    lexicographic tie-break on (a, b) is well defined throughout.
    """
    C = len(groups)
    V = G.volume
    labels = np.empty(G.n, dtype=np.int64)
    for gid, members in enumerate(groups):
        labels[members] = gid

    vols = np.bincount(labels, weights=G.degrees, minlength=C).astype(np.float64)
    coo = G.adj.tocoo()
    la, lb = labels[coo.row], labels[coo.col]
    off = la != lb
    # aggregate inter-cluster cuts over a sparse key set; both edge
    # directions are present, so nbr[a][b] and nbr[b][a] fill together
    pair_key = la[off] * C + lb[off]
    uniq, inv = np.unique(pair_key, return_inverse=True)
    pair_w = np.bincount(inv, weights=coo.data[off])
    nbr: list[dict[int, float]] = [{} for _ in range(C)]
    cuts = np.zeros(C)
    for key, w in zip(uniq, pair_w):
        a, b = int(key // C), int(key % C)
        nbr[a][b] = float(w)
        cuts[a] += w

    se_initial = partition_se(G, Partition.from_labels(G, labels))
    se = se_initial
    trace: list[float] = []
    alive = np.ones(C, dtype=bool)
    ver = np.zeros(C, dtype=np.int64)
    members: list[list[int]] = [list(g) for g in groups]

    heap: list[tuple[float, int, int, int, int]] = []
    for a in range(C):
        for b, cab in nbr[a].items():
            if a < b:
                delta = _pair_delta(vols[a], cuts[a], vols[b], cuts[b], cab, V)
                if delta > MERGE_EPS:
                    heap.append((-delta, a, b, 0, 0))
    heapq.heapify(heap)

    while heap:
        nd, a, b, va, vb = heapq.heappop(heap)
        if not (alive[a] and alive[b]) or ver[a] != va or ver[b] != vb:
            continue
        delta = -nd
        if delta <= MERGE_EPS:
            break
        cab = nbr[a].pop(b)
        nbr[b].pop(a)
        vols[a] += vols[b]
        cuts[a] = max(cuts[a] + cuts[b] - 2.0 * cab, 0.0)
        members[a].extend(members[b])
        members[b] = []
        alive[b] = False
        ver[a] += 1
        for c, w in nbr[b].items():
            merged_w = nbr[a].get(c, 0.0) + w
            nbr[a][c] = merged_w
            del nbr[c][b]
            nbr[c][a] = merged_w
        nbr[b] = {}
        se -= delta
        trace.append(se)
        for c, cab2 in nbr[a].items():
            x, y = (a, c) if a < c else (c, a)
            d2 = _pair_delta(vols[x], cuts[x], vols[y], cuts[y], cab2, V)
            if d2 > MERGE_EPS:
                heapq.heappush(heap, (-d2, x, y, int(ver[x]), int(ver[y])))

    out = [sorted(members[a]) for a in range(C) if alive[a]]
    return out, se_initial, trace


def _partition_from_groups(G: FeatureGraph, groups: list[list[int]]) -> Partition:
    ordered = sorted(groups, key=min)
    labels = np.empty(G.n, dtype=np.int64)
    for k, g in enumerate(ordered):
        labels[g] = k
    return Partition.from_labels(G, labels)


def vanilla_greedy(
    G: FeatureGraph, return_trace: bool = False
) -> Partition | tuple[Partition, list[float]]:
    """Greedy 2-d structural entropy minimization from singletons.

    Result clusters are labeled 0..K-1 in ascending order of their
    minimal vertex id.  With ``return_trace`` the entropy value after
    each accepted merge is returned as well; the trace is strictly
    decreasing.
    """
    if G.volume <= 0.0:
        raise DataError("graph has zero volume; nothing to minimize")
    groups, _, trace = _greedy_merge(G, [[v] for v in range(G.n)])
    P = _partition_from_groups(G, groups)
    return (P, trace) if return_trace else P


def hierarchical_minimize(G: FeatureGraph, n: int = 1024) -> Partition:
    """Subset-bounded greedy minimization.

    Clusters start as singletons.  Each round orders clusters by their
    minimal vertex id, takes consecutive subsets of min(n, remaining)
    clusters, and runs the greedy merger on the subgraph induced by each
    subset's vertices.  Survivors carry to the next round.  A round that
    fits every cluster into one subset is final; a round that changes
    nothing doubles ``n``.  With n >= |V| the result is identical to
    :func:`vanilla_greedy`.
    """
    if n < 2:
        raise ConfigError(f"subset size must be at least 2, got {n}")
    if G.volume <= 0.0:
        raise DataError("graph has zero volume; nothing to minimize")
    groups: list[list[int]] = [[v] for v in range(G.n)]
    n_cur = int(n)
    while True:
        groups.sort(key=min)
        chunks = [groups[i : i + n_cur] for i in range(0, len(groups), n_cur)]
        single = len(chunks) == 1
        nxt: list[list[int]] = []
        changed = False
        for chunk in chunks:
            if len(chunk) == 1:
                nxt.append(chunk[0])
                continue
            verts = np.sort(np.concatenate([np.asarray(g, dtype=np.int64) for g in chunk]))
            Gs = induced_subgraph(G, verts)
            if Gs.volume <= 0.0:
                nxt.extend(chunk)
                continue
            pos = {int(v): k for k, v in enumerate(verts)}
            local = [[pos[v] for v in g] for g in chunk]
            merged, _, _ = _greedy_merge(Gs, local)
            if len(merged) != len(chunk):
                changed = True
            nxt.extend([[int(verts[k]) for k in g] for g in merged])
        groups = nxt
        if single:
            break
        if not changed:
            n_cur *= 2
    return _partition_from_groups(G, groups)


def fold_isolated(G: FeatureGraph, P: Partition, X: np.ndarray) -> Partition:
    """Attach isolated vertices to the cluster of their nearest neighbor.

    Isolated vertices stay singletons during minimization because they
    have no merge candidates.  Before centroid extraction each one joins
    the cluster of its most cosine-similar non-isolated row, breaking
    exact similarity ties toward the lower cluster index.  Labels are
    re-compacted in ascending order of minimal member vertex.
    """
    iso = np.flatnonzero(G.degrees == 0.0)
    if iso.size == 0:
        return P
    non = np.flatnonzero(G.degrees > 0.0)
    if non.size == 0:
        raise DataError("all vertices are isolated; no cluster can absorb them")
    X = np.asarray(X, dtype=np.float64)
    Xn = X / np.linalg.norm(X, axis=1)[:, None]
    sims = Xn[iso] @ Xn[non].T
    best = sims.max(axis=1)
    labels = P.labels.copy()
    non_labels = labels[non]
    big = np.int64(np.iinfo(np.int64).max)
    cand_labels = np.where(sims == best[:, None], non_labels[None, :], big)
    labels[iso] = cand_labels.min(axis=1)
    groups: dict[int, list[int]] = {}
    for v, k in enumerate(labels):
        groups.setdefault(int(k), []).append(v)
    return _partition_from_groups(G, list(groups.values()))


def extract_centroids(P: Partition, X: np.ndarray) -> Codebook:
    """Mean feature vector per cluster, in cluster-id order."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != P.labels.shape[0]:
        raise DataError(
            f"feature rows ({X.shape[0]}) must match partition size ({P.labels.shape[0]})"
        )
    counts = np.bincount(P.labels, minlength=P.K)
    if np.any(counts == 0):
        raise InternalError("partition contains an empty cluster")
    sums = np.zeros((P.K, X.shape[1]))
    np.add.at(sums, P.labels, X)
    return Codebook(
        centroids=sums / counts[:, None],
        member_counts=counts,
        labels=P.labels.copy(),
        source_partition=P,
    )
