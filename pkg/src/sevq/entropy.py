"""Structural entropy of weighted graphs under partitions and encoding trees.

All logarithms are base 2 and every ``0 * log(0)`` term contributes 0.
For a partition P of graph G with volume V, the two-dimensional
structural entropy is

    H(G, P) = - sum_X sum_{v in X} (d_v / V) * log2(d_v / V_X)
              - sum_X (g_X / V) * log2(V_X / V)

where V_X is the cluster volume and g_X its cut.  The per-vertex cut of
a singleton equals its degree because the graphs carry no self-loops.
The incremental deltas below are algebraic rearrangements of direct
entropy differences; tests hold them to the direct evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InternalError
from .graph import FeatureGraph, QueryAttachment


def _xlog2(v: float) -> float:
    """v * log2(v) with the 0 * log(0) = 0 convention."""
    return 0.0 if v <= 0.0 else v * np.log2(v)


def _require_volume(G: FeatureGraph) -> float:
    if G.volume <= 0.0:
        raise DataError("graph has zero volume (no edges); entropy is undefined")
    return G.volume


@dataclass(frozen=True)
class Partition:
    """Partition of graph vertices with cached cluster volumes and cuts.

    ``labels[v]`` is the cluster id of vertex v; ids are contiguous in
    [0, K).  ``vols[k]`` is the sum of member degrees and ``cuts[k]``
    the total weight of edges leaving cluster k.
    """

    labels: np.ndarray
    K: int
    vols: np.ndarray
    cuts: np.ndarray

    @classmethod
    def from_labels(cls, G: FeatureGraph, labels: np.ndarray) -> "Partition":
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (G.n,):
            raise DataError(f"labels must have shape ({G.n},), got {labels.shape}")
        if labels.min(initial=0) < 0:
            raise DataError("cluster labels must be non-negative")
        K = int(labels.max()) + 1 if labels.size else 0
        counts = np.bincount(labels, minlength=K)
        if np.any(counts == 0):
            missing = int(np.flatnonzero(counts == 0)[0])
            raise DataError(f"cluster id {missing} is empty; ids must be contiguous")
        # per-cluster slice sums, not bincount: summation order then matches
        # degrees.sum() exactly, keeping single-cluster SE bit-equal to the
        # one-dimensional entropy
        order = np.argsort(labels, kind="stable")
        bounds = np.searchsorted(labels[order], np.arange(K + 1))
        vols = np.array(
            [G.degrees[order[bounds[k] : bounds[k + 1]]].sum() for k in range(K)]
        )
        coo = G.adj.tocoo()
        same = labels[coo.row] == labels[coo.col]
        internal = np.bincount(
            labels[coo.row[same]], weights=coo.data[same], minlength=K
        )
        cuts = np.maximum(vols - internal, 0.0)
        return cls(labels=labels, K=K, vols=vols, cuts=cuts)

    @classmethod
    def singletons(cls, G: FeatureGraph) -> "Partition":
        d = G.degrees
        return cls(
            labels=np.arange(G.n, dtype=np.int64),
            K=G.n,
            vols=d.copy(),
            cuts=d.copy(),
        )

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)

    def cluster_sets(self) -> list[frozenset[int]]:
        groups: list[list[int]] = [[] for _ in range(self.K)]
        for v, k in enumerate(self.labels):
            groups[k].append(v)
        return [frozenset(g) for g in groups]


@dataclass(frozen=True)
class SEDelta:
    """Entropy change of joining a query to one cluster.

    ``delta`` is the decrease relative to keeping the query as its own
    singleton cluster, so ``resulting_se == baseline_se - delta``.
    """

    cluster_id: int
    delta: float
    resulting_se: float


def one_dim_entropy(G: FeatureGraph) -> float:
    """Shannon entropy of the degree distribution d_i / V."""
    V = _require_volume(G)
    d = G.degrees[G.degrees > 0]
    p = d / V
    return float(-np.sum(p * np.log2(p)))


def partition_se(G: FeatureGraph, P: Partition) -> float:
    """Two-dimensional structural entropy of ``P`` on ``G``."""
    V = _require_volume(G)
    d = G.degrees
    pos = d > 0
    vol_of_vertex = P.vols[P.labels[pos]]
    if np.any(vol_of_vertex <= 0):
        raise InternalError(
            "cluster with zero volume contains a positive-degree vertex; "
            "partition caches are corrupt"
        )
    first = -np.sum((d[pos] / V) * np.log2(d[pos] / vol_of_vertex))
    cpos = P.cuts > 0
    second = -np.sum((P.cuts[cpos] / V) * np.log2(P.vols[cpos] / V))
    return float(first + second)


@dataclass(frozen=True)
class TreeNode:
    """Encoding-tree node covering a vertex set; root has parent None."""

    parent: int | None
    vertices: np.ndarray


@dataclass(frozen=True)
class EncodingTree:
    """Rooted tree whose nodes carry vertex sets.

    Children of each node must partition the parent's set; leaves must
    be singletons and the root must cover all vertices.  Node 0 is the
    root.
    """

    nodes: tuple[TreeNode, ...] = field(default_factory=tuple)

    @classmethod
    def from_partition(cls, P: Partition) -> "EncodingTree":
        """Height-2 tree: root, one child per cluster, singleton leaves."""
        n = P.labels.shape[0]
        nodes = [TreeNode(parent=None, vertices=np.arange(n, dtype=np.int64))]
        for k in range(P.K):
            members = P.members(k)
            cluster_idx = len(nodes)
            nodes.append(TreeNode(parent=0, vertices=members))
            for v in members:
                nodes.append(
                    TreeNode(parent=cluster_idx, vertices=np.array([v], dtype=np.int64))
                )
        return cls(nodes=tuple(nodes))

    @classmethod
    def flat(cls, n: int) -> "EncodingTree":
        """Root with one singleton leaf per vertex (height 1)."""
        nodes = [TreeNode(parent=None, vertices=np.arange(n, dtype=np.int64))]
        for v in range(n):
            nodes.append(TreeNode(parent=0, vertices=np.array([v], dtype=np.int64)))
        return cls(nodes=tuple(nodes))

    def validate(self, n_vertices: int) -> None:
        if not self.nodes:
            raise DataError("encoding tree has no nodes")
        root = self.nodes[0]
        if root.parent is not None:
            raise DataError("node 0 must be the root (parent None)")
        if not np.array_equal(np.sort(root.vertices), np.arange(n_vertices)):
            raise DataError("root must cover every vertex exactly once")
        children: list[list[int]] = [[] for _ in self.nodes]
        for idx, node in enumerate(self.nodes[1:], start=1):
            if node.parent is None or not 0 <= node.parent < idx:
                raise DataError(
                    f"node {idx} must point at an earlier parent, got {node.parent}"
                )
            children[node.parent].append(idx)
        for idx, kids in enumerate(children):
            verts = self.nodes[idx].vertices
            if not kids:
                if verts.shape[0] != 1:
                    raise DataError(f"leaf node {idx} must cover exactly one vertex")
                continue
            merged = np.concatenate([self.nodes[c].vertices for c in kids])
            if merged.shape[0] != verts.shape[0] or not np.array_equal(
                np.sort(merged), np.sort(verts)
            ):
                raise DataError(
                    f"children of node {idx} must partition its vertex set"
                )


def encoding_tree_se(G: FeatureGraph, T: EncodingTree) -> float:
    """Structural entropy sum_{alpha != root} -(g_a / V) log2(V_a / V_parent)."""
    V = _require_volume(G)
    T.validate(G.n)
    vols = np.empty(len(T.nodes))
    cuts = np.empty(len(T.nodes))
    for idx, node in enumerate(T.nodes):
        verts = node.vertices
        vol = float(G.degrees[verts].sum())
        internal = float(G.adj[verts][:, verts].sum())
        vols[idx] = vol
        cuts[idx] = max(vol - internal, 0.0)
    total = 0.0
    for idx, node in enumerate(T.nodes[1:], start=1):
        g = cuts[idx]
        if g <= 0.0:
            continue
        total -= (g / V) * np.log2(vols[idx] / vols[node.parent])
    return float(total)


def _check_cluster_id(P: Partition, k: int) -> None:
    if not 0 <= k < P.K:
        raise DataError(f"cluster id {k} out of range [0, {P.K})")


def _inter_cluster_cut(G: FeatureGraph, P: Partition, a: int, b: int) -> float:
    ma, mb = P.members(a), P.members(b)
    if mb.shape[0] < ma.shape[0]:
        ma, other = mb, a
    else:
        other = b
    sub = G.adj[ma]
    mask = P.labels[sub.indices] == other
    return float(sub.data[mask].sum())


def merge_delta(G: FeatureGraph, P: Partition, a: int, b: int) -> float:
    """Entropy decrease of merging clusters ``a`` and ``b``.

    Positive values mean the merge lowers the partition entropy.  Only
    cluster-level terms change under a merge, which gives the closed
    form below; the per-vertex log(d) terms cancel exactly.
    """
    _check_cluster_id(P, a)
    _check_cluster_id(P, b)
    if a == b:
        raise DataError("merge_delta needs two distinct clusters")
    V = _require_volume(G)
    Va, Vb = float(P.vols[a]), float(P.vols[b])
    ga, gb = float(P.cuts[a]), float(P.cuts[b])
    cab = _inter_cluster_cut(G, P, a, b)
    Vm = Va + Vb
    gm = max(ga + gb - 2.0 * cab, 0.0)
    vol_part = (_xlog2(Va) + _xlog2(Vb) - _xlog2(Vm)) / V
    cut_part = 0.0
    if ga > 0.0:
        cut_part += ga * np.log2(Va / V)
    if gb > 0.0:
        cut_part += gb * np.log2(Vb / V)
    if gm > 0.0:
        cut_part -= gm * np.log2(Vm / V)
    return float(vol_part - cut_part / V)


def _attached_weight_by_cluster(P: Partition, q: QueryAttachment) -> np.ndarray:
    if q.anchors.size == 0:
        return np.zeros(P.K)
    return np.bincount(P.labels[q.anchors], weights=q.weights, minlength=P.K)


def singleton_attach_se(G: FeatureGraph, P: Partition, q: QueryAttachment) -> float:
    """Entropy of P extended with the query as its own cluster.

    Evaluated on the augmented graph that contains the query vertex and
    its attachment edges; with no incident edges this reduces exactly to
    ``partition_se(G, P)``.
    """
    V = _require_volume(G)
    dx = q.degree
    Vp = V + 2.0 * dx
    d2 = G.degrees.copy()
    if q.anchors.size:
        d2[q.anchors] += q.weights
    wby = _attached_weight_by_cluster(P, q)
    vols = P.vols + wby
    cuts = P.cuts + wby
    pos = d2 > 0
    vol_of_vertex = vols[P.labels[pos]]
    if np.any(vol_of_vertex <= 0):
        raise InternalError("zero-volume cluster holds a positive-degree vertex")
    total = -np.sum((d2[pos] / Vp) * np.log2(d2[pos] / vol_of_vertex))
    cpos = cuts > 0
    total -= np.sum((cuts[cpos] / Vp) * np.log2(vols[cpos] / Vp))
    if dx > 0.0:
        # the query cluster: vertex term log2(dx / dx) vanishes
        total -= (dx / Vp) * np.log2(dx / Vp)
    return float(total)


def assign_delta(
    G: FeatureGraph, P: Partition, q: QueryAttachment, i: int
) -> SEDelta:
    """Entropy decrease of moving the attached query into cluster ``i``.

    The baseline keeps the query as a singleton cluster of the augmented
    graph.  A query with no incident edges changes nothing, so its delta
    is 0 for every cluster and callers should fall back to a geometric
    rule.
    """
    _check_cluster_id(P, i)
    V = _require_volume(G)
    baseline = singleton_attach_se(G, P, q)
    dx = q.degree
    if dx <= 0.0:
        return SEDelta(cluster_id=i, delta=0.0, resulting_se=baseline)
    wby = _attached_weight_by_cluster(P, q)
    delta = _join_delta_value(
        float(P.vols[i]), float(P.cuts[i]), float(wby[i]), dx, V
    )
    return SEDelta(cluster_id=i, delta=delta, resulting_se=baseline - delta)


def _join_delta_value(Vi: float, gi: float, wi: float, dx: float, V: float) -> float:
    """Closed form for the singleton-vs-join entropy difference.

    Vi and gi are the cluster volume and cut on the original graph, wi
    the attachment weight into the cluster, dx the query degree.  Vp is
    the augmented volume; Vs/gs describe the cluster before the join and
    Vj/gj after it.
    """
    Vp = V + 2.0 * dx
    Vs = Vi + wi
    gs = gi + wi
    Vj = Vs + dx
    gj = max(gi + dx - wi, 0.0)
    delta = -(dx / Vp) * np.log2(Vj / Vp)
    if Vs > 0.0:
        delta -= (Vs / Vp) * np.log2(Vj / Vs)
    if gs > 0.0:
        delta -= (gs / Vp) * np.log2(Vs / Vp)
    if gj > 0.0:
        delta += (gj / Vp) * np.log2(Vj / Vp)
    return float(delta)


def eq4_closed_form(
    G: FeatureGraph, P: Partition, q: QueryAttachment, i: int
) -> float:
    """Literal four-term closed form of the selection delta.

    Diagnostic only: the normative quantity is the direct entropy
    difference computed by :func:`assign_delta`.  This variant evaluates

        -(g_e / Vp) log2(V_e / Vp) + (g_e' / Vp) log2(V_e' / Vp)
        - (g_e' / Vp) log2(V_e' / V_e) - (d_x / Vp) log2(Vp / V_e)

    on the augmented graph, where e is cluster i before the join and e'
    after it.  Returns NaN when the cluster has zero volume.
    """
    _check_cluster_id(P, i)
    V = _require_volume(G)
    dx = q.degree
    if dx <= 0.0:
        return 0.0
    wby = _attached_weight_by_cluster(P, q)
    wi = float(wby[i])
    Vp = V + 2.0 * dx
    Vs = float(P.vols[i]) + wi
    gs = float(P.cuts[i]) + wi
    Vj = Vs + dx
    gj = max(float(P.cuts[i]) + dx - wi, 0.0)
    if Vs <= 0.0:
        return float("nan")
    value = 0.0
    if gs > 0.0:
        value -= (gs / Vp) * np.log2(Vs / Vp)
    if gj > 0.0:
        value += (gj / Vp) * np.log2(Vj / Vp)
        value -= (gj / Vp) * np.log2(Vj / Vs)
    value -= (dx / Vp) * np.log2(Vp / Vs)
    return float(value)
