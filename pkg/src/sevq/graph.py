"""Cosine-similarity graphs over feature frames.

A feature matrix becomes an undirected weighted graph: one vertex per
row, an edge wherever the cosine similarity of two rows reaches the
threshold ``tau``.  Negative similarities never create edges, and pairs
with exactly zero similarity are treated as absent since a zero-weight
edge carries no entropy information.  Degrees and the total volume are
cached at construction and are exact sums of the stored weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DataError

# Row-block size for the pairwise similarity sweep; bounds peak memory
# at block * n doubles without affecting the result.
_SIM_BLOCK = 1024


@dataclass(frozen=True)
class FeatureGraph:
    """Sparse symmetric weighted graph with no self-loops.

    ``adj`` stores each undirected edge in both directions with sorted
    column indices, so adjacency lists enumerate neighbors in ascending
    vertex order.
    """

    adj: sp.csr_matrix
    degrees: np.ndarray
    volume: float
    tau: float

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor ids and edge weights of vertex ``i``, ascending."""
        lo, hi = self.adj.indptr[i], self.adj.indptr[i + 1]
        return self.adj.indices[lo:hi], self.adj.data[lo:hi]

    def edge_list(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays (i, j, w) with i < j, one entry per undirected edge."""
        coo = self.adj.tocoo()
        keep = coo.row < coo.col
        order = np.lexsort((coo.col[keep], coo.row[keep]))
        return coo.row[keep][order], coo.col[keep][order], coo.data[keep][order]


@dataclass(frozen=True)
class QueryAttachment:
    """Edges a query vector would contribute if added to a graph.

    ``anchors`` lists the incident vertex ids, ``weights`` the matching
    cosine similarities, and ``degree`` their sum (the degree the query
    vertex would have).
    """

    anchors: np.ndarray
    weights: np.ndarray
    degree: float


def _validated_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError(f"feature matrix must be 2-d and non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        r, c = np.argwhere(~np.isfinite(X))[0]
        raise DataError(f"non-finite feature value at row {r}, column {c}")
    return X


def _unit_rows(X: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DataError(
            f"zero-norm {what} row(s) {zero[:8].tolist()}: cosine similarity is undefined"
        )
    return X / norms[:, None]


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 <= tau < 1.0:
        raise DataError(f"tau must lie in [0, 1), got {tau}")
    return tau


def build_graph(X: np.ndarray, tau: float = 0.2) -> FeatureGraph:
    """Build the cosine-similarity graph of the rows of ``X``.

    An edge (i, j), i != j, exists iff cos(x_i, x_j) >= tau and the
    similarity is strictly positive; its weight is the similarity.
    Vertices whose every similarity falls below the threshold stay in
    the graph as isolated vertices.
    """
    X = _validated_matrix(X)
    tau = _check_tau(tau)
    Xn = _unit_rows(X, "feature")
    n = Xn.shape[0]

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    col_ids = np.arange(n)
    for a in range(0, n, _SIM_BLOCK):
        b = min(a + _SIM_BLOCK, n)
        sims = Xn[a:b] @ Xn.T
        upper = col_ids[None, :] > np.arange(a, b)[:, None]
        keep = upper & (sims >= tau) & (sims > 0.0)
        bi, j = np.nonzero(keep)
        rows.append(bi + a)
        cols.append(j)
        vals.append(sims[bi, j])

    i = np.concatenate(rows)
    j = np.concatenate(cols)
    w = np.concatenate(vals)
    adj = sp.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
        shape=(n, n),
    ).tocsr()
    adj.sort_indices()
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    return FeatureGraph(adj=adj, degrees=degrees, volume=float(degrees.sum()), tau=tau)


def attach_query(anchors: np.ndarray, x: np.ndarray, tau: float) -> QueryAttachment:
    """Edges from query ``x`` to ``anchors`` under the same edge rule."""
    anchors = _validated_matrix(anchors)
    tau = _check_tau(tau)
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != anchors.shape[1]:
        raise DataError(
            f"query has dimension {x.shape[0]}, anchors have {anchors.shape[1]}"
        )
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite query value")
    xn = np.linalg.norm(x)
    if xn == 0.0:
        raise DataError("zero-norm query row: cosine similarity is undefined")
    sims = _unit_rows(anchors, "anchor") @ (x / xn)
    keep = (sims >= tau) & (sims > 0.0)
    idx = np.flatnonzero(keep)
    weights = sims[idx]
    return QueryAttachment(anchors=idx, weights=weights, degree=float(weights.sum()))


def induced_subgraph(G: FeatureGraph, vertices: np.ndarray) -> FeatureGraph:
    """Subgraph on ``vertices`` with original edge weights.

    Vertex k of the result corresponds to sorted(unique(vertices))[k].
    Degrees and volume are recomputed from the surviving edges.
    """
    v = np.unique(np.asarray(vertices, dtype=np.int64))
    if v.size == 0:
        raise DataError("induced subgraph needs at least one vertex")
    if v[0] < 0 or v[-1] >= G.n:
        raise DataError(f"vertex ids must lie in [0, {G.n}), got range [{v[0]}, {v[-1]}]")
    adj = G.adj[v][:, v].tocsr()
    adj.sort_indices()
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    return FeatureGraph(adj=adj, degrees=degrees, volume=float(degrees.sum()), tau=G.tau)


def dump_edges_csv(G: FeatureGraph, path: str) -> None:
    """Write the edge list as ``i,j,w`` rows with i < j."""
    i, j, w = G.edge_list()
    lines = [f"{a},{b},{repr(float(c))}" for a, b, c in zip(i, j, w)]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
