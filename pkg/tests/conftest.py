import numpy as np
import pytest
import scipy.sparse as sp

from sevq.graph import FeatureGraph


def graph_from_dense(W: np.ndarray, tau: float = 0.0) -> FeatureGraph:
    """FeatureGraph over an explicit symmetric weight matrix."""
    W = np.asarray(W, dtype=np.float64)
    assert np.allclose(W, W.T) and np.all(np.diag(W) == 0.0)
    adj = sp.csr_matrix(W)
    adj.sort_indices()
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    return FeatureGraph(adj=adj, degrees=degrees, volume=float(degrees.sum()), tau=tau)


def two_unit_edges_dense() -> np.ndarray:
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 0] = 1.0
    W[2, 3] = W[3, 2] = 1.0
    return W


def planted_cliques_dense(
    n_cliques: int = 3, size: int = 6, internal: float = 1.0, inter: float = 0.05
) -> np.ndarray:
    n = n_cliques * size
    W = np.full((n, n), inter)
    for c in range(n_cliques):
        lo, hi = c * size, (c + 1) * size
        W[lo:hi, lo:hi] = internal
    np.fill_diagonal(W, 0.0)
    return W


def random_weighted_dense(rng: np.random.Generator, n: int, p: float = 0.4) -> np.ndarray:
    """Random symmetric weight matrix with at least one edge."""
    while True:
        mask = rng.random((n, n)) < p
        W = np.where(mask, rng.uniform(0.1, 2.0, (n, n)), 0.0)
        W = np.triu(W, 1)
        W = W + W.T
        if n == 1 or W.sum() > 0:
            return W


def mixture_features(
    seed: int = 0,
    components: int = 5,
    per_component: int = 100,
    dims: int = 16,
    scale: float = 0.05,
) -> np.ndarray:
    """Well-separated Gaussian mixture on orthogonal unit means."""
    rng = np.random.default_rng(seed)
    means = np.eye(dims)[:components]
    return np.vstack(
        [m + scale * rng.standard_normal((per_component, dims)) for m in means]
    )


@pytest.fixture
def two_edge_graph() -> FeatureGraph:
    return graph_from_dense(two_unit_edges_dense())


@pytest.fixture
def single_edge_graph() -> FeatureGraph:
    W = np.zeros((2, 2))
    W[0, 1] = W[1, 0] = 1.0
    return graph_from_dense(W)


@pytest.fixture
def clique_graph() -> FeatureGraph:
    return graph_from_dense(planted_cliques_dense())


@pytest.fixture
def mixture() -> np.ndarray:
    return mixture_features()
