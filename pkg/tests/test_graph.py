import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sevq.errors import DataError
from sevq.graph import (
    attach_query,
    build_graph,
    dump_edges_csv,
    induced_subgraph,
)

from .oracles import dense_cosine_graph

finite_features = hnp.arrays(
    dtype=np.float64,
    shape=st.tuples(st.integers(2, 12), st.integers(1, 6)),
    elements=st.floats(-5, 5, allow_nan=False).filter(lambda v: abs(v) > 1e-3),
)


def test_rejects_non_2d():
    with pytest.raises(DataError, match="2-d"):
        build_graph(np.ones(3), 0.2)


def test_rejects_empty():
    with pytest.raises(DataError):
        build_graph(np.ones((0, 4)), 0.2)


def test_reports_nan_coordinates():
    X = np.ones((3, 3))
    X[1, 2] = np.nan
    with pytest.raises(DataError, match="row 1, column 2"):
        build_graph(X, 0.2)


def test_rejects_zero_norm_rows_by_index():
    X = np.ones((3, 2))
    X[2] = 0.0
    with pytest.raises(DataError, match=r"\[2\]"):
        build_graph(X, 0.2)


@pytest.mark.parametrize("tau", [-0.1, 1.0, 1.5])
def test_tau_range(tau):
    with pytest.raises(DataError, match="tau"):
        build_graph(np.eye(3), tau)


def test_no_self_loops_and_symmetry():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 8))
    G = build_graph(X, 0.1)
    dense = G.adj.toarray()
    assert np.all(np.diag(dense) == 0.0)
    assert np.array_equal(dense, dense.T)


def test_negative_and_zero_similarities_are_absent():
    X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    G = build_graph(X, 0.0)
    assert G.volume == 0.0
    assert G.adj.nnz == 0


def test_threshold_is_inclusive():
    # rows at exactly 45 degrees: cosine 0.7071...
    X = np.array([[1.0, 0.0], [1.0, 1.0]])
    c = 1.0 / np.sqrt(2.0)
    G = build_graph(X, c)
    assert G.adj.nnz == 2
    assert np.isclose(G.adj[0, 1], c)
    G2 = build_graph(X, c + 1e-9)
    assert G2.adj.nnz == 0


@settings(max_examples=40, deadline=None)
@given(X=finite_features, tau=st.floats(0.0, 0.9))
def test_matches_dense_oracle(X, tau):
    G = build_graph(X, tau)
    W = dense_cosine_graph(X, tau)
    assert np.allclose(G.adj.toarray(), W, atol=1e-12)
    assert np.allclose(G.degrees, W.sum(axis=1), atol=1e-12)
    assert np.isclose(G.volume, W.sum(), atol=1e-12)


def test_blockwise_sweep_equals_direct():
    # more rows than one similarity block to cover the block boundary
    rng = np.random.default_rng(1)
    X = rng.standard_normal((1030, 4))
    G = build_graph(X, 0.5)
    Xn = X / np.linalg.norm(X, axis=1)[:, None]
    sims = Xn @ Xn.T
    np.fill_diagonal(sims, 0.0)
    expected = np.where((sims >= 0.5) & (sims > 0), sims, 0.0)
    assert np.allclose(G.adj.toarray(), expected, atol=1e-12)


def test_isolated_vertices_stay_in_graph():
    X = np.array([[1.0, 0.0], [1.0, 0.05], [0.0, 1.0]])
    G = build_graph(X, 0.9)
    assert G.n == 3
    assert G.degrees[2] == 0.0


def test_neighbors_ascending(two_edge_graph):
    ids, w = two_edge_graph.neighbors(1)
    assert ids.tolist() == [0]
    assert w.tolist() == [1.0]


def test_edge_list_upper_lexicographic():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((20, 3))
    G = build_graph(X, 0.0)
    i, j, w = G.edge_list()
    assert np.all(i < j)
    order = np.lexsort((j, i))
    assert np.array_equal(order, np.arange(len(i)))
    assert len(i) * 2 == G.adj.nnz


def test_attach_query_matches_stacked_graph():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((15, 5))
    x = rng.standard_normal(5)
    q = attach_query(A, x, 0.3)
    G = build_graph(np.vstack([A, x]), 0.3)
    ids, w = G.neighbors(15)
    assert np.array_equal(q.anchors, ids)
    assert np.allclose(q.weights, w, atol=1e-12)
    assert np.isclose(q.degree, w.sum(), atol=1e-12)


def test_attach_query_rejects_zero_query():
    with pytest.raises(DataError, match="zero-norm"):
        attach_query(np.eye(3), np.zeros(3), 0.2)


def test_attach_query_dimension_mismatch():
    with pytest.raises(DataError, match="dimension"):
        attach_query(np.eye(3), np.ones(4), 0.2)


def test_induced_subgraph_matches_dense():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 4))
    G = build_graph(X, 0.0)
    keep = np.array([3, 1, 7, 19, 19])
    S = induced_subgraph(G, keep)
    v = np.unique(keep)
    dense = G.adj.toarray()[np.ix_(v, v)]
    assert np.allclose(S.adj.toarray(), dense, atol=1e-12)
    assert np.allclose(S.degrees, dense.sum(axis=1), atol=1e-12)


def test_induced_subgraph_range_check():
    G = build_graph(np.eye(3), 0.2)
    with pytest.raises(DataError, match="vertex ids"):
        induced_subgraph(G, np.array([0, 5]))


def test_dump_edges_csv_round_trip(tmp_path, two_edge_graph):
    path = tmp_path / "edges.csv"
    dump_edges_csv(two_edge_graph, str(path))
    lines = path.read_text().splitlines()
    assert lines == ["0,1,1.0", "2,3,1.0"]
