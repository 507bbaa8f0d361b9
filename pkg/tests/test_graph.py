import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphcoarsen.graph import (DisconnectedGraphError, Graph, GraphError, build_graph, incidence,
                                laplacian, pseudoinverse, quadratic_form, random_graph)

from conftest import graphs, path


def test_path_p3():
    g = build_graph([(0, 1, 1), (1, 2, 1)])
    assert (g.n, g.m) == (3, 2)


def test_duplicates_summed():
    g = build_graph([(0, 1, 2), (1, 0, 3)])
    assert g.m == 1 and g.weight(0, 1) == 5.0 and g.weight(1, 0) == 5.0


def test_self_loop_dropped_with_count():
    with pytest.warns(UserWarning):
        g = build_graph([(0, 0, 4), (0, 1, 1)])
    assert g.m == 1 and g.weight(0, 1) == 1.0
    assert g.self_loops_dropped == 1


def test_negative_weight_rejected_names_edge():
    with pytest.raises(GraphError, match="1"):
        build_graph([(0, 1, 1), (1, 2, -2)])


def test_id_beyond_declared_n_rejected():
    with pytest.raises(GraphError):
        build_graph([(0, 5, 1)], n=3)


def test_one_based_ids():
    g = build_graph([(1, 2, 1), (2, 3, 1)], base=1)
    assert g.n == 3 and g.weight(0, 1) == 1


def test_isolated_nodes_allowed():
    g = build_graph([(0, 1)], n=4)
    assert g.isolated_nodes().tolist() == [2, 3]


def test_laplacian_p3():
    L = laplacian(path(3)).toarray()
    np.testing.assert_array_equal(L, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


def test_laplacian_weighted_triangle():
    g = build_graph([(0, 1, 2), (0, 2, 3), (1, 2, 4)])
    L = laplacian(g).toarray()
    a = np.array([[0, 2, 3], [2, 0, 4], [3, 4, 0]], float)
    np.testing.assert_array_equal(L, np.diag([5, 6, 7]) - a)


def test_normalized_isolated_row_zero():
    g = build_graph([(0, 1, 2)], n=3)
    N = laplacian(g, "normalized").toarray()
    np.testing.assert_allclose(np.diag(N), [1, 1, 0])
    assert not N[2].any() and not N[:, 2].any()


def test_incidence_single_edge():
    B = incidence(build_graph([(0, 1, 4)])).toarray()
    np.testing.assert_array_equal(B, [[-2], [2]])


def test_quadratic_form_examples():
    L = laplacian(path(3))
    assert quadratic_form(L, np.ones(3)) == 0
    assert quadratic_form(L, [1, 0, 0]) == 1
    w = 2.5
    assert quadratic_form(laplacian(build_graph([(0, 1, w)])), [1, -1]) == 4 * w


def test_quadratic_form_dimension_mismatch():
    with pytest.raises(ValueError):
        quadratic_form(laplacian(path(3)), [1, 2])


def test_matches_networkx_laplacian():
    g = random_graph(30, 0.2, seed=4)
    G = nx.from_scipy_sparse_array(g.adjacency)
    ref = nx.laplacian_matrix(G, nodelist=range(g.n), weight="weight").toarray()
    np.testing.assert_allclose(laplacian(g).toarray(), ref, atol=1e-14)
    ref_n = nx.normalized_laplacian_matrix(G, nodelist=range(g.n), weight="weight").toarray()
    np.testing.assert_allclose(laplacian(g, "normalized").toarray(), ref_n, atol=1e-12)


@given(graphs(n_max=30))
def test_graph_invariants(g):
    a = g.adjacency
    assert (abs(a - a.T)).nnz == 0
    assert a.nnz == 0 or a.data.min() > 0
    assert not a.diagonal().any()
    for i in range(g.n):
        cols = a.indices[a.indptr[i]:a.indptr[i + 1]]
        assert np.all(np.diff(cols) > 0)


@given(graphs(n_max=30), st.integers(0, 1000))
def test_laplacian_properties(g, seed):
    L = laplacian(g)
    M = L.toarray()
    scale = max(1.0, np.abs(M).max())
    assert np.abs(M.sum(1)).max() <= 1e-12 * scale
    off = M - np.diag(np.diag(M))
    assert off.max(initial=0) <= 0 and np.diag(M).min() >= 0
    B = incidence(g)
    assert np.abs((B @ B.T).toarray() - M).max() <= 1e-12 * scale
    x = np.random.default_rng(seed).normal(size=g.n)
    assert quadratic_form(L, x) >= -1e-12
    i, j, w = g.edges()
    assert np.isclose(quadratic_form(L, x), np.sum(w * (x[i] - x[j]) ** 2))
    assert np.linalg.eigvalsh(M).min() >= -1e-10 * scale
    N = laplacian(g, "normalized").toarray()
    deg = g.degrees
    np.testing.assert_allclose(np.diag(N)[deg > 0], 1.0)


def test_from_sparse_rejects_asymmetric():
    with pytest.raises(GraphError):
        Graph.from_sparse(np.array([[0, 1.0], [2.0, 0]]))


def test_require_connected_names_component_count():
    g = build_graph([(0, 1), (2, 3)])
    with pytest.raises(DisconnectedGraphError, match="2"):
        g.require_connected("test")


def test_pseudoinverse_matches_numpy():
    g = random_graph(12, 0.4, seed=1, connected=True)
    P = pseudoinverse(g)
    L = laplacian(g).toarray()
    np.testing.assert_allclose(L @ P @ L, L, atol=1e-10)


def test_random_graph_connected_and_seeded():
    g1 = random_graph(50, 0.02, seed=9, connected=True)
    g2 = random_graph(50, 0.02, seed=9, connected=True)
    assert g1.is_connected()
    assert (abs(g1.adjacency - g2.adjacency)).nnz == 0
