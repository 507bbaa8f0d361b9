import logging

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphcoarsen.graph import GraphError, build_graph, random_graph
from graphcoarsen.matchers import (AlgebraicDistances, CoarseMap, algdist_matching,
                                   algebraic_distances, hem, jacobi_lambda2, lesc, leverage_scores)

from conftest import dense_pinv, graphs, path, star


# ---- HEM

def test_hem_scan_order():
    g = build_graph([(0, 1, 5), (2, 3, 4), (1, 2, 3)])
    c = hem(g)
    assert c.parent.tolist() == [0, 0, 1, 1] and c.n_c == 2


def test_hem_leftover_singleton_attaches():
    c = hem(build_graph([(0, 1, 5), (1, 2, 1)]))
    assert c.parent.tolist() == [0, 0, 0]
    assert c.tags() == ["matched", "matched", "leftover_singleton"]


def test_hem_isolated_node_own_coarse_node():
    c = hem(build_graph([(0, 1)], n=3))
    assert c.parent.tolist() == [0, 0, 1]
    assert c.tags()[2] == "real_singleton"


def test_hem_tie_break_lexicographic():
    # all weights equal: (0,1) is scanned before (1,2) and (2,3)
    c = hem(build_graph([(2, 3), (1, 2), (0, 1)]))
    assert c.parent.tolist() == [0, 0, 1, 1]


def test_hem_leftover_tie_goes_to_lowest_index_neighbor():
    # 4 is adjacent to 0 and 2 with equal weight; pairs (0,1), (2,3)
    g = build_graph([(0, 1, 9), (2, 3, 9), (0, 4, 1), (2, 4, 1)])
    assert hem(g).parent[4] == 0


@given(graphs(n_min=1, n_max=40))
def test_coarse_map_invariants_hem(g):
    c = hem(g)
    c.validate()
    assert c.n_c <= g.n
    assert np.array_equal(np.unique(c.parent), np.arange(c.n_c))
    # matched pairs are edges of g
    for grp, tags in ((grp, c.singleton_log[grp]) for grp in c.groups()):
        core = grp[tags == 0]
        if core.size == 2:
            assert g.weight(*core) > 0


@given(graphs(n_min=2, n_max=40))
def test_hem_matching_is_maximal(g):
    c = hem(g)
    unmatched = set(np.flatnonzero(c.singleton_log != 0).tolist())
    i, j, _ = g.edges()
    assert not any(a in unmatched and b in unmatched for a, b in zip(i.tolist(), j.tolist()))


def test_coarse_map_dict_roundtrip():
    c = hem(random_graph(20, 0.2, seed=1))
    d = CoarseMap.from_dict(c.to_dict())
    assert np.array_equal(d.parent, c.parent) and d.tags() == c.tags()


def test_from_parent_relabels():
    c = CoarseMap.from_parent([7, 7, 3, 9])
    assert c.parent.tolist() == [0, 0, 1, 2] and c.n_c == 3


# ---- leverage scores

def test_k2_pinv_scores():
    s = leverage_scores(build_graph([(0, 1)]), "pinv")
    np.testing.assert_allclose(s.eta, [0.25, 0.25], atol=1e-12)


def test_star_center_more_important():
    s = leverage_scores(star(3), "pinv")
    assert s.eta[0] < s.eta[1:].min()


def test_full_decay_tau0_is_one():
    g = random_graph(15, 0.3, seed=3)
    s = leverage_scores(g, "full_decay", tau=0.0)
    np.testing.assert_allclose(s.eta, 1.0, atol=1e-10)


def test_pinv_matches_dense_pinv_weighted():
    g = random_graph(40, 0.2, seed=7, connected=True)
    s = leverage_scores(g, "pinv")
    np.testing.assert_allclose(s.eta, np.diag(dense_pinv(g)), atol=1e-8)


def test_pinv_truncated_partial_sum():
    g = random_graph(30, 0.3, seed=8, connected=True)
    L = np.diag(g.degrees) - g.to_dense()
    lam, u = np.linalg.eigh(L)
    r = 6
    ref = np.sum(u[:, 1:r] ** 2 / lam[1:r], axis=1)
    np.testing.assert_allclose(leverage_scores(g, "pinv_truncated", r=r).eta, ref, atol=1e-10)


def test_normalized_kind():
    g = random_graph(20, 0.3, seed=2, connected=True)
    d = g.degrees
    N = np.eye(20) - g.to_dense() / np.sqrt(np.outer(d, d))
    s = leverage_scores(g, "pinv", kind="normalized")
    np.testing.assert_allclose(s.eta, np.diag(np.linalg.pinv(N, hermitian=True)), atol=1e-8)


def test_pinv_disconnected_error():
    with pytest.raises(GraphError):
        leverage_scores(build_graph([(0, 1), (2, 3)]), "pinv")


def test_rank_too_large_error():
    with pytest.raises(GraphError):
        leverage_scores(path(4), "decay", r=5)


def test_unknown_variant():
    with pytest.raises(ValueError):
        leverage_scores(path(4), "nope")


@given(graphs(n_min=3, n_max=25), st.floats(0.0, 2.0), st.floats(0.01, 2.0))
def test_decay_monotone_in_tau(g, tau, dt):
    r = g.n - 1
    a = leverage_scores(g, "decay", r=r, tau=tau).eta
    b = leverage_scores(g, "decay", r=r, tau=tau + dt).eta
    assert np.all(b <= a + 1e-12)
    assert np.all(a >= 0)


# ---- LESC

def test_lesc_star_trace():
    g = star(3)
    s = leverage_scores(g, "pinv")
    c = lesc(g, s, n_c_target=3, seed=0)
    # center first, matched with leaf 1 (equal weights, lowest index)
    assert c.parent[0] == c.parent[1]
    assert c.n_c == 3
    assert sorted(c.tags()) == ["matched", "matched", "real_singleton", "real_singleton"]


def test_lesc_star_zero_budget_attaches_all_leaves():
    g = star(3)
    c = lesc(g, leverage_scores(g, "pinv"), n_c_target=1, seed=0)
    assert c.n_c == 1 and (c.parent == 0).all()


def test_lesc_target_below_matched_pairs_logs(caplog):
    g = build_graph([(0, 1), (2, 3), (1, 2), (3, 4)])
    with caplog.at_level(logging.INFO, logger="graphcoarsen"):
        c = lesc(g, np.arange(5.0), n_c_target=1, seed=0)
    assert c.n_c == 2 and "exceed" in caplog.text


def test_lesc_equal_scores_with_singletons_attached_matches_hem_on_path():
    g = path(6)
    c = lesc(g, np.ones(6), n_c_target=3, seed=0)
    assert c.parent.tolist() == hem(g).parent.tolist()


def test_lesc_isolated_node():
    g = build_graph([(0, 1)], n=3)
    c = lesc(g, np.array([0.0, 1.0, 2.0]), 2)
    assert c.tags()[2] == "real_singleton" and c.n_c == 2


def test_lesc_direction_changes_order():
    g = build_graph([(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    eta = np.array([0.0, 1.0, 2.0, 3.0])
    asc = lesc(g, eta, 2, direction="asc")
    desc = lesc(g, eta, 2, direction="desc")
    assert asc.parent[0] == asc.parent[1] and desc.parent[3] == desc.parent[2]


def test_lesc_validation():
    g = path(4)
    with pytest.raises(ValueError):
        lesc(g, np.ones(3), 2)
    with pytest.raises(ValueError):
        lesc(g, np.ones(4), 5)


@given(graphs(n_min=2, n_max=30), st.integers(0, 10_000))
def test_lesc_invariants_and_determinism(g, seed):
    eta = np.random.default_rng(seed).random(g.n)
    target = max(1, g.n // 2)
    a = lesc(g, eta, target, seed=seed)
    b = lesc(g, eta, target, seed=seed)
    a.validate()
    assert np.array_equal(a.parent, b.parent)


# ---- algebraic distances

def test_constant_start_gives_zero():
    d = algebraic_distances(random_graph(20, 0.3, seed=1, connected=True), x0=np.full(20, 0.3), k=7)
    assert np.all(d.s == 0.0)


def test_k2_one_step():
    d = algebraic_distances(build_graph([(0, 1)]), omega=0.5, k=1, x0=[1.0, 0.0])
    np.testing.assert_allclose(d.x, [0.5, 0.5])
    assert d.s.tolist() == [0.0]


def test_hand_two_steps_p3():
    g = path(3)
    d = algebraic_distances(g, omega=0.5, k=2, x0=[1.0, 0.0, 0.0])
    # x1 = (0.5, 0.25, 0), x2 = (0.375, 0.25, 0.125)
    np.testing.assert_allclose(d.x, [0.375, 0.25, 0.125])
    np.testing.assert_allclose(d.s, [0.125, 0.125])


def test_algebraic_distance_errors():
    with pytest.raises(GraphError):
        algebraic_distances(build_graph([(0, 1)], n=3))
    with pytest.raises(ValueError):
        algebraic_distances(path(3), omega=1.0)
    with pytest.raises(ValueError):
        algebraic_distances(path(3), k=0)


def test_algebraic_distances_seeded():
    g = random_graph(30, 0.2, seed=3, connected=True)
    a, b = algebraic_distances(g, seed=4), algebraic_distances(g, seed=4)
    assert np.array_equal(a.s, b.s)


def test_jacobi_lambda2_against_networkx_spectrum():
    g = random_graph(25, 0.3, seed=5, connected=True)
    G = nx.from_scipy_sparse_array(g.adjacency)
    N = nx.normalized_laplacian_matrix(G, nodelist=range(25)).toarray()
    mu = 1 - 0.5 * np.linalg.eigvalsh(N)  # eigenvalues of H for omega = 0.5
    ref = np.sort(np.abs(mu))[::-1][1]
    assert jacobi_lambda2(g, 0.5) == pytest.approx(ref, abs=1e-12)


def _dist(i, j, s):
    return AlgebraicDistances(np.array(i), np.array(j), np.array(s, float), 0.5, 1)


def test_algdist_disjoint_edges():
    g = build_graph([(0, 1), (2, 3)])
    c = algdist_matching(g, _dist([0, 2], [1, 3], [0.1, 0.2]))
    assert c.n_c == 2 and c.parent.tolist() == [0, 0, 1, 1]


def test_algdist_triangle():
    g = build_graph([(0, 1), (0, 2), (1, 2)])
    c = algdist_matching(g, _dist([0, 0, 1], [1, 2, 2], [0.1, 0.2, 0.3]))
    assert c.parent.tolist() == [0, 0, 0]
    assert c.tags()[2] == "leftover_singleton"


def test_algdist_closest_first_differs_from_hem():
    g = build_graph([(0, 1, 10), (1, 2, 1)])
    c = algdist_matching(g, _dist([0, 1], [1, 2], [0.9, 0.1]))
    assert c.parent[1] == c.parent[2] and c.tags()[0] == "leftover_singleton"


def test_algdist_equal_distances_lexicographic():
    g = build_graph([(0, 1), (1, 2), (2, 3)])
    c = algdist_matching(g, _dist([0, 1, 2], [1, 2, 3], [0.5, 0.5, 0.5]))
    assert c.parent.tolist() == [0, 0, 1, 1]


def test_algdist_wrong_graph():
    with pytest.raises(ValueError):
        algdist_matching(path(4), _dist([0], [1], [0.1]))
