import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphcoarsen import io as gio
from graphcoarsen.graph import build_graph, laplacian, random_graph
from graphcoarsen.multilevel import (METHODS, LevelError, coarsen_hierarchy, level_seeds,
                                     lifted_laplacian, project_to_level, prolong_from_level,
                                     retained_nodes)

from conftest import graphs, path


def test_p8_hem_three_levels():
    h = coarsen_hierarchy(path(8), "hem", 3)
    assert h.sizes() == [8, 4, 2, 1]
    h.check()


def test_single_level():
    h = coarsen_hierarchy(path(8), "hem", 1)
    assert len(h.graphs) == 2 and h.depth == 1


def test_min_nodes_stop():
    h = coarsen_hierarchy(path(6), "hem", 5, min_nodes=5)
    assert h.sizes() == [6, 3] and "min_nodes" in h.stop_reason


def test_ratio_stop():
    h = coarsen_hierarchy(path(16), "hem", 10, ratio=0.3)
    assert h.sizes() == [16, 8, 4] and "ratio" in h.stop_reason


def test_edgeless_stalls_without_error():
    h = coarsen_hierarchy(build_graph([], n=5), "hem", 3)
    assert h.depth == 0 and "no reduction" in h.stop_reason


def test_single_node_stops():
    h = coarsen_hierarchy(path(2), "hem", 4)
    assert h.sizes() == [2, 1] and "single node" in h.stop_reason


@pytest.mark.parametrize("kw", [dict(levels=0), dict(min_nodes=0), dict(ratio=1.0), dict(ratio=0.0),
                                dict(method="nope"), dict(operator="x")])
def test_bad_arguments(kw):
    args = dict(method="hem", levels=1) | kw
    with pytest.raises(ValueError):
        coarsen_hierarchy(path(4), **args)


def test_level_error_carries_index():
    # algebraic distances need D^-1, which fails on the isolated node
    g = build_graph([(0, 1)], n=3)
    with pytest.raises(LevelError) as err:
        coarsen_hierarchy(g, "algdist", 2)
    assert err.value.level == 0


def test_project_and_prolong_binary_C():
    g = path(7)
    h = coarsen_hierarchy(g, "hem", 2)
    x = np.arange(7.0)
    np.testing.assert_array_equal(project_to_level(h, x, 0), x)
    sizes = h.levels[0].cmap.sizes()
    np.testing.assert_array_equal(project_to_level(h, np.ones(7), 1), sizes)
    y = np.zeros(h.graphs[1].n)
    y[1] = 1
    np.testing.assert_array_equal(prolong_from_level(h, y, 1), (h.levels[0].cmap.parent == 1).astype(float))
    np.testing.assert_array_equal(prolong_from_level(h, x, 0), x)


def test_project_uniform_P_ones():
    h = coarsen_hierarchy(path(9), "hem", 2, operator="uniform_P")
    np.testing.assert_allclose(project_to_level(h, np.ones(9), 1), np.ones(h.graphs[1].n))


def test_index_errors():
    h = coarsen_hierarchy(path(8), "hem", 1)
    with pytest.raises(IndexError):
        project_to_level(h, np.ones(8), 2)
    with pytest.raises(IndexError):
        prolong_from_level(h, np.ones(4), -1)
    with pytest.raises(ValueError):
        project_to_level(h, np.ones(5), 1)


@pytest.mark.parametrize("method", METHODS)
def test_roundtrip_identity_on_coarse_space(method):
    g = random_graph(40, 0.15, seed=8, connected=True)
    h = coarsen_hierarchy(g, method, 2, seed=1)
    for lev in range(h.depth + 1):
        y = np.random.default_rng(lev).normal(size=h.graphs[lev].n)
        back = project_to_level(h, prolong_from_level(h, y, lev), lev, dual=True)
        np.testing.assert_allclose(back, y, atol=1e-10)


def test_level_laplacian_is_CtLC():
    g = random_graph(50, 0.1, seed=3, connected=True)
    h = coarsen_hierarchy(g, "hem", 3)
    for ell, lev in enumerate(h.levels):
        C = lev.op.matrix
        ref = (C.T @ laplacian(h.graphs[ell]).matrix @ C).toarray()
        np.testing.assert_allclose(laplacian(h.graphs[ell + 1]).toarray(), ref, atol=1e-10)


@pytest.mark.parametrize("method", METHODS)
def test_serialization_reproducible(method):
    g = random_graph(45, 0.12, seed=5, connected=True)
    a = gio.dumps(coarsen_hierarchy(g, method, 3, seed=11).to_dict())
    b = gio.dumps(coarsen_hierarchy(g, method, 3, seed=11).to_dict())
    assert a == b


def test_seed_changes_lesc():
    g = random_graph(60, 0.08, seed=2, connected=True)
    a = coarsen_hierarchy(g, "lesc", 1, seed=1).levels[0].cmap.parent
    b = coarsen_hierarchy(g, "lesc", 1, seed=2).levels[0].cmap.parent
    assert not np.array_equal(a, b)


def test_level_seeds_distinct_and_stable():
    s = level_seeds(7, 4)
    assert s == level_seeds(7, 4) and len(set(s)) == 4


def test_lesc_target_first_level():
    g = build_graph([(0, k) for k in range(1, 11)])
    h = coarsen_hierarchy(g, "lesc", 1, target_nc=5)
    # one matched pair plus four singletons promoted to coarse nodes
    assert h.sizes() == [11, 5]


def test_kron_explicit_retain():
    g = path(4)
    h = coarsen_hierarchy(g, "kron", 1, retain=np.array([0, 3]))
    assert h.graphs[1].weight(0, 1) == pytest.approx(1 / 3)
    assert retained_nodes(h).tolist() == [0, 3]


def test_composed_parent_onto():
    g = random_graph(50, 0.1, seed=9, connected=True)
    h = coarsen_hierarchy(g, "hem", 3)
    top = h.composed_parent()
    assert np.array_equal(np.unique(top), np.arange(h.graphs[-1].n))


def test_lifted_laplacian_level0_is_L():
    g = random_graph(20, 0.2, seed=1, connected=True)
    h = coarsen_hierarchy(g, "hem", 1)
    np.testing.assert_allclose(lifted_laplacian(h, 0), laplacian(g).toarray())


@pytest.mark.parametrize("method", METHODS)
@given(g=graphs(n_min=4, n_max=30, connected=True), seed=st.integers(0, 1000))
def test_invariants_every_method(method, g, seed):
    h = coarsen_hierarchy(g, method, 3, seed=seed)
    h.check()
    assert all(a > b for a, b in zip(h.sizes(), h.sizes()[1:]))
