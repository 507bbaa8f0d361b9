"""Recursive coarsening into a hierarchy of graphs with interpolation operators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .eigen import eigs
from .graph import Graph, GraphError, laplacian
from .matchers import (CoarseMap, algdist_matching, algebraic_distances, hem,
                       lesc, leverage_scores)
from .reduction import (harmonic_interpolation, indset_coarsen, kron_reduce,
                        maximal_independent_set, spectral_downsample)
from .spectral import (InterpolationOp, build_C, build_uniform_P, default_partition,
                       galerkin_coarse, preserve_many)

METHODS = ("hem", "lesc", "algdist", "indset", "kron", "spectral")


class LevelError(RuntimeError):
    def __init__(self, level: int, cause: Exception):
        self.level = level
        self.cause = cause
        super().__init__(f"level {level}: {type(cause).__name__}: {cause}")


@dataclass(frozen=True, eq=False)
class Level:
    cmap: CoarseMap
    op: InterpolationOp
    seed: int
    params: dict = field(default_factory=dict)


@dataclass(eq=False)
class Hierarchy:
    """``graphs[0]`` is the input; ``levels[l]`` maps ``graphs[l]`` onto ``graphs[l+1]``."""

    graphs: list
    levels: list
    method: str
    params: dict
    seed: int
    stop_reason: str = ""

    @property
    def depth(self) -> int:
        return len(self.levels)

    def sizes(self) -> list[int]:
        return [g.n for g in self.graphs]

    def composed_parent(self, level: Optional[int] = None) -> np.ndarray:
        """Map from fine nodes to nodes of ``graphs[level]`` (default: coarsest)."""
        level = self.depth if level is None else level
        parent = np.arange(self.graphs[0].n)
        for lev in self.levels[:level]:
            parent = _node_parent(lev)[parent]
        return parent

    def check(self, atol: float = 1e-10) -> None:
        """Verify the structural invariants; raises ``AssertionError``."""
        for ell, lev in enumerate(self.levels):
            g, gc = self.graphs[ell], self.graphs[ell + 1]
            assert gc.n < g.n, f"level {ell} did not shrink"
            lev.cmap.validate()
            assert lev.op.shape == (g.n, gc.n), f"level {ell} operator shape"
            expected = _expected_coarse(g, gc, lev)
            if expected is not None:
                got, want = expected
                diff = abs(sp.csr_array(got) - sp.csr_array(want))
                scale = max(1.0, abs(sp.csr_array(want)).max() if sp.csr_array(want).nnz else 1.0)
                assert diff.nnz == 0 or diff.max() <= atol * scale, f"level {ell} Galerkin mismatch"
        top = self.composed_parent()
        assert np.array_equal(np.unique(top), np.arange(self.graphs[-1].n)) or \
            self.method == "spectral", "composed map is not onto the coarsest level"

    def to_dict(self) -> dict:
        out = {"method": self.method, "params": self.params, "seed": int(self.seed),
               "sizes": self.sizes(), "stop_reason": self.stop_reason, "levels": []}
        for ell, g in enumerate(self.graphs):
            i, j, w = g.edges()
            entry = {"level": ell, "n": g.n, "m": g.m,
                     "edges": [[a, b, c] for a, b, c in zip(i.tolist(), j.tolist(), w.tolist())]}
            if ell < self.depth:
                lev = self.levels[ell]
                entry.update(parent=lev.cmap.parent.tolist(), tags=lev.cmap.tags(),
                             operator=lev.op.variant, seed=int(lev.seed), params=lev.params)
            out["levels"].append(entry)
        return out


def _node_parent(lev: Level) -> np.ndarray:
    if lev.op.variant == "spectral_P":
        # a group of fine nodes owns coarse nodes gid*m .. gid*m+m-1
        return lev.cmap.parent * lev.op.info.get("m", 1)
    return lev.cmap.parent


def _expected_coarse(g: Graph, gc: Graph, lev: Level):
    variant = lev.op.variant
    if variant in ("binary_C", "uniform_P"):
        return gc.adjacency, galerkin_coarse(g.adjacency, lev.op, adjacency=True)
    if variant == "spectral_P":
        return gc.adjacency, galerkin_coarse(g.adjacency, lev.op, binarize=True)
    if variant == "harmonic":
        return laplacian(gc).matrix, galerkin_coarse(laplacian(g).matrix, lev.op)
    # indset replaces the eliminated block by a diagonal; no Galerkin identity
    return None


def _reduction_map(g: Graph, retained: np.ndarray, p: sp.csr_array, method: str) -> CoarseMap:
    """Eliminated nodes join the retained node with the largest interpolation weight."""
    dense_rows = p.tocsr()
    parent = np.empty(g.n, dtype=np.int64)
    tags = np.full(g.n, 2, dtype=np.int8)
    for v in range(g.n):
        lo, hi = dense_rows.indptr[v], dense_rows.indptr[v + 1]
        cols, vals = dense_rows.indices[lo:hi], dense_rows.data[lo:hi]
        parent[v] = cols[np.argmax(vals)] if cols.size else 0
    parent[retained] = np.arange(retained.size)
    tags[retained] = 0
    return CoarseMap(parent, retained.size, tags, method)


def coarsen_once(g: Graph, method: str, seed: int, *, operator: str = "binary_C",
                 first: bool = False, **params) -> tuple[Graph, Level]:
    """One coarsening step with the given method; returns the coarse graph and level record."""
    used = {}
    if method in ("hem", "lesc", "algdist"):
        if method == "hem":
            cmap = hem(g)
        elif method == "lesc":
            scores = leverage_scores(g, params.get("variant", "pinv_truncated"), params.get("rank"),
                                     params.get("tau", 0.5), params.get("kind", "combinatorial"),
                                     seed=seed)
            target = params.get("target_nc") if first and params.get("target_nc") else math.ceil(g.n / 2)
            cmap = lesc(g, scores, min(int(target), g.n), seed, params.get("direction"))
            used = dict(cmap.params)
        else:
            dist = algebraic_distances(g, params.get("omega", 0.5), params.get("steps", 20), seed,
                                       params.get("scale", False))
            cmap = algdist_matching(g, dist)
            used = dict(cmap.params)
        op = build_C(cmap) if operator == "binary_C" else build_uniform_P(cmap)
        gc = Graph.from_sparse(galerkin_coarse(g.adjacency, op, adjacency=True), _ids(g, cmap))
        return gc, Level(cmap, op, seed, used)

    if method == "indset":
        s = maximal_independent_set(g, seed)
        gc, red = indset_coarsen(g, s)
        p = harmonic_interpolation(g, s.members, diagonal=True)
        cmap = _reduction_map(g, s.members, p, "indset")
        op = InterpolationOp(p, "harmonic_diag", cmap, {"retained": s.members})
        return gc, Level(cmap, op, seed, {"retained": s.members.tolist()})

    if method == "kron":
        retain = params.get("retain", "spectral")
        if isinstance(retain, str):
            retained = spectral_downsample(g, params.get("kind", "normalized"), seed=seed)
        else:
            if not first:
                retained = spectral_downsample(g, params.get("kind", "normalized"), seed=seed)
            else:
                retained = np.unique(np.asarray(retain, dtype=np.int64))
        gc, red = kron_reduce(g, retained)
        p = harmonic_interpolation(g, red.retained)
        cmap = _reduction_map(g, red.retained, p, "kron")
        op = InterpolationOp(p, "harmonic", cmap, {"retained": red.retained})
        return gc, Level(cmap, op, seed, {"retained": red.retained.tolist()})

    if method == "spectral":
        m = int(params.get("vectors", 1))
        k = max(1, g.n // (2 * m))
        basis = eigs(laplacian(g), min(m, g.n), "smallest", seed=seed)
        part = default_partition(g, k)
        op = preserve_many(g, basis.vectors, part, params.get("factorization", "qr"))
        gc = Graph.from_sparse(galerkin_coarse(g.adjacency, op, binarize=True))
        return gc, Level(part, op, seed, {"vectors": m, "groups": k})

    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def _ids(g: Graph, cmap: CoarseMap):
    # a coarse node is labeled by its lowest-numbered original child
    base = g.node_ids if g.node_ids is not None else np.arange(g.n)
    ids = np.full(cmap.n_c, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(ids, cmap.parent, base)
    return ids


def level_seeds(seed: int, levels: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(levels)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def coarsen_hierarchy(g: Graph, method: str = "hem", levels: int = 1, *,
                      min_nodes: Optional[int] = None, ratio: Optional[float] = None,
                      seed: int = 0, operator: str = "binary_C", **params) -> Hierarchy:
    """Coarsen ``g`` up to ``levels`` times.

    Stops early when a level does not shrink the graph, when the coarse graph
    has at most ``min_nodes`` nodes, or when it has at most ``ratio * n0``
    nodes. Each level draws its own seed from ``seed`` so that the result is
    reproducible.
    """
    if levels < 1:
        raise ValueError("levels must be at least 1")
    if min_nodes is not None and min_nodes < 1:
        raise ValueError("min_nodes must be at least 1")
    if ratio is not None and not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    if operator not in ("binary_C", "uniform_P"):
        raise ValueError("operator must be 'binary_C' or 'uniform_P'")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if g.node_ids is None:
        g = Graph(g.adjacency, np.arange(g.n))
    seeds = level_seeds(seed, levels)
    h = Hierarchy([g], [], method, dict(params, operator=operator, levels=levels,
                                        min_nodes=min_nodes, ratio=ratio), seed)
    n0 = g.n
    for ell in range(levels):
        cur = h.graphs[-1]
        if cur.n <= 1:
            h.stop_reason = f"level {ell}: single node"
            break
        try:
            gc, lev = coarsen_once(cur, method, seeds[ell], operator=operator, first=ell == 0, **params)
        except (GraphError, ValueError, RuntimeError) as exc:
            raise LevelError(ell, exc) from exc
        if gc.n >= cur.n:
            h.stop_reason = f"level {ell}: no reduction ({cur.n} -> {gc.n})"
            break
        h.graphs.append(gc)
        h.levels.append(lev)
        if min_nodes is not None and gc.n <= min_nodes:
            h.stop_reason = f"level {ell}: reached min_nodes={min_nodes}"
            break
        if ratio is not None and gc.n <= ratio * n0:
            h.stop_reason = f"level {ell}: reached ratio={ratio}"
            break
    else:
        h.stop_reason = "level budget exhausted"
    return h


def project_to_level(h: Hierarchy, x, level: int, *, dual: bool = False) -> np.ndarray:
    """Restrict a fine vector to ``level`` by applying ``P_l^T`` level by level.

    With ``dual`` the left inverse of each operator is used instead, so that
    projecting a prolongated vector returns it unchanged.
    """
    if not 0 <= level <= h.depth:
        raise IndexError(f"level {level} out of range 0..{h.depth}")
    x = np.asarray(x, dtype=float)
    if x.shape[0] != h.graphs[0].n:
        raise ValueError("vector length does not match the finest graph")
    for lev in h.levels[:level]:
        q = lev.op.left_inverse() if dual else lev.op.matrix
        x = q.T @ x
    return x


def prolong_from_level(h: Hierarchy, y, level: int) -> np.ndarray:
    """Interpolate a vector on ``level`` back to the finest graph with ``P_l``."""
    if not 0 <= level <= h.depth:
        raise IndexError(f"level {level} out of range 0..{h.depth}")
    y = np.asarray(y, dtype=float)
    if y.shape[0] != h.graphs[level].n:
        raise ValueError("vector length does not match the level")
    for lev in reversed(h.levels[:level]):
        y = lev.op.matrix @ y
    return y


def lift_operator(lev: Level) -> sp.csr_array:
    """Operator used to embed the coarse Laplacian back at fine size.

    Matching levels lift with the averaging operator so that the lifted
    Laplacian of ``C^T L C`` is ``L`` sandwiched by an orthogonal projector.
    """
    if lev.op.variant in ("binary_C", "uniform_P"):
        return build_uniform_P(lev.cmap).matrix
    return lev.op.matrix


def lifted_laplacian(h: Hierarchy, level: Optional[int] = None) -> np.ndarray:
    """Dense fine-size Laplacian ``P_0 ... P_{l-1} L_l P_{l-1}^T ... P_0^T``."""
    level = h.depth if level is None else level
    if not 0 <= level <= h.depth:
        raise IndexError(f"level {level} out of range 0..{h.depth}")
    lc = laplacian(h.graphs[level]).toarray()
    for lev in reversed(h.levels[:level]):
        p = lift_operator(lev)
        lc = np.asarray(p @ (p @ lc).T).T
    return lc


def retained_nodes(h: Hierarchy, level: Optional[int] = None) -> Optional[np.ndarray]:
    """Fine node kept as each node of ``level``; None unless every level is a reduction."""
    level = h.depth if level is None else level
    if any("retained" not in lev.op.info for lev in h.levels[:level]):
        return None
    r = np.arange(h.graphs[level].n)
    for lev in reversed(h.levels[:level]):
        r = np.asarray(lev.op.info["retained"])[r]
    return r
