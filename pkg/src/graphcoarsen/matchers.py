"""Node-merging coarseners: heavy-edge matching, leverage-score coarsening and
matching guided by algebraic distances.

All coarseners return a :class:`CoarseMap` whose ``parent`` array is 0-based:
``parent[v]`` is the coarse node that fine node ``v`` collapses into.
Ties in any edge scan are broken by ``(min(i, j), max(i, j))``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .eigen import DEFAULT_TOL, eigs
from .graph import Graph, GraphError, laplacian

log = logging.getLogger(__name__)

MATCHED, REAL_SINGLETON, LEFTOVER_SINGLETON = "matched", "real_singleton", "leftover_singleton"
_TAGS = (MATCHED, REAL_SINGLETON, LEFTOVER_SINGLETON)

MATCHING_METHODS = ("hem", "lesc", "algdist")
VARIANTS = ("decay", "full_decay", "pinv", "pinv_truncated")


@dataclass(frozen=True, eq=False)
class CoarseMap:
    """Surjective assignment of fine nodes to coarse nodes ``0..n_c-1``."""

    parent: np.ndarray
    n_c: int
    singleton_log: np.ndarray
    method: str = ""
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.parent.size

    def groups(self) -> list[np.ndarray]:
        order = np.argsort(self.parent, kind="stable")
        bounds = np.searchsorted(self.parent[order], np.arange(self.n_c + 1))
        return [order[bounds[k]:bounds[k + 1]] for k in range(self.n_c)]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.parent, minlength=self.n_c)

    def tags(self) -> list[str]:
        return [_TAGS[t] for t in self.singleton_log]

    def validate(self) -> None:
        p = self.parent
        if p.size and (p.min() < 0 or p.max() >= self.n_c):
            raise ValueError("parent ids out of range")
        sizes = self.sizes()
        if np.any(sizes == 0):
            raise ValueError(f"coarse node {int(np.flatnonzero(sizes == 0)[0])} has no children")
        if self.method not in MATCHING_METHODS:
            return
        core = np.bincount(p[self.singleton_log != 2], minlength=self.n_c)
        if np.any(core > 2):
            raise ValueError("a coarse node has more than two matched children")

    def to_dict(self) -> dict:
        return {"parent": self.parent.tolist(), "n_c": int(self.n_c),
                "tags": self.tags(), "method": self.method, "params": self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "CoarseMap":
        tags = np.array([_TAGS.index(t) for t in d.get("tags", [])], dtype=np.int8)
        parent = np.asarray(d["parent"], dtype=np.int64)
        if tags.size != parent.size:
            tags = np.zeros(parent.size, dtype=np.int8)
        return cls(parent, int(d["n_c"]), tags, d.get("method", ""), d.get("params", {}))

    @classmethod
    def from_parent(cls, parent, method: str = "user") -> "CoarseMap":
        """Wrap an arbitrary labeling, relabeling to ``0..n_c-1`` by first appearance."""
        parent = np.asarray(parent, dtype=np.int64)
        _, first, inv = np.unique(parent, return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.int64)
        rank[np.argsort(first)] = np.arange(first.size)
        return cls(rank[inv], first.size, np.zeros(parent.size, dtype=np.int8), method)


def _match_edges(g: Graph, order: np.ndarray, ei: np.ndarray, ej: np.ndarray):
    n = g.n
    parent = [-1] * n
    new = 0
    for a, b in zip(ei[order].tolist(), ej[order].tolist()):
        if parent[a] < 0 and parent[b] < 0:
            parent[a] = parent[b] = new
            new += 1
    return parent, new


def _heaviest_neighbor(g: Graph, v: int) -> int:
    nbrs, w = g.neighbors(v)
    return int(nbrs[np.argmax(w)])


def _finish_singletons(g: Graph, parent: list, new: int, method: str, params: dict) -> CoarseMap:
    """Lines 10-16 of HEM: real singletons become coarse nodes, leftovers join
    the parent of their heaviest neighbor."""
    parent = np.asarray(parent, dtype=np.int64)
    tags = np.zeros(g.n, dtype=np.int8)
    indptr = g.adjacency.indptr
    for v in np.flatnonzero(parent < 0).tolist():
        if indptr[v] == indptr[v + 1]:
            parent[v] = new
            new += 1
            tags[v] = 1
        else:
            parent[v] = parent[_heaviest_neighbor(g, v)]
            tags[v] = 2
    return CoarseMap(parent, new, tags, method, params)


def hem(g: Graph) -> CoarseMap:
    """Heavy-edge matching.

    Edges are scanned by decreasing weight; an edge whose endpoints are both
    unmatched creates a coarse node. Afterwards isolated nodes become their
    own coarse node and remaining unmatched nodes attach to the coarse node of
    their heaviest neighbor.
    """
    i, j, w = g.edges()
    order = np.lexsort((j, i, -w))
    parent, new = _match_edges(g, order, i, j)
    return _finish_singletons(g, parent, new, "hem", {})


@dataclass(frozen=True, eq=False)
class LeverageScores:
    eta: np.ndarray
    variant: str
    r: int
    tau: Optional[float] = None
    kind: str = "combinatorial"

    @property
    def importance_first(self) -> str:
        """Traversal direction that visits the most important nodes first."""
        return "asc" if self.variant.startswith("pinv") else "desc"


def default_rank(n: int) -> int:
    return max(1, min(n - 1, 40))


def leverage_scores(g: Graph, variant: str = "pinv_truncated", r: Optional[int] = None,
                    tau: float = 0.5, kind: str = "combinatorial", *,
                    tol: float = DEFAULT_TOL, seed: int = 0) -> LeverageScores:
    """Eigenvalue-weighted leverage scores of the Laplacian.

    ``decay``
        ``sum_{k<=r} (exp(-tau*lambda_k) U_ik)^2`` over the ``r`` smallest pairs.
    ``full_decay``
        The same sum over all ``n`` pairs, i.e. ``diag(exp(-2 tau L))``.
    ``pinv``
        ``sum_{j>=2} U_ij^2 / lambda_j``, which equals ``diag(pinv(L))``.
    ``pinv_truncated``
        The ``pinv`` sum restricted to ``j = 2..r``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown leverage-score variant {variant!r}; choose from {VARIANTS}")
    n = g.n
    if r is None:
        r = n if variant in ("full_decay", "pinv") else default_rank(n)
        if variant == "pinv_truncated":
            r = min(n, max(r, 2))
    if r > n:
        raise GraphError(f"rank r={r} exceeds n={n}")
    if r < 1:
        raise ValueError("r must be at least 1")
    lap = laplacian(g, kind)

    if variant in ("decay", "full_decay"):
        rr = n if variant == "full_decay" else r
        basis = eigs(lap, rr, "smallest", tol, seed=seed)
        weighted = np.exp(-tau * basis.values) * basis.vectors
        return LeverageScores(np.sum(weighted ** 2, axis=1), variant, rr, tau, kind)

    g.require_connected(f"{variant} leverage scores")
    rr = n if variant == "pinv" else r
    if rr < 2:
        raise ValueError("pinv leverage scores need r >= 2")
    basis = eigs(lap, rr, "smallest", tol, seed=seed)
    lam = basis.values[1:]
    if lam[0] <= 0:
        raise GraphError("second-smallest eigenvalue is not positive; graph is disconnected")
    eta = np.sum(basis.vectors[:, 1:] ** 2 / lam, axis=1)
    return LeverageScores(eta, variant, rr, None, kind)


def lesc(g: Graph, eta, n_c_target: int, seed: int = 0, direction: Optional[str] = None) -> CoarseMap:
    """Leverage-score coarsening.

    Nodes are visited in leverage-score order (``direction='asc'`` or
    ``'desc'``; by default most important first, which is ascending for the
    pseudoinverse variants). Each unmatched node pairs with its unmatched
    neighbor across the heaviest edge. Nodes left without a partner are
    shuffled with ``seed``; the first ``n_c_target - new`` become coarse
    nodes and the rest join the coarse node of their heaviest neighbor.
    """
    if isinstance(eta, LeverageScores):
        scores = eta.eta
        if direction is None:
            direction = eta.importance_first
        params = {"variant": eta.variant, "r": eta.r, "tau": eta.tau, "kind": eta.kind}
    else:
        scores = np.asarray(eta, dtype=float)
        direction = direction or "desc"
        params = {}
    if scores.size != g.n:
        raise ValueError(f"scores have length {scores.size}, graph has {g.n} nodes")
    if n_c_target > g.n:
        raise ValueError(f"n_c_target={n_c_target} exceeds n={g.n}")
    if direction not in ("asc", "desc"):
        raise ValueError("direction must be 'asc' or 'desc'")
    params.update(n_c_target=int(n_c_target), seed=int(seed), direction=direction)

    order = np.argsort(scores if direction == "asc" else -scores, kind="stable")
    a = g.adjacency
    indptr, indices, data = a.indptr, a.indices, a.data
    parent = np.full(g.n, -1, dtype=np.int64)
    tags = np.zeros(g.n, dtype=np.int8)
    new = 0
    single = []
    for i in order.tolist():
        if parent[i] >= 0:
            continue
        lo, hi = indptr[i], indptr[i + 1]
        if lo == hi:
            parent[i] = new
            tags[i] = 1
            new += 1
            continue
        nbrs = indices[lo:hi]
        free = parent[nbrs] < 0
        if free.any():
            w = np.where(free, data[lo:hi], -np.inf)
            j = int(nbrs[np.argmax(w)])
            parent[i] = parent[j] = new
            new += 1
        else:
            single.append(i)

    rng = np.random.default_rng(seed)
    single = np.asarray(single, dtype=np.int64)
    rng.shuffle(single)
    budget = n_c_target - new
    if budget < 0:
        log.info("LESC: %d matched coarse nodes already exceed n_c_target=%d; "
                 "all %d singletons attach to neighbors", new, n_c_target, single.size)
    budget = max(budget, 0)
    for v in single[:budget].tolist():
        parent[v] = new
        tags[v] = 1
        new += 1
    for v in single[budget:].tolist():
        parent[v] = parent[_heaviest_neighbor(g, v)]
        tags[v] = 2
    return CoarseMap(parent, new, tags, "lesc", params)


@dataclass(frozen=True, eq=False)
class AlgebraicDistances:
    """Per-edge distances aligned with ``Graph.edges()`` order."""

    i: np.ndarray
    j: np.ndarray
    s: np.ndarray
    omega: float
    k: int
    lambda2: Optional[float] = None
    scaled: bool = False
    x: Optional[np.ndarray] = None


def jacobi_lambda2(g: Graph, omega: float, *, seed: int = 0) -> float:
    """Second-largest eigenvalue modulus of ``(1-omega) I + omega D^-1 A``.

    Computed on the similar symmetric matrix ``(1-omega) I + omega D^-1/2 A D^-1/2``.
    """
    d = g.degrees
    s = sp.diags_array(1.0 / np.sqrt(d))
    h = sp.csr_array((1.0 - omega) * sp.identity(g.n) + omega * (s @ g.adjacency @ s))
    if g.n == 1:
        return 0.0
    if g.n <= 512:
        vals = np.linalg.eigvalsh(h.toarray())
    else:
        # every other eigenvalue lies between these four
        vals = np.concatenate([eigs(h, 2, "largest", 1e-6, seed=seed).values,
                               eigs(h, 2, "smallest", 1e-6, seed=seed).values])
    mods = np.sort(np.abs(vals))[::-1]
    return float(mods[1])


def algebraic_distances(g: Graph, omega: float = 0.5, k: int = 20, seed: int = 0,
                        scale_by_lambda2: bool = False, x0=None) -> AlgebraicDistances:
    """Run ``k`` Jacobi over-relaxation sweeps on ``L x = 0`` and read off
    ``|x_i - x_j|`` on every edge.

    The start vector is uniform on ``(-0.5, 0.5)`` from ``seed`` unless
    ``x0`` is given. With ``scale_by_lambda2`` the distances are divided by
    ``lambda_2(H)**k``.
    """
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    if k < 1:
        raise ValueError("k must be at least 1")
    iso = g.isolated_nodes()
    if iso.size:
        raise GraphError(f"algebraic distances need D^-1; node {int(iso[0])} is isolated")
    if x0 is None:
        x = np.random.default_rng(seed).uniform(-0.5, 0.5, g.n)
    else:
        x = np.array(x0, dtype=float)
        if x.shape != (g.n,):
            raise ValueError("x0 has wrong length")
    # (1-w) x + w D^-1 A x rewritten as x - w D^-1 L x, with L x summed from
    # edge differences so that a constant vector is a fixed point in floating point
    dinv = 1.0 / g.degrees
    a = g.adjacency
    rows = np.repeat(np.arange(g.n), np.diff(a.indptr))
    for _ in range(k):
        lx = np.bincount(rows, weights=a.data * (x[rows] - x[a.indices]), minlength=g.n)
        x = x - omega * dinv * lx
    i, j, _w = g.edges()
    s = np.abs(x[i] - x[j])
    lam2 = None
    if scale_by_lambda2:
        lam2 = jacobi_lambda2(g, omega, seed=seed)
        if lam2 > 0:
            s = s / lam2 ** k
    return AlgebraicDistances(i, j, s, float(omega), int(k), lam2, bool(scale_by_lambda2), x)


def algdist_matching(g: Graph, dist: AlgebraicDistances) -> CoarseMap:
    """Greedy matching that merges the closest pairs first (increasing distance),
    with the same singleton handling as :func:`hem`."""
    i, j = dist.i, dist.j
    if i.size != g.m:
        raise ValueError("distances were not computed on this graph")
    order = np.lexsort((j, i, dist.s))
    parent, new = _match_edges(g, order, i, j)
    params = {"omega": dist.omega, "k": dist.k, "scaled": dist.scaled}
    return _finish_singletons(g, parent, new, "algdist", params)
