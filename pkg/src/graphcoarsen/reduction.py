"""Schur-complement reductions of graph Laplacians.

``indset_coarsen`` keeps a maximal independent set and replaces the
eliminated block by the diagonal of its couplings to the kept set, so the
reduced matrix stays sparse. ``kron_reduce`` keeps an arbitrary node set and
forms the exact Schur complement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .eigen import polarity_partition
from .graph import Graph, GraphError, laplacian

DENSE_SOLVE_MAX = 2048
DENSE_STORE_DENSITY = 0.25
CLAMP_REL = 1e-12


@dataclass(frozen=True, eq=False)
class IndependentSet:
    members: np.ndarray
    maximal: bool


@dataclass(frozen=True, eq=False)
class ReducedLaplacian:
    matrix: object  # ndarray when dense, csr_array otherwise
    retained: np.ndarray
    method: str

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if sp.issparse(self.matrix) else np.asarray(self.matrix)


def maximal_independent_set(g: Graph, seed: int = 0, order=None) -> IndependentSet:
    """Greedy maximal independent set over a seeded random node order.

    Passing ``order`` fixes the visiting order instead.
    """
    if order is None:
        order = np.random.default_rng(seed).permutation(g.n)
    indptr, indices = g.adjacency.indptr, g.adjacency.indices
    blocked = np.zeros(g.n, dtype=bool)
    members = []
    for v in np.asarray(order).tolist():
        if not blocked[v]:
            members.append(v)
            blocked[v] = True
            blocked[indices[indptr[v]:indptr[v + 1]]] = True
    return IndependentSet(np.sort(np.asarray(members, dtype=np.int64)), True)


def is_independent(g: Graph, members) -> bool:
    mask = np.zeros(g.n, dtype=bool)
    mask[np.asarray(members, dtype=np.int64)] = True
    sub = g.adjacency[mask][:, mask]
    return sub.nnz == 0


def is_maximal(g: Graph, members) -> bool:
    mask = np.zeros(g.n, dtype=bool)
    mask[np.asarray(members, dtype=np.int64)] = True
    covered = (g.adjacency[:, mask] @ np.ones(int(mask.sum()))) > 0
    return bool(np.all(mask | covered))


def _cleanup(lc):
    """Zero tiny or positive off-diagonals and reset the diagonal to the
    negative off-diagonal row sum, so the result is an exact Laplacian."""
    if not sp.issparse(lc):
        m = np.array(lc, dtype=float)
        n = m.shape[0]
        scale = np.abs(m).max(initial=0.0)
        m[np.diag_indices(n)] = 0.0
        m[m > -CLAMP_REL * scale] = 0.0
        m[np.diag_indices(n)] = -m.sum(axis=1)
        return m
    lc = sp.coo_array(lc)
    lc.sum_duplicates()
    n = lc.shape[0]
    scale = np.abs(lc.data).max(initial=0.0)
    keep = (lc.row != lc.col) & (lc.data <= -CLAMP_REL * scale)
    r, c, v = lc.row[keep], lc.col[keep], lc.data[keep]
    diag = -np.bincount(r, weights=v, minlength=n)
    idx = np.arange(n)
    out = sp.coo_array((np.concatenate([v, diag]), (np.concatenate([r, idx]), np.concatenate([c, idx]))),
                       shape=(n, n)).tocsr()
    out.sum_duplicates()
    return out


def _graph_from_laplacian(lc, node_ids=None) -> Graph:
    if sp.issparse(lc):
        adj = -sp.csr_array(lc)
    else:
        adj = -np.asarray(lc)
    return Graph.from_sparse(adj, node_ids, symmetrize=True)


def _store(lc):
    n = lc.shape[0]
    nnz = np.count_nonzero(lc) if not sp.issparse(lc) else lc.nnz
    if n and nnz / (n * n) > DENSE_STORE_DENSITY:
        return lc.toarray() if sp.issparse(lc) else lc
    return sp.csr_array(lc)


def indset_coarsen(g: Graph, s) -> tuple[Graph, ReducedLaplacian]:
    """Independent-set coarsening.

    With the kept nodes ordered first, the Laplacian reads
    ``[[D_c, -F], [-F^T, B]]``; ``B`` is replaced by ``D_f = diag(F^T 1)`` and the
    coarse Laplacian is ``D_c - F D_f^-1 F^T``. The coarse node ``k``
    corresponds to fine node ``members[k]``.
    """
    members = np.asarray(s.members if isinstance(s, IndependentSet) else s, dtype=np.int64)
    members = np.sort(members)
    if not is_independent(g, members):
        raise GraphError("node set is not independent")
    mask = np.zeros(g.n, dtype=bool)
    mask[members] = True
    rest = np.flatnonzero(~mask)
    a = g.adjacency
    f = sp.csr_array(a[members][:, rest])
    d_f = np.asarray(f.sum(axis=0)).ravel()
    if np.any(d_f == 0):
        bad = int(rest[np.flatnonzero(d_f == 0)[0]])
        raise GraphError(f"node {bad} has no neighbor in the set, so D_f is singular; "
                         "independent-set coarsening requires a maximal independent set")
    d_c = np.asarray(a[members].sum(axis=1)).ravel()
    lc = sp.diags_array(d_c) - f @ sp.diags_array(1.0 / d_f) @ f.T
    lc = _cleanup(sp.csr_array(lc))
    ids = members if g.node_ids is None else g.node_ids[members]
    gc = _graph_from_laplacian(lc, ids)
    return gc, ReducedLaplacian(_store(lc), members, "indset_diag_schur")


def _check_components(g: Graph, retained_mask: np.ndarray) -> None:
    k, labels = connected_components(g.adjacency, directed=False)
    hit = np.bincount(labels[retained_mask], minlength=k)
    empty = np.flatnonzero(hit == 0)
    if empty.size:
        comp = int(empty[0])
        nodes = np.flatnonzero(labels == comp)
        raise GraphError(f"connected component {comp} (nodes {nodes[:5].tolist()}"
                         f"{'...' if nodes.size > 5 else ''}) has no retained node; "
                         "its Laplacian block is singular")


def _solve_eliminated(l22, rhs):
    """``L22^-1 rhs`` for the SPD eliminated block."""
    if l22.shape[0] <= DENSE_SOLVE_MAX:
        rhs = rhs.toarray() if sp.issparse(rhs) else rhs
        c = scipy.linalg.cho_factor(l22.toarray())
        return scipy.linalg.cho_solve(c, rhs)
    lu = splu(sp.csc_array(l22))
    rhs = rhs.toarray() if sp.issparse(rhs) else rhs
    return lu.solve(rhs)


def kron_reduce(g: Graph, retained) -> tuple[Graph, ReducedLaplacian]:
    """Kron reduction ``L11 - L12 L22^-1 L12^T`` onto ``retained`` nodes.

    Coarse node ``k`` corresponds to fine node ``sorted(retained)[k]``. Every
    connected component must keep at least one node.
    """
    retained = np.unique(np.asarray(retained, dtype=np.int64))
    if retained.size == 0:
        raise GraphError("retained set is empty")
    if retained.min() < 0 or retained.max() >= g.n:
        raise GraphError("retained node id out of range")
    mask = np.zeros(g.n, dtype=bool)
    mask[retained] = True
    rest = np.flatnonzero(~mask)
    ids = retained if g.node_ids is None else g.node_ids[retained]
    if rest.size == 0:
        lap = laplacian(g).matrix
        gc = Graph(g.adjacency.copy(), ids)
        return gc, ReducedLaplacian(_store(lap), retained, "kron_exact")
    _check_components(g, mask)
    lap = laplacian(g).matrix
    l11 = lap[retained][:, retained]
    l12 = lap[retained][:, rest]
    l22 = lap[rest][:, rest]
    x = _solve_eliminated(l22, l12.T)
    lc = l11.toarray() - l12 @ x
    lc = 0.5 * (lc + lc.T)
    lc = _cleanup(lc)
    gc = _graph_from_laplacian(lc, ids)
    return gc, ReducedLaplacian(_store(lc), retained, "kron_exact")


def harmonic_interpolation(g: Graph, retained, *, diagonal: bool = False) -> sp.csr_array:
    """Interpolation ``P`` (n x n_c) that is the identity on retained nodes and
    ``-L22^-1 L21`` (or ``D_f^-1 F^T`` with ``diagonal``) on eliminated ones.

    With the exact block, ``P^T L P`` is the Kron-reduced Laplacian.
    """
    retained = np.unique(np.asarray(retained, dtype=np.int64))
    mask = np.zeros(g.n, dtype=bool)
    mask[retained] = True
    rest = np.flatnonzero(~mask)
    nc = retained.size
    if rest.size == 0:
        return sp.csr_array(sp.identity(g.n, format="csr"))
    if diagonal:
        f = sp.csr_array(g.adjacency[retained][:, rest])
        d_f = np.asarray(f.sum(axis=0)).ravel()
        block = sp.csr_array(sp.diags_array(1.0 / d_f) @ f.T)
    else:
        lap = laplacian(g).matrix
        x = _solve_eliminated(lap[rest][:, rest], -lap[rest][:, retained])
        block = sp.csr_array(np.where(np.abs(x) > 1e-15, x, 0.0))
    top = sp.coo_array((np.ones(nc), (retained, np.arange(nc))), shape=(g.n, nc))
    blk = sp.coo_array(block)
    bottom = sp.coo_array((blk.data, (rest[blk.row], blk.col)), shape=(g.n, nc))
    return sp.csr_array(top + bottom)


def spectral_downsample(g: Graph, kind: str = "normalized", *, seed: int = 0) -> np.ndarray:
    """Nodes on the plus side of the largest-eigenvector polarity split."""
    return polarity_partition(g, kind, seed=seed).plus_set
