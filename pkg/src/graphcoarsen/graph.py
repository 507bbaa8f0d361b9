"""Sparse undirected weighted graphs and the matrices built from them.

A :class:`Graph` wraps a symmetric CSR adjacency matrix with nonnegative
weights, no self-loops and sorted column indices. Everything downstream
(coarseners, metrics, the CLI) consumes and produces this type.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    """Invalid graph input or a graph that violates an operation's precondition."""


class DisconnectedGraphError(GraphError):
    def __init__(self, n_components: int, what: str = "operation"):
        self.n_components = n_components
        super().__init__(f"{what} requires a connected graph; got {n_components} components")


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph stored as a symmetric CSR adjacency.

    Parameters
    ----------
    adjacency
        Symmetric ``scipy.sparse.csr_array`` with nonnegative weights and an
        empty diagonal. Use :func:`build_graph` or :meth:`from_sparse` rather
        than constructing directly; they normalize and validate.
    node_ids
        Optional labels of the nodes in the original (finest) graph.
    """

    adjacency: sp.csr_array
    node_ids: Optional[np.ndarray] = None
    self_loops_dropped: int = field(default=0, compare=False)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    @property
    def density(self) -> float:
        n = self.n
        return 0.0 if n < 2 else 2.0 * self.m / (n * (n - 1))

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Upper-triangular edge arrays ``(i, j, w)`` with ``i < j``, row-major order."""
        upper = sp.triu(self.adjacency, k=1, format="coo")
        order = np.lexsort((upper.col, upper.row))
        return (upper.row[order].astype(np.int64), upper.col[order].astype(np.int64),
                upper.data[order].astype(float))

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        a = self.adjacency
        lo, hi = a.indptr[i], a.indptr[i + 1]
        return a.indices[lo:hi], a.data[lo:hi]

    def weight(self, i: int, j: int) -> float:
        nbrs, w = self.neighbors(i)
        k = np.searchsorted(nbrs, j)
        return float(w[k]) if k < len(nbrs) and nbrs[k] == j else 0.0

    def n_components(self) -> int:
        return connected_components(self.adjacency, directed=False)[0]

    def is_connected(self) -> bool:
        return self.n <= 1 or self.n_components() == 1

    def require_connected(self, what: str = "operation") -> None:
        k = self.n_components() if self.n > 1 else 1
        if k != 1:
            raise DisconnectedGraphError(k, what)

    def isolated_nodes(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self.adjacency.indptr) == 0)

    def to_dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    @classmethod
    def from_sparse(cls, matrix, node_ids=None, *, symmetrize: bool = False) -> "Graph":
        """Build a graph from a square (sparse or dense) weight matrix.

        The diagonal is discarded and explicit zeros are removed. With
        ``symmetrize`` the matrix is replaced by ``(M + M.T) / 2``; otherwise
        asymmetric input is rejected.
        """
        a = sp.csr_array(matrix, dtype=float)
        if a.shape[0] != a.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {a.shape}")
        if symmetrize:
            a = sp.csr_array((a + a.T) * 0.5)
        a = a.tolil()
        a.setdiag(0.0)
        a = sp.csr_array(a)
        a.eliminate_zeros()
        a.sum_duplicates()
        a.sort_indices()
        if a.nnz and a.data.min() < 0:
            raise GraphError("adjacency weights must be nonnegative")
        diff = abs(a - a.T)
        if not symmetrize and diff.nnz and diff.max() != 0:
            raise GraphError("adjacency matrix is not symmetric")
        ids = None if node_ids is None else np.asarray(node_ids)
        return cls(a, ids)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def build_graph(edges: Iterable[Sequence], n: Optional[int] = None, *,
                base: int = 0, node_ids=None) -> Graph:
    """Build a :class:`Graph` from ``(i, j[, w])`` tuples.

    Duplicate edges (in either orientation) are summed, self-loops dropped
    with a warning, and a missing weight defaults to 1. ``base=1`` accepts
    1-based ids. If ``n`` is given, ids must lie in ``[0, n)`` after
    normalization; otherwise ``n`` is one more than the largest id.
    """
    rows, cols, vals = [], [], []
    for e in edges:
        if len(e) == 2:
            i, j = e
            w = 1.0
        elif len(e) == 3:
            i, j, w = e
        else:
            raise GraphError(f"edge must be (i, j) or (i, j, w), got {e!r}")
        i, j, w = int(i) - base, int(j) - base, float(w)
        if w < 0 or not np.isfinite(w):
            raise GraphError(f"invalid weight on edge {(i + base, j + base, w)}")
        if i < 0 or j < 0:
            raise GraphError(f"negative node id in edge {(i + base, j + base, w)}")
        rows.append(i)
        cols.append(j)
        vals.append(w)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    top = int(max(rows.max(initial=-1), cols.max(initial=-1))) + 1
    if n is None:
        n = top
    elif top > n:
        bad = int(np.flatnonzero((rows >= n) | (cols >= n))[0])
        raise GraphError(f"edge {(rows[bad] + base, cols[bad] + base, vals[bad])} "
                         f"references a node id >= n={n}")
    return _from_coo(rows, cols, vals, n, node_ids)


def _from_coo(rows, cols, vals, n, node_ids=None) -> Graph:
    loops = rows == cols
    n_loops = int(loops.sum())
    if n_loops:
        warnings.warn(f"dropped {n_loops} self-loop(s)", stacklevel=3)
    keep = ~loops & (vals != 0)
    r, c, v = rows[keep], cols[keep], vals[keep]
    a = sp.coo_array((np.concatenate([v, v]), (np.concatenate([r, c]), np.concatenate([c, r]))),
                     shape=(n, n)).tocsr()
    a.sum_duplicates()
    a.eliminate_zeros()
    a.sort_indices()
    ids = None if node_ids is None else np.asarray(node_ids)
    return Graph(sp.csr_array(a), ids, n_loops)


@dataclass(frozen=True, eq=False)
class LaplacianMatrix:
    kind: str
    matrix: sp.csr_array
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def laplacian(g: Graph, kind: str = "combinatorial") -> LaplacianMatrix:
    """Combinatorial ``D - A`` or normalized ``I - D^-1/2 A D^-1/2`` Laplacian.

    Isolated nodes get an all-zero row and column in the normalized form.
    """
    d = g.degrees
    if kind == "combinatorial":
        mat = sp.diags_array(d) - g.adjacency
    elif kind == "normalized":
        inv_sqrt = np.zeros_like(d)
        nz = d > 0
        inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
        s = sp.diags_array(inv_sqrt)
        mat = sp.diags_array(nz.astype(float)) - s @ g.adjacency @ s
    else:
        raise ValueError(f"unknown Laplacian kind {kind!r}")
    mat = sp.csr_array(mat)
    mat.sort_indices()
    return LaplacianMatrix(kind, mat, d)


def incidence(g: Graph) -> sp.csc_array:
    """Weighted incidence matrix ``B`` (n x m) with ``B @ B.T == L``.

    Column ``e`` for edge ``(i, j)``, ``i < j``, holds ``-sqrt(a_ij)`` at row
    ``i`` and ``+sqrt(a_ij)`` at row ``j``; columns follow :meth:`Graph.edges`.
    """
    i, j, w = g.edges()
    m = len(w)
    s = np.sqrt(w)
    rows = np.concatenate([i, j])
    cols = np.concatenate([np.arange(m), np.arange(m)])
    vals = np.concatenate([-s, s])
    return sp.csc_array((vals, (rows, cols)), shape=(g.n, m))


def quadratic_form(lap, x) -> float:
    """Return ``x^T L x``; accepts a :class:`LaplacianMatrix` or any square matrix."""
    mat = lap.matrix if isinstance(lap, LaplacianMatrix) else lap
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != mat.shape[0]:
        raise ValueError(f"vector of length {x.shape} does not match matrix of size {mat.shape[0]}")
    return float(x @ (mat @ x))


def pseudoinverse(g: Graph) -> np.ndarray:
    """Dense Moore-Penrose pseudoinverse of the combinatorial Laplacian."""
    return np.linalg.pinv(laplacian(g).toarray(), hermitian=True)


def effective_resistance(pinv: np.ndarray, a, b) -> np.ndarray:
    """``L+_aa + L+_bb - 2 L+_ab`` for index arrays ``a`` and ``b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    return pinv[a, a] + pinv[b, b] - 2.0 * pinv[a, b]


def random_graph(n: int, p: float, seed=None, *, weighted: bool = True,
                 connected: bool = False) -> Graph:
    """Erdos-Renyi style test graph with uniform(0.1, 10) weights.

    With ``connected=True`` a random spanning path is added first so the
    result is always connected.
    """
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    rows, cols = iu[keep], ju[keep]
    if connected and n > 1:
        perm = rng.permutation(n)
        rows = np.concatenate([rows, perm[:-1]])
        cols = np.concatenate([cols, perm[1:]])
    w = rng.uniform(0.1, 10.0, rows.size) if weighted else np.ones(rows.size)
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    # an added path edge may duplicate an existing one; keep a single copy
    key = lo * n + hi
    _, first = np.unique(key, return_index=True)
    return _from_coo(lo[first], hi[first], w[first], n)


def random_graph_nm(n: int, m: int, seed=None, *, weighted: bool = True) -> Graph:
    """Sparse random graph with about ``m`` edges sampled as uniform node pairs."""
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, m)
    j = rng.integers(0, n, m)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    key = np.unique(lo[lo != hi] * n + hi[lo != hi])
    lo, hi = key // n, key % n
    w = rng.uniform(0.1, 10.0, lo.size) if weighted else np.ones(lo.size)
    return _from_coo(lo, hi, w, n)
