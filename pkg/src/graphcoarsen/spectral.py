"""Coarsening and lifting operators, including eigenvector-preserving ones.

An :class:`InterpolationOp` is an ``n x n_c`` sparse matrix ``P`` linking a
fine graph to a coarse one. Coarse matrices are Galerkin products
``P^T M P``; lifting maps a coarse Laplacian back to fine size as
``P L_c P^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .matchers import CoarseMap


class BlockError(ValueError):
    """A partition block cannot be normalized or orthogonalized."""

    def __init__(self, message: str, block: int, rank: Optional[int] = None):
        self.block = block
        self.rank = rank
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class InterpolationOp:
    matrix: sp.csr_array
    variant: str
    partition: Optional[CoarseMap] = None
    info: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def T(self):
        return self.matrix.T

    def left_inverse(self) -> sp.csr_array:
        """A matrix ``Q`` with ``Q^T P = I``, used to restrict so that
        restriction after prolongation is the identity."""
        if self.variant == "binary_C":
            return build_uniform_P(self.partition).matrix
        if self.variant == "uniform_P":
            return build_C(self.partition).matrix
        if self.variant == "spectral_P":
            return self.matrix
        if self.variant.startswith("harmonic"):
            rows = self.info["retained"]
            n, nc = self.shape
            return sp.csr_array((np.ones(nc), (rows, np.arange(nc))), shape=(n, nc))
        raise ValueError(f"no left inverse for variant {self.variant!r}")


def _membership(cmap: CoarseMap, values) -> sp.csr_array:
    n = cmap.n
    return sp.csr_array((values, (np.arange(n), cmap.parent)), shape=(n, cmap.n_c))


def build_C(cmap: CoarseMap) -> InterpolationOp:
    """Binary membership matrix: ``C[i, k] = 1`` iff fine node ``i`` is in group ``k``."""
    return InterpolationOp(_membership(cmap, np.ones(cmap.n)), "binary_C", cmap)


def build_uniform_P(cmap: CoarseMap) -> InterpolationOp:
    """Averaging operator ``p_ik = 1/|S_k|``; satisfies ``C^T P = I``."""
    sizes = cmap.sizes().astype(float)
    return InterpolationOp(_membership(cmap, 1.0 / sizes[cmap.parent]), "uniform_P", cmap)


def _as_matrix(p):
    return p.matrix if isinstance(p, InterpolationOp) else sp.csr_array(p)


def galerkin_coarse(m, p, *, adjacency: bool = False, binarize: bool = False):
    """``P^T M P``. For an adjacency matrix the diagonal is zeroed afterwards;
    ``binarize`` additionally sets every remaining nonzero to 1."""
    pm = _as_matrix(p)
    if m.shape[0] != pm.shape[0] or m.shape[1] != m.shape[0]:
        raise ValueError(f"matrix of shape {m.shape} does not match operator {pm.shape}")
    ms = sp.csr_array(m)
    out = sp.csr_array(pm.T @ ms @ pm)
    asym = abs(ms - ms.T)
    if asym.nnz == 0 or asym.max() == 0:
        # summation order can break exact symmetry of the product
        out = sp.csr_array((out + out.T) * 0.5)
    if adjacency or binarize:
        out = out.tolil()
        out.setdiag(0.0)
        out = sp.csr_array(out)
        out.eliminate_zeros()
    if binarize:
        out.data[:] = 1.0
    return out


def lift(lc, p):
    """``P L_c P^T``, the fine-size counterpart of a coarse matrix."""
    pm = _as_matrix(p)
    if lc.shape != (pm.shape[1], pm.shape[1]):
        raise ValueError(f"coarse matrix {lc.shape} does not match operator {pm.shape}")
    out = pm @ (sp.csr_array(lc) if sp.issparse(lc) else np.asarray(lc)) @ pm.T
    return out if not sp.issparse(out) else sp.csr_array(out)


def default_partition(g: Graph, k: int) -> CoarseMap:
    """``k`` contiguous, nearly equal groups after sorting nodes by decreasing degree."""
    if not 1 <= k <= g.n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    order = np.argsort(-g.degrees, kind="stable")
    parent = np.empty(g.n, dtype=np.int64)
    for gid, chunk in enumerate(np.array_split(order, k)):
        parent[chunk] = gid
    return CoarseMap(parent, k, np.zeros(g.n, dtype=np.int8), "degree_blocks", {"k": k})


def preserve_one(g: Graph, u, partition: CoarseMap) -> InterpolationOp:
    """Block-diagonal ``P`` with blocks ``u_i / ||u_i||``, so ``P P^T u = u``.

    ``info['leverage']`` holds ``||u_i||^2`` per coarse node.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (g.n,):
        raise ValueError("vector length does not match graph")
    norms = np.sqrt(np.bincount(partition.parent, weights=u * u, minlength=partition.n_c))
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise BlockError(f"block {int(zero[0])} of the vector is zero and cannot be normalized",
                         int(zero[0]))
    vals = u / norms[partition.parent]
    p = _membership(partition, vals)
    p.eliminate_zeros()
    return InterpolationOp(p, "spectral_P", partition, {"m": 1, "leverage": norms ** 2})


def _factor(block: np.ndarray, how: str):
    if how == "qr":
        q, r = np.linalg.qr(block)
        s = np.sign(np.diag(r))
        s[s == 0] = 1.0
        return q * s, r * s[:, None]
    if how == "polar":
        w, sig, vt = np.linalg.svd(block, full_matrices=False)
        return w @ vt, (vt.T * sig) @ vt
    raise ValueError(f"unknown factorization {how!r}")


def preserve_many(g: Graph, U, partition: CoarseMap, factorization: str = "qr") -> InterpolationOp:
    """Block-diagonal orthonormal ``P`` whose range contains every column of ``U``.

    Each row block ``U_i`` (nodes of group ``i``) is factored as ``P_i R_i``
    with orthonormal ``P_i``; coarse nodes ``i*m .. i*m+m-1`` belong to group
    ``i``. ``info['R']`` keeps the triangular (or polar) factors.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape[0] != g.n:
        raise ValueError("eigenvector block has wrong number of rows")
    m = U.shape[1]
    rows, cols, vals, rs = [], [], [], []
    for gid, nodes in enumerate(partition.groups()):
        block = U[nodes]
        rank = int(np.linalg.matrix_rank(block)) if block.size else 0
        if rank < m:
            raise BlockError(f"block {gid} has numerical rank {rank} < {m}", gid, rank)
        q, r = _factor(block, factorization)
        rs.append(r)
        rr, cc = np.meshgrid(nodes, np.arange(m) + gid * m, indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        vals.append(q.ravel())
    p = sp.csr_array((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                     shape=(g.n, m * partition.n_c))
    return InterpolationOp(p, "spectral_P", partition, {"m": m, "R": rs, "factorization": factorization})
