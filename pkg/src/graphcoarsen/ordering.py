"""Coarse/fine splitting of a sparse matrix into a nested block permutation.

At each level the off-diagonal nonzeros are visited by decreasing relative
weight; the endpoint whose diagonal has the larger relative impact joins the
coarse set C and the other joins F. The F block is then split again. The
final permutation lists ``C_0, C_1, ..., C_last, F_last``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


def _prepare(m) -> sp.csr_array:
    m = sp.csr_array(m, dtype=float)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    m.sum_duplicates()
    m.eliminate_zeros()
    return m


def _deltas(m: sp.csr_array) -> tuple[np.ndarray, np.ndarray]:
    """Mean absolute nonzero per row and per column; ``inf`` for empty ones."""
    a = abs(m)
    row_sum = np.asarray(a.sum(axis=1)).ravel()
    col_sum = np.asarray(a.sum(axis=0)).ravel()
    row_cnt = np.diff(m.indptr)
    col_cnt = np.bincount(m.indices, minlength=m.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        dr = np.where(row_cnt > 0, row_sum / np.maximum(row_cnt, 1), np.inf)
        dc = np.where(col_cnt > 0, col_sum / np.maximum(col_cnt, 1), np.inf)
    return dr, dc


@dataclass(frozen=True, eq=False)
class EdgeWeights:
    i: np.ndarray
    j: np.ndarray
    w: np.ndarray


def edge_weights(m) -> EdgeWeights:
    """``w_ij = min(|a_ij| / delta_r(i), |a_ij| / delta_c(j))`` for each
    off-diagonal nonzero, in row-major order."""
    m = _prepare(m)
    dr, dc = _deltas(m)
    coo = m.tocoo()
    off = coo.row != coo.col
    i, j, v = coo.row[off].astype(np.int64), coo.col[off].astype(np.int64), np.abs(coo.data[off])
    order = np.lexsort((j, i))
    i, j, v = i[order], j[order], v[order]
    w = np.minimum(v / dr[i], v / dc[j])
    return EdgeWeights(i, j, w)


def pivot_impacts(m) -> np.ndarray:
    """``sigma_k = |a_kk| / (delta_r(k) delta_c(k))``; zero for a zero diagonal."""
    m = _prepare(m)
    dr, dc = _deltas(m)
    d = np.abs(m.diagonal())
    with np.errstate(invalid="ignore"):
        s = d / (dr * dc)
    return np.where(np.isfinite(s), s, 0.0)


def split_level(m) -> tuple[np.ndarray, np.ndarray]:
    """One C/F split; returns sorted local indices ``(C, F)``."""
    m = _prepare(m)
    n = m.shape[0]
    ew = edge_weights(m)
    sigma = pivot_impacts(m)
    label = np.zeros(n, dtype=np.int8)  # 0 undecided, 1 coarse, 2 fine
    order = np.lexsort((ew.j, ew.i, -ew.w))
    for k, l in zip(ew.i[order].tolist(), ew.j[order].tolist()):
        lk, ll = label[k], label[l]
        if lk and ll:
            continue
        if lk == 0 and ll == 0:
            first, second = (k, l) if (sigma[k], -k) > (sigma[l], -l) else (l, k)
            label[first], label[second] = 1, 2
        elif lk == 0:
            label[k] = 3 - ll
        else:
            label[l] = 3 - lk
    return np.flatnonzero(label == 1), np.flatnonzero(label != 1)


@dataclass(frozen=True, eq=False)
class BlockOrdering:
    permutation: np.ndarray
    level_block_sizes: list
    depth: int
    requested_levels: int
    weights_cache: dict | None = field(default=None)

    def to_dict(self) -> dict:
        out = {"permutation": self.permutation.tolist(), "level_block_sizes": self.level_block_sizes,
               "depth": self.depth, "requested_levels": self.requested_levels}
        if self.depth < self.requested_levels:
            out["warning"] = (f"requested {self.requested_levels} levels, "
                              f"achieved depth {self.depth}")
        return out

    def permuted(self, m) -> sp.csr_array:
        p = self.permutation
        return sp.csr_array(sp.csr_array(m)[p][:, p])


def coarsen_order(m, levels: int = 1, *, cache_weights: bool = False) -> BlockOrdering:
    """Recursive C/F permutation of ``m`` with at most ``levels`` splits.

    ``level_block_sizes[l]`` is ``[|C_l|, |F_l|]``; ``|F_l|`` is the size of
    the block split at level ``l + 1``. Stops early, with a warning, once a
    level produces an empty C.
    """
    if levels < 1:
        raise ValueError("levels must be at least 1")
    m = _prepare(m)
    n = m.shape[0]
    remaining = np.arange(n)
    blocks, sizes = [], []
    cache = None
    if cache_weights:
        ew = edge_weights(m)
        cache = {"i": ew.i.tolist(), "j": ew.j.tolist(), "w": ew.w.tolist(),
                 "sigma": pivot_impacts(m).tolist()}
    for _ in range(levels):
        if remaining.size == 0:
            break
        sub = m[remaining][:, remaining]
        c, f = split_level(sub)
        if c.size == 0:
            break
        blocks.append(remaining[c])
        sizes.append([int(c.size), int(f.size)])
        remaining = remaining[f]
    blocks.append(remaining)
    depth = len(sizes)
    if depth < levels:
        warnings.warn(f"requested {levels} levels, achieved depth {depth}", RuntimeWarning, stacklevel=2)
    perm = np.concatenate(blocks).astype(np.int64)
    return BlockOrdering(perm, sizes, depth, levels, cache)


def spy_coordinates(m, permutation) -> np.ndarray:
    """``(row, col)`` pairs of the nonzero pattern after symmetric permutation."""
    p = np.asarray(permutation)
    coo = sp.coo_array(_prepare(m)[p][:, p])
    order = np.lexsort((coo.col, coo.row))
    return np.column_stack([coo.row[order], coo.col[order]]).astype(np.int64)
