"""Symmetric eigenpairs of Laplacians and sign-based bipartitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .graph import Graph, GraphError, LaplacianMatrix, laplacian

DENSE_MAX = 512
DEFAULT_TOL = 1e-8
ZERO_REL = 1e-12


class EigenConvergenceError(RuntimeError):
    def __init__(self, message: str, best_residual: float):
        self.best_residual = best_residual
        super().__init__(f"{message} (best residual {best_residual:.3e})")


@dataclass(frozen=True, eq=False)
class EigenBasis:
    values: np.ndarray
    vectors: np.ndarray
    residual_tol: float
    tol: float = DEFAULT_TOL

    @property
    def r(self) -> int:
        return self.values.size


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry (first on ties) is positive."""
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _residuals(mat, values, vectors) -> np.ndarray:
    r = mat @ vectors - vectors * values
    return np.linalg.norm(r, axis=0)


def eigs(lap, r: int, which: str = "smallest", tol: float = DEFAULT_TOL, *,
         seed: int = 0, dense_max: int = DENSE_MAX, max_restarts: int | None = None) -> EigenBasis:
    """``r`` eigenpairs from one end of the spectrum of a symmetric matrix.

    Dense ``eigh`` is used up to ``dense_max`` nodes; above that, implicitly
    restarted Lanczos (ARPACK) from a seeded random start vector. Values are
    returned ascending in both cases.

    Raises
    ------
    EigenConvergenceError
        If Lanczos does not converge within ``max_restarts`` (default ``50*r``)
        or the achieved residual exceeds ``tol``.
    """
    mat = lap.matrix if isinstance(lap, LaplacianMatrix) else lap
    n = mat.shape[0]
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got r={r}, n={n}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if which not in ("smallest", "largest"):
        raise ValueError(f"which must be 'smallest' or 'largest', got {which!r}")

    if n <= dense_max or r >= n - 1:
        dense = mat.toarray() if sp.issparse(mat) else np.asarray(mat, dtype=float)
        if which == "smallest":
            vals, vecs = np.linalg.eigh(dense)
            vals, vecs = vals[:r], vecs[:, :r]
        else:
            vals, vecs = np.linalg.eigh(dense)
            vals, vecs = vals[n - r:], vecs[:, n - r:]
    else:
        mat = sp.csr_array(mat)
        rng = np.random.default_rng(seed)
        v0 = rng.uniform(-1.0, 1.0, n)
        scale = max(1.0, float(abs(mat).sum(axis=1).max()))
        ncv = min(n, max(2 * r + 1, r + 32))
        maxiter = max_restarts if max_restarts is not None else 50 * r
        try:
            vals, vecs = eigsh(mat, k=r, which="SA" if which == "smallest" else "LA",
                               v0=v0, ncv=ncv, tol=tol / scale, maxiter=maxiter)
        except ArpackNoConvergence as exc:
            best = (float(_residuals(mat, exc.eigenvalues, exc.eigenvectors).max())
                    if exc.eigenvalues.size else float("inf"))
            raise EigenConvergenceError(
                f"Lanczos did not converge for {r} {which} eigenpairs", best) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    vecs = _fix_signs(vecs)
    res = float(_residuals(mat, vals, vecs).max())
    if res > tol:
        raise EigenConvergenceError(f"residual above tolerance {tol:g}", res)
    return EigenBasis(vals, vecs, res, tol)


@dataclass(frozen=True, eq=False)
class Bipartition:
    plus_set: np.ndarray
    minus_set: np.ndarray
    source: str
    vector: np.ndarray

    def labels(self) -> np.ndarray:
        """``+1`` / ``-1`` per node."""
        x = -np.ones(self.plus_set.size + self.minus_set.size, dtype=int)
        x[self.plus_set] = 1
        return x


def sign_split(vector: np.ndarray, source: str) -> Bipartition:
    """Split nodes by sign of ``vector``.

    Entries with ``|x_i| <= 1e-12 * max|x|`` count as zero and go to the plus
    side. The vector is oriented so that the lowest-index node with a nonzero
    entry lands on the plus side.
    """
    x = np.asarray(vector, dtype=float)
    thresh = ZERO_REL * np.abs(x).max(initial=0.0)
    nonzero = np.flatnonzero(np.abs(x) > thresh)
    if nonzero.size and x[nonzero[0]] < 0:
        x = -x
    minus = x < -thresh
    return Bipartition(np.flatnonzero(~minus), np.flatnonzero(minus), source, x)


def fiedler_bipartition(g: Graph, *, tol: float = DEFAULT_TOL, seed: int = 0) -> Bipartition:
    """Bisect a connected graph by the signs of its Fiedler vector."""
    if g.n < 2:
        raise GraphError("Fiedler bipartition needs at least 2 nodes")
    g.require_connected("Fiedler bipartition")
    basis = eigs(laplacian(g), 2, "smallest", tol, seed=seed)
    return sign_split(basis.vectors[:, 1], "fiedler")


def polarity_partition(g: Graph, kind: str = "normalized", *, tol: float = DEFAULT_TOL,
                       seed: int = 0) -> Bipartition:
    """Bisect by the signs of the eigenvector of the largest Laplacian eigenvalue.

    Every node with a nonzero entry then has at least one neighbor of the
    opposite sign, since ``(lambda_max - d_i) u_i = -sum_j a_ij u_j`` with
    ``lambda_max > d_i`` for any non-isolated node.
    """
    if g.n < 2:
        raise GraphError("polarity partition needs at least 2 nodes")
    iso = g.isolated_nodes()
    if iso.size:
        raise GraphError(f"polarity partition requires no isolated nodes; "
                         f"found {iso.size} (first: {int(iso[0])})")
    basis = eigs(laplacian(g, kind), 1, "largest", tol, seed=seed)
    return sign_split(basis.vectors[:, 0], "largest_eigvec")
