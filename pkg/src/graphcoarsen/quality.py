"""Metrics comparing a graph Laplacian with a (lifted) reduced one."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .graph import Graph, GraphError, LaplacianMatrix, laplacian

DENSE_PINV_MAX = 500
RANK_REL = 1e-10
SANDWICH_TOL = 1e-8


def _dense(m) -> np.ndarray:
    if isinstance(m, LaplacianMatrix):
        m = m.matrix
    return m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)


def _range_basis(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    cut = RANK_REL * max(1.0, np.abs(vals).max(initial=0.0))
    return vecs[:, vals > cut]


@dataclass(frozen=True, eq=False)
class Comparison:
    """Both quadratic forms compressed onto the test subspace ``W``.

    ``W`` is an orthonormal basis for the range of the approximating matrix;
    eigenvalues are listed in ascending order.
    """

    sigma: float
    lam: np.ndarray
    lam_tilde: np.ndarray
    dim: int


def compare_forms(L, L_tilde) -> Comparison:
    a, b = _dense(L), _dense(L_tilde)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    a, b = 0.5 * (a + a.T), 0.5 * (b + b.T)
    w = _range_basis(b)
    if w.shape[1] == 0:
        return Comparison(math.inf, np.zeros(0), np.zeros(0), 0)
    aw, bw = w.T @ a @ w, w.T @ b @ w
    lam = np.linalg.eigvalsh(aw)
    lam_t = np.linalg.eigvalsh(bw)
    gen = scipy.linalg.eigh(aw, bw, eigvals_only=True)
    top, bottom = float(gen.max()), float(gen.min())
    if bottom <= RANK_REL * max(1.0, top):
        sigma = math.inf
    else:
        sigma = max(top, 1.0 / bottom, 1.0)
    return Comparison(sigma, lam, lam_t, w.shape[1])


def sigma_similarity(L, L_tilde) -> float:
    """Smallest ``sigma >= 1`` with ``x'L~x / sigma <= x'Lx <= sigma x'L~x``.

    The inequality is tested on the range of ``L_tilde`` (for a connected
    graph, the complement of the constant vector). Returns ``inf`` when
    ``L`` vanishes on a direction where ``L_tilde`` does not.
    """
    return compare_forms(L, L_tilde).sigma


@dataclass(frozen=True)
class SandwichRow:
    k: int
    lam: float
    lam_tilde: float
    lower_slack: float  # lam - lam_tilde / sigma
    upper_slack: float  # sigma * lam_tilde - lam

    @property
    def violation(self) -> float:
        return max(0.0, -self.lower_slack, -self.upper_slack)


def eig_sandwich_check(L, L_tilde, sigma: float, *, comparison: Comparison | None = None) -> list[SandwichRow]:
    """Per-eigenvalue slack of ``lam~_k / sigma <= lam_k <= sigma lam~_k``.

    Both spectra are taken on the test subspace of :func:`compare_forms` and
    paired in ascending order. Negative slack means a violation.
    """
    if sigma < 1:
        raise ValueError("sigma must be at least 1")
    cmp_ = comparison if comparison is not None else compare_forms(L, L_tilde)
    rows = []
    for k, (lam, lt) in enumerate(zip(cmp_.lam.tolist(), cmp_.lam_tilde.tolist())):
        lower = lam - (lt / sigma if math.isfinite(sigma) else 0.0)
        upper = sigma * lt - lam if math.isfinite(sigma) else math.inf
        rows.append(SandwichRow(k, lam, lt, lower, upper))
    return rows


def max_violation(rows: list[SandwichRow]) -> float:
    return max((r.violation for r in rows), default=0.0)


def sandwich_holds(rows: list[SandwichRow], tol: float = SANDWICH_TOL) -> bool:
    return max_violation(rows) <= tol


def _resistances_dense(g: Graph, pairs: np.ndarray) -> np.ndarray:
    pinv = np.linalg.pinv(laplacian(g).toarray(), hermitian=True)
    a, b = pairs[:, 0], pairs[:, 1]
    return pinv[a, a] + pinv[b, b] - 2.0 * pinv[a, b]


def _resistances_sparse(g: Graph, pairs: np.ndarray) -> np.ndarray:
    # ground node 0; the reduced Laplacian of a connected graph is SPD
    lap = sp.csc_array(laplacian(g).matrix)
    keep = np.arange(1, g.n)
    lu = splu(sp.csc_array(lap[keep][:, keep]))
    nodes = np.unique(pairs)
    cols = {}
    for v in nodes.tolist():
        x = np.zeros(g.n)
        if v:
            e = np.zeros(g.n - 1)
            e[v - 1] = 1.0
            x[1:] = lu.solve(e)
        cols[v] = x
    out = np.empty(len(pairs))
    for t, (a, b) in enumerate(pairs.tolist()):
        out[t] = cols[a][a] + cols[b][b] - 2.0 * cols[a][b]
    return out


def effective_resistances(g: Graph, pairs) -> np.ndarray:
    """``L+_aa + L+_bb - 2 L+_ab`` for each pair of a connected graph."""
    g.require_connected("effective resistance")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if g.n <= DENSE_PINV_MAX:
        return _resistances_dense(g, pairs)
    return _resistances_sparse(g, pairs)


def resistance_error(g: Graph, g_c: Graph, retained, sample: int | None = None, seed: int = 0) -> float:
    """Max relative effective-resistance error over pairs of retained nodes.

    ``retained[k]`` is the fine node represented by coarse node ``k``. All
    pairs are used when ``sample`` is None or covers them; otherwise a
    seeded sample of ``sample`` distinct pairs.
    """
    retained = np.asarray(retained, dtype=np.int64)
    if retained.size != g_c.n:
        raise GraphError(f"{retained.size} retained nodes for a coarse graph of {g_c.n} nodes")
    if retained.size and (retained.min() < 0 or retained.max() >= g.n):
        raise GraphError("retained node id out of range")
    k = retained.size
    if k < 2:
        return 0.0
    iu, ju = np.triu_indices(k, 1)
    if sample is not None and sample < iu.size:
        pick = np.sort(np.random.default_rng(seed).choice(iu.size, size=sample, replace=False))
        iu, ju = iu[pick], ju[pick]
    fine = effective_resistances(g, np.column_stack([retained[iu], retained[ju]]))
    coarse = effective_resistances(g_c, np.column_stack([iu, ju]))
    return float(np.max(np.abs(fine - coarse) / fine))


@dataclass(frozen=True)
class PinvBound:
    lhs: float
    rhs: float
    holds: bool
    kappa: float
    frobenius_sq: float


def delta_pinv_bound_check(g: Graph, edge) -> PinvBound:
    """Compare the pseudoinverse change from making edge ``(i, j)`` infinitely
    heavy with its leverage-score bound.

    With ``b = e_i - e_j`` the change is ``L+ b b' L+ / (b' L+ b)``.
    ``lhs`` is ``(b' L+ L+ b) / (b' L+ b)``, ``rhs`` is
    ``kappa(L) (L+_ii + L+_jj)`` where ``kappa`` is the ratio of the largest to
    the smallest nonzero eigenvalue. ``frobenius_sq`` is the exact squared
    Frobenius norm of the change, which equals ``lhs**2``.
    """
    i, j = (int(v) for v in edge)
    if i == j or g.weight(i, j) == 0:
        raise GraphError(f"({i}, {j}) is not an edge")
    g.require_connected("pseudoinverse bound")
    lap = laplacian(g).toarray()
    vals, vecs = np.linalg.eigh(lap)
    cut = RANK_REL * vals.max()
    nz = vals > cut
    pinv = (vecs[:, nz] / vals[nz]) @ vecs[:, nz].T
    b = np.zeros(g.n)
    b[i], b[j] = 1.0, -1.0
    pb = pinv @ b
    denom = float(b @ pb)
    lhs = float(pb @ pb) / denom
    kappa = float(vals[nz].max() / vals[nz].min())
    rhs = kappa * float(pinv[i, i] + pinv[j, j])
    delta = np.outer(pb, pb) / denom
    return PinvBound(lhs, rhs, lhs <= rhs * (1 + 1e-12), kappa, float(np.sum(delta * delta)))


@dataclass(eq=False)
class QualityReport:
    sigma: float
    eig_pairs: list
    max_eig_violation: float
    resistance_rel_err: float | None = None
    notes: list = field(default_factory=list)

    @property
    def sigma_sq(self) -> float:
        """Bound on the condition number of ``L~+ L`` on the test subspace."""
        return self.sigma ** 2

    def to_dict(self) -> dict:
        finite = math.isfinite(self.sigma)
        return {
            "sigma": self.sigma if finite else "inf",
            "sigma_sq": self.sigma_sq if finite else "inf",
            "max_eig_violation": self.max_eig_violation,
            "resistance_rel_err": self.resistance_rel_err,
            "eig_order": "ascending",
            "eig_pairs": [[r.k, r.lam, r.lam_tilde, r.lower_slack,
                           r.upper_slack if math.isfinite(r.upper_slack) else "inf"]
                          for r in self.eig_pairs],
            "notes": list(self.notes),
        }

    def eig_table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "lambda", "lambda_tilde", "lower_slack", "upper_slack"])
        for r in self.eig_pairs:
            w.writerow([r.k, repr(r.lam), repr(r.lam_tilde), repr(r.lower_slack), repr(r.upper_slack)])
        return buf.getvalue()


def quality_report(L, L_tilde, *, g: Graph | None = None, g_c: Graph | None = None,
                   retained=None, sample: int | None = None, seed: int = 0) -> QualityReport:
    """Bundle sigma, the eigenvalue sandwich and, given graphs, the resistance error."""
    cmp_ = compare_forms(L, L_tilde)
    notes = [f"test subspace dimension {cmp_.dim} (range of the approximating Laplacian)"]
    if math.isfinite(cmp_.sigma):
        rows = eig_sandwich_check(L, L_tilde, cmp_.sigma, comparison=cmp_)
    else:
        rows = eig_sandwich_check(L, L_tilde, 1.0, comparison=cmp_)
        notes.append("sigma is infinite: the fine form vanishes on part of the test subspace; "
                     "slack computed with sigma = 1")
    if min(cmp_.lam.min(initial=0.0), cmp_.lam_tilde.min(initial=0.0)) < -1e-10:
        notes.append("negative eigenvalue below -1e-10 encountered")
    err = None
    if g is not None and g_c is not None and retained is not None:
        err = resistance_error(g, g_c, retained, sample, seed)
    return QualityReport(cmp_.sigma, rows, max_violation(rows), err, notes)
