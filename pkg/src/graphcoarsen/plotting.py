"""Static figures for CLI reports, rendered off-screen to PNG files."""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

# fixed metadata keeps PNG bytes independent of the matplotlib version string
_META = {"Software": None}


def _save(fig: Figure, path, description: str = "") -> None:
    FigureCanvasAgg(fig)
    meta = dict(_META)
    if description:
        meta["Description"] = description
    fig.savefig(path, format="png", dpi=100, metadata=meta)


def level_sizes(sizes, edges, path, description: str = "") -> None:
    """Node and edge counts per hierarchy level on a log scale."""
    fig = Figure(figsize=(5, 3.5))
    ax = fig.add_subplot()
    lv = np.arange(len(sizes))
    ax.semilogy(lv, np.maximum(sizes, 1), "o-", label="nodes")
    ax.semilogy(lv, np.maximum(edges, 1), "s--", label="edges")
    ax.set_xticks(lv)
    ax.set_xlabel("level")
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    _save(fig, path, description)


def eig_sandwich(lam, lam_tilde, sigma: float, path, description: str = "") -> None:
    """Fine eigenvalues against the band ``[lam~/sigma, sigma lam~]``."""
    lam, lam_tilde = np.asarray(lam), np.asarray(lam_tilde)
    fig = Figure(figsize=(5, 3.5))
    ax = fig.add_subplot()
    k = np.arange(lam.size)
    if np.isfinite(sigma):
        ax.fill_between(k, lam_tilde / sigma, lam_tilde * sigma, alpha=0.25, label="sigma band")
    ax.plot(k, lam_tilde, "--", label="reduced")
    ax.plot(k, lam, ".", label="original")
    ax.set_xlabel("k (ascending)")
    ax.set_ylabel("eigenvalue")
    ax.set_title(f"sigma = {sigma:.4g}")
    ax.legend()
    fig.tight_layout()
    _save(fig, path, description)


def spy(coords, n: int, blocks, path, description: str = "") -> None:
    """Nonzero pattern with optional lines at C/F block boundaries."""
    coords = np.asarray(coords).reshape(-1, 2)
    fig = Figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot()
    ms = max(0.5, min(4.0, 200.0 / max(n, 1)))
    ax.plot(coords[:, 1], coords[:, 0], "s", ms=ms, color="k", ls="none")
    ax.set_xlim(-0.5, n - 0.5)
    ax.set_ylim(n - 0.5, -0.5)
    ax.set_aspect("equal")
    for b in blocks or []:
        ax.axhline(b - 0.5, color="tab:red", lw=0.8)
        ax.axvline(b - 0.5, color="tab:red", lw=0.8)
    fig.tight_layout()
    _save(fig, path, description)
