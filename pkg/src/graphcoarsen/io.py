"""Reading and writing graphs, matrices and JSON reports."""

from __future__ import annotations

import io as _io
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .graph import Graph, GraphError, _from_coo


def read_matrix(path) -> sp.csr_array:
    """Read a MatrixMarket coordinate file as CSR (pattern entries become 1.0)."""
    m = scipy.io.mmread(str(path))
    m = sp.csr_array(m, dtype=float)
    m.sum_duplicates()
    return m


def write_matrix(path, matrix, comment: str = "") -> None:
    m = sp.coo_array(matrix)
    symmetric = m.shape[0] == m.shape[1] and abs(m - m.T).max() == 0 if m.nnz else False
    scipy.io.mmwrite(str(path), m, comment=comment, precision=17,
                     symmetry="symmetric" if symmetric else "general")


def read_mtx_graph(path) -> Graph:
    """Graph from a MatrixMarket file; the diagonal is ignored.

    General (non-symmetric) input is symmetrized by summing ``a_ij`` and
    ``a_ji`` only if it is structurally asymmetric; a numerically symmetric
    general file is read as-is.
    """
    m = read_matrix(path)
    if m.shape[0] != m.shape[1]:
        raise GraphError(f"{path}: adjacency must be square, got {m.shape}")
    coo = sp.coo_array(m)
    diff = abs(m - m.T)
    if diff.nnz and diff.max() != 0:
        # treat each stored entry as one undirected edge contribution
        return _from_coo(coo.row.astype(np.int64), coo.col.astype(np.int64),
                         np.abs(coo.data), m.shape[0])
    upper = coo.row <= coo.col
    return _from_coo(coo.row[upper].astype(np.int64), coo.col[upper].astype(np.int64),
                     coo.data[upper], m.shape[0])


def read_edgelist(path, n=None, *, base: int = 0) -> Graph:
    """Whitespace edge list: ``i j [w]`` per line, ``#`` starts a comment."""
    rows, cols, vals = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise GraphError(f"{path}:{lineno}: expected 'i j [w]', got {line!r}")
            rows.append(int(parts[0]) - base)
            cols.append(int(parts[1]) - base)
            vals.append(float(parts[2]) if len(parts) == 3 else 1.0)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    if vals.size and (vals.min() < 0 or min(rows.min(), cols.min()) < 0):
        raise GraphError(f"{path}: negative weight or node id")
    top = int(max(rows.max(initial=-1), cols.max(initial=-1))) + 1
    if n is not None and top > n:
        raise GraphError(f"{path}: node id {top - 1 + base} exceeds n={n}")
    return _from_coo(rows, cols, vals, top if n is None else n)


def write_edgelist(path, g: Graph) -> None:
    i, j, w = g.edges()
    with open(path, "w") as fh:
        fh.write(f"# n={g.n} m={g.m}\n")
        for a, b, c in zip(i.tolist(), j.tolist(), w.tolist()):
            fh.write(f"{a} {b} {c!r}\n")


def read_graph(path, fmt: str | None = None, *, base: int = 0) -> Graph:
    path = Path(path)
    if fmt is None:
        fmt = "mtx" if path.suffix.lower() == ".mtx" else "edgelist"
    if fmt == "mtx":
        return read_mtx_graph(path)
    if fmt == "edgelist":
        return read_edgelist(path, base=base)
    raise ValueError(f"unknown graph format {fmt!r}")


def write_graph(path, g: Graph, comment: str = "") -> None:
    write_matrix(path, g.adjacency, comment=comment)


def to_jsonable(obj):
    """Recursively convert numpy containers and scalars to plain Python."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(to_jsonable(obj), indent=1, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


def matrix_to_mtx_string(matrix, comment: str = "") -> str:
    buf = _io.BytesIO()
    scipy.io.mmwrite(buf, sp.coo_array(matrix), comment=comment, precision=17)
    return buf.getvalue().decode()
