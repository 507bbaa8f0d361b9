"""Command-line front end: ``coarsen``, ``metrics`` and ``order``.

Each input file is processed in memory and its artifacts are written only
after the whole pipeline succeeded, into ``OUT/<input stem>/``. Exit codes:
0 success, 1 computation error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io as gio
from . import plotting
from .graph import Graph, GraphError, laplacian
from .multilevel import (METHODS, Hierarchy, LevelError, coarsen_hierarchy, lifted_laplacian,
                         retained_nodes)
from .ordering import coarsen_order, spy_coordinates
from .quality import quality_report
from .reduction import harmonic_interpolation
from .spectral import build_uniform_P
from .matchers import CoarseMap

log = logging.getLogger("graphcoarsen")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad input file or option combination (exit code 2)."""


@dataclass
class RunConfig:
    command: str
    inputs: list
    format: str | None
    method: str | None = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "out"
    reports: list = field(default_factory=lambda: ["json", "csv", "mtx", "png"])

    def to_dict(self) -> dict:
        return asdict(self)

    def header(self) -> str:
        return json.dumps(gio.to_jsonable(self.to_dict()), sort_keys=True)


def _csv(rows, header, cfg: RunConfig) -> bytes:
    buf = _io.StringIO()
    buf.write(f"# config: {cfg.header()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode()


def _json(obj, cfg: RunConfig) -> bytes:
    return gio.dumps({"config": cfg.to_dict(), **obj}).encode()


def _png(draw, *args, cfg: RunConfig) -> bytes:
    buf = _io.BytesIO()
    draw(*args, buf, description=cfg.header())
    return buf.getvalue()


def _read_ints(path: str, base: int) -> np.ndarray:
    text = Path(path).read_text()
    try:
        vals = json.loads(text)
        if isinstance(vals, dict):
            vals = vals["retained"]
    except json.JSONDecodeError:
        vals = [int(t) for t in text.split()]
    return np.asarray(vals, dtype=np.int64) - base


# ---------------------------------------------------------------- coarsen

def _method_params(args) -> dict:
    p = {}
    if args.method == "lesc":
        p.update(variant=args.variant, tau=args.tau, rank=args.rank, direction=args.direction,
                 target_nc=args.target_nc)
    elif args.method == "algdist":
        p.update(omega=args.omega, steps=args.steps, scale=args.scale)
    elif args.method == "kron":
        p.update(retain=args.retain)
    elif args.method == "spectral":
        p.update(vectors=args.vectors)
    return p


def _resolve_params(cfg: RunConfig, base: int) -> dict:
    params = {k: v for k, v in cfg.params.items() if v is not None}
    retain = params.get("retain")
    if isinstance(retain, str) and retain.startswith("file:"):
        params["retain"] = _read_ints(retain[5:], base)
    return params


def run_coarsen(cfg: RunConfig, path: str, base: int, plot: bool) -> dict[str, bytes]:
    g = gio.read_graph(path, cfg.format, base=base)
    params = _resolve_params(cfg, base)
    levels = params.pop("levels")
    min_nodes = params.pop("min_nodes", None)
    ratio = params.pop("ratio", None)
    operator = params.pop("operator", "binary_C")
    h = coarsen_hierarchy(g, cfg.method, levels, min_nodes=min_nodes, ratio=ratio,
                          seed=cfg.seed, operator=operator, **params)
    h.check()
    art = {"hierarchy.json": _json({"hierarchy": h.to_dict()}, cfg)}
    rows = [[ell, gr.n, gr.m, repr(gr.density)] for ell, gr in enumerate(h.graphs)]
    art["summary.csv"] = _csv(rows, ["level", "n", "m", "density"], cfg)
    art["summary.json"] = _json({"levels": [{"level": r[0], "n": r[1], "m": r[2], "density": h.graphs[r[0]].density}
                                            for r in rows],
                                 "sizes": h.sizes(), "stop_reason": h.stop_reason}, cfg)
    for ell, gr in enumerate(h.graphs):
        art[f"level_{ell}.mtx"] = gio.matrix_to_mtx_string(gr.adjacency, f"config: {cfg.header()}").encode()
    r = retained_nodes(h)
    if r is not None and h.depth:
        art["retained.json"] = _json({"retained": (r + base).tolist(), "base": base}, cfg)
    if plot:
        art["level_sizes.png"] = _png(plotting.level_sizes, h.sizes(), [gr.m for gr in h.graphs], cfg=cfg)
    return art


# ---------------------------------------------------------------- metrics

def _replay(g: Graph, doc: dict) -> Hierarchy:
    stored_cfg = doc["config"]
    stored = doc["hierarchy"]
    if stored["sizes"][0] != g.n:
        raise GraphError(f"hierarchy was built on {stored['sizes'][0]} nodes, fine graph has {g.n}")
    params = {k: v for k, v in stored["params"].items() if v is not None}
    levels = params.pop("levels")
    min_nodes = params.pop("min_nodes", None)
    ratio = params.pop("ratio", None)
    operator = params.pop("operator", "binary_C")
    if isinstance(params.get("retain"), list):
        params["retain"] = np.asarray(params["retain"])
    h = coarsen_hierarchy(g, stored["method"], levels, min_nodes=min_nodes, ratio=ratio,
                          seed=stored_cfg.get("seed", stored["seed"]), operator=operator, **params)
    if json.loads(gio.dumps(h.to_dict())) != json.loads(gio.dumps(stored)):
        raise GraphError("hierarchy file does not match the fine graph (node mapping differs)")
    return h


def _explicit_pair(g: Graph, coarse: Graph, mapping: dict, base: int):
    """Lifted Laplacian and retained set for a coarse graph given with its map."""
    if "parent" in mapping:
        parent = np.asarray(mapping["parent"], dtype=np.int64) - base
        if parent.size != g.n or parent.min() < 0 or parent.max() >= coarse.n:
            raise GraphError("parent map does not match the graph sizes")
        cmap = CoarseMap(parent, coarse.n, np.zeros(g.n, dtype=np.int8))
        cmap.validate()
        p = build_uniform_P(cmap).matrix
        retained = None
    else:
        retained = np.asarray(mapping["retained"], dtype=np.int64) - base
        if retained.size != coarse.n or np.unique(retained).size != retained.size:
            raise GraphError("retained list does not match the coarse graph")
        if not np.all(np.diff(retained) > 0):
            raise GraphError("retained list must be strictly increasing")
        p = harmonic_interpolation(g, retained)
    lc = laplacian(coarse).toarray()
    return np.asarray(p @ (p @ lc).T).T, retained


def run_metrics(cfg: RunConfig, path: str, base: int, plot: bool) -> dict[str, bytes]:
    g = gio.read_graph(path, cfg.format, base=base)
    params = cfg.params
    sample, seed = params.get("sample"), cfg.seed
    L = laplacian(g).toarray()
    coarse, retained, level = None, None, 0
    if params.get("hierarchy"):
        h = _replay(g, gio.read_json(params["hierarchy"]))
        level = h.depth if params.get("level") is None else params["level"]
        lifted = lifted_laplacian(h, level)
        retained = retained_nodes(h, level)
        coarse = h.graphs[level]
    elif params.get("coarse"):
        coarse = gio.read_graph(params["coarse"], cfg.format, base=base)
        mapping = gio.read_json(params["map"])
        lifted, retained = _explicit_pair(g, coarse, mapping, base)
    else:
        lifted, coarse, retained = L, g, np.arange(g.n)
    rep = quality_report(L, lifted, g=g if retained is not None else None,
                         g_c=coarse, retained=retained, sample=sample, seed=seed)
    art = {"quality.json": _json({"level": level, "n": g.n, "n_c": coarse.n, "report": rep.to_dict()}, cfg)}
    body = rep.eig_table_csv().encode()
    art["eig_table.csv"] = f"# config: {cfg.header()}\n".encode() + body
    if plot:
        lam = [r.lam for r in rep.eig_pairs]
        lt = [r.lam_tilde for r in rep.eig_pairs]
        art["eig_sandwich.png"] = _png(plotting.eig_sandwich, lam, lt, rep.sigma, cfg=cfg)
    return art


# ---------------------------------------------------------------- order

def run_order(cfg: RunConfig, path: str, base: int, plot: bool) -> dict[str, bytes]:
    try:
        m = gio.read_matrix(path)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if m.shape[0] != m.shape[1]:
        raise UsageError(f"matrix must be square, got shape {m.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        bo = coarsen_order(m, cfg.params["levels"])
    art = {"ordering.json": _json({"ordering": bo.to_dict(), "base": 0}, cfg)}
    art["permutation.txt"] = ("".join(f"{p}\n" for p in bo.permutation.tolist())).encode()
    coords = spy_coordinates(m, bo.permutation)
    art["spy.csv"] = _csv(coords.tolist(), ["row", "col"], cfg)
    if plot:
        bounds = np.cumsum([c for c, _ in bo.level_block_sizes]).tolist()
        art["spy.png"] = _png(plotting.spy, coords, m.shape[0], bounds, cfg=cfg)
    return art


RUNNERS = {"coarsen": run_coarsen, "metrics": run_metrics, "order": run_order}


def _work(cmd: str, cfg: RunConfig, path: str, base: int, plot: bool):
    """Returns ``(status, artifacts or error dict)``; never raises."""
    try:
        return EXIT_OK, RUNNERS[cmd](cfg, path, base, plot)
    except (UsageError, OSError) as exc:
        return EXIT_USAGE, {"input": path, "error": type(exc).__name__, "message": str(exc)}
    except (GraphError, LevelError, ValueError, RuntimeError, ArithmeticError, KeyError) as exc:
        return EXIT_COMPUTE, {"input": path, "error": type(exc).__name__, "message": str(exc)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphcoarsen", description="Graph coarsening and reduction toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("inputs", nargs="+", help="input graph or matrix files")
        p.add_argument("--format", choices=["mtx", "edgelist"], default=None,
                       help="input format (default: from extension)")
        p.add_argument("--one-based", action="store_true", help="node ids in edge lists and id files start at 1")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--no-plot", action="store_true", help="skip PNG figures")
        p.add_argument("--jobs", type=int, default=1, help="worker processes over input files")
        p.add_argument("-v", "--verbose", action="store_true")

    c = sub.add_parser("coarsen", help="build a coarsening hierarchy")
    common(c)
    c.add_argument("--method", choices=METHODS, default="hem")
    c.add_argument("--levels", type=int, default=1)
    c.add_argument("--min-nodes", type=int, default=None)
    c.add_argument("--ratio", type=float, default=None, help="stop once n_c <= R * n")
    c.add_argument("--target-nc", type=int, default=None, help="LESC coarse size at the first level")
    c.add_argument("--operator", choices=["binary_C", "uniform_P"], default="binary_C")
    c.add_argument("--omega", type=float, default=0.5)
    c.add_argument("--steps", type=int, default=20)
    c.add_argument("--scale", action="store_true", help="scale algebraic distances by lambda2^k")
    c.add_argument("--tau", type=float, default=0.5)
    c.add_argument("--rank", type=int, default=None)
    c.add_argument("--variant", choices=["decay", "full_decay", "pinv", "pinv_truncated"],
                   default="pinv_truncated")
    c.add_argument("--direction", choices=["asc", "desc"], default=None)
    c.add_argument("--retain", default="spectral", help="'spectral' or 'file:PATH'")
    c.add_argument("--vectors", type=int, default=1, help="eigenvectors preserved by --method spectral")

    m = sub.add_parser("metrics", help="compare a graph with its reduction")
    common(m)
    m.add_argument("--hierarchy", default=None, help="hierarchy.json produced by coarsen")
    m.add_argument("--level", type=int, default=None)
    m.add_argument("--coarse", default=None, help="coarse graph file (with --map)")
    m.add_argument("--map", default=None, help="JSON with 'parent' or 'retained'")
    m.add_argument("--sample", type=int, default=None, help="number of retained pairs to sample")

    o = sub.add_parser("order", help="coarsening-based matrix reordering")
    common(o)
    o.add_argument("--levels", type=int, default=1)
    return ap


def _config(args) -> RunConfig:
    cfg = RunConfig(args.command, list(args.inputs), args.format, seed=args.seed, out=args.out,
                    reports=["json", "csv"] + ([] if args.no_plot else ["png"]))
    if args.command == "coarsen":
        if args.levels < 1:
            raise UsageError("--levels must be at least 1")
        if args.retain != "spectral" and not args.retain.startswith("file:"):
            raise UsageError("--retain must be 'spectral' or 'file:PATH'")
        cfg.method = args.method
        cfg.params = dict(_method_params(args), levels=args.levels, min_nodes=args.min_nodes,
                          ratio=args.ratio, operator=args.operator)
        cfg.reports.insert(2, "mtx")
    elif args.command == "metrics":
        if bool(args.coarse) != bool(args.map):
            raise UsageError("--coarse and --map must be given together")
        if args.hierarchy and args.coarse:
            raise UsageError("use either --hierarchy or --coarse/--map")
        cfg.params = {"hierarchy": args.hierarchy, "level": args.level, "coarse": args.coarse,
                      "map": args.map, "sample": args.sample}
    else:
        if args.levels < 1:
            raise UsageError("--levels must be at least 1")
        cfg.params = {"levels": args.levels}
    return cfg


def _aux_files(cfg: RunConfig) -> list[str]:
    files = []
    retain = cfg.params.get("retain")
    if isinstance(retain, str) and retain.startswith("file:"):
        files.append(retain[5:])
    files += [cfg.params[k] for k in ("hierarchy", "coarse", "map") if cfg.params.get(k)]
    return files


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(json.dumps({"error": "UsageError", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    missing = [p for p in cfg.inputs + _aux_files(cfg) if not Path(p).is_file()]
    if missing:
        print(json.dumps({"error": "FileNotFoundError", "message": "input not found", "paths": missing}),
              file=sys.stderr)
        return EXIT_USAGE
    stems = [Path(p).stem for p in cfg.inputs]
    if len(set(stems)) != len(stems):
        print(json.dumps({"error": "UsageError", "message": "input files must have distinct names"}),
              file=sys.stderr)
        return EXIT_USAGE

    base = 1 if args.one_based else 0
    plot = not args.no_plot
    jobs = [(args.command, cfg, p, base, plot) for p in cfg.inputs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_work, *zip(*jobs)))
    else:
        results = [_work(*j) for j in jobs]

    status = EXIT_OK
    for stem, (code, payload) in zip(stems, results):
        if code != EXIT_OK:
            print(json.dumps(payload), file=sys.stderr)
            status = max(status, code)
            continue
        target = Path(cfg.out) / stem
        target.mkdir(parents=True, exist_ok=True)
        for name, data in payload.items():
            (target / name).write_bytes(data)
        log.info("wrote %d files to %s", len(payload), target)
    return status


if __name__ == "__main__":
    sys.exit(main())
