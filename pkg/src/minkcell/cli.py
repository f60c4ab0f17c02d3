"""Command line front end.

Exit status: 0 success, 1 malformed input (usage or schema), 2 geometric
precondition failure, 3 infeasible optimization input.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .bisector import (
    bisector_2d_exact,
    continuity_probe,
    midpoint_map_batch,
    segment_path,
    simplify,
)
from .cell import cell_report, verify_tiling
from .covering import BENCHMARK_BODIES, InfeasibleError, OptimizeConfig, benchmark_suite, optimize
from .geometry import (
    DiscBicone,
    GeometryError,
    Lattice,
    SymmetricPolytope,
    lattice_points_array,
    skew_hexagon,
)
from .svg import Scene, emit_svg

EXIT_SCHEMA, EXIT_GEOMETRY, EXIT_INFEASIBLE = 1, 2, 3
TSV_COLUMNS = ("body", "seed", "starts", "density", "reference", "gap", "gamma",
               "feasible", "a", "b", "c", "theta")


class _Parser(argparse.ArgumentParser):
    # argparse uses status 2 for usage errors, which is reserved for geometry here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_SCHEMA, f"{self.prog}: error: {message}\n")


def _point(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(args) -> int:
    env = os.environ.get("MINKCELL_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise io.SchemaError(f"MINKCELL_SEED must be an integer, got {env!r}") from None
    return args.seed


def _emit(doc: dict) -> None:
    io.validate_result(doc)
    sys.stdout.write(io.dumps(doc))


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _outline(body, n=256) -> np.ndarray:
    if isinstance(body, SymmetricPolytope) and body.dim == 2:
        return body.vertices
    th = 2 * np.pi * np.arange(n) / n
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    return u / np.asarray(body.gauge(u))[:, None]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_bisector(args) -> int:
    body = io.body_from_json(io.load_json(args.body))
    p, q = args.p, args.q
    if len(p) != body.dim or len(q) != body.dim:
        raise GeometryError(f"points need {body.dim} coordinates")
    doc = {"schema": io.SCHEMA_TAG, "command": "bisector", "p": p.tolist(), "q": q.tolist()}
    scene = Scene(points=[np.array([p, q])])
    if body.dim == 2 and isinstance(body, SymmetricPolytope):
        chain = bisector_2d_exact(body, p, q)
        doc.update(simplify(chain).to_json())
        scene.chains.append(chain.polyline(args.extent))
        scene.polygons += [body.vertices + p, body.vertices + q]
    else:
        doc["samples"] = _sample_bisector(body, p, q, args.extent, args.samples).tolist()
    if args.svg:
        _write(args.svg, emit_svg(scene))
    _emit(doc)
    return 0


def _sample_bisector(body, p, q, extent, samples) -> np.ndarray:
    d = q - p
    n = len(d)
    # orthonormal basis of the hyperplane through the origin orthogonal to d
    basis = np.linalg.svd(d[None, :])[2][1:]
    s = np.linspace(-extent, extent, samples)
    grid = np.stack(np.meshgrid(*([s] * (n - 1)), indexing="ij"), -1).reshape(-1, n - 1)
    return midpoint_map_batch(body, p, q, grid @ basis)


def cmd_cell(args) -> int:
    body = io.body_from_json(io.load_json(args.body))
    lat = io.lattice_from_json(io.load_json(args.lattice))
    if body.dim != lat.dim:
        raise GeometryError("body and lattice dimensions differ")
    rep = cell_report(body, lat, samples=args.verify, seed=_seed(args), mc_samples=args.mc_samples)
    doc = {
        "schema": io.SCHEMA_TAG,
        "command": "cell",
        "gamma": rep.gamma,
        "relevant": [np.asarray(v).tolist() for v in rep.relevant],
        "relevant_count": len(rep.relevant),
        "volume": rep.volume,
    }
    if args.verify:
        doc["tiling_ok"] = bool(rep.tiling_ok)
    if body.dim == 2 and hasattr(rep.cell, "vertices"):
        doc["vertices"] = rep.cell.vertices.tolist()
    else:
        doc["volume_stderr"] = rep.volume_stderr
    if args.svg:
        scene = Scene(points=[np.array(rep.relevant)])
        if body.dim == 2:
            scene.polygons.append(_outline(body))
            if "vertices" in doc:
                scene.cells.append(rep.cell.vertices)
        _write(args.svg, emit_svg(scene))
    _emit(doc)
    return 0


def cmd_tile(args) -> int:
    body = io.body_from_json(io.load_json(args.body))
    lat = io.lattice_from_json(io.load_json(args.lattice))
    if body.dim != lat.dim:
        raise GeometryError("body and lattice dimensions differ")
    seed = _seed(args)
    v = verify_tiling(body, lat, samples=args.samples, seed=seed)
    _emit({
        "schema": io.SCHEMA_TAG,
        "command": "tile",
        "pass": v.ok,
        "volume": v.volume,
        "det": v.det,
        "volume_ok": v.volume_error <= v.volume_tolerance,
        "coverage_gaps": v.gaps,
        "interior_overlaps": v.overlap_count,
        "samples": v.samples,
        "seed": seed,
    })
    return 0


def cmd_optimize(args) -> int:
    body = io.body_from_json(io.load_json(args.body))
    seed = _seed(args)
    rep = optimize(body, OptimizeConfig(starts=args.starts, seed=seed, tol=args.tol))
    doc = {"schema": io.SCHEMA_TAG, "command": "optimize", "seed": seed, "starts": args.starts}
    doc.update(rep.to_json())
    if args.svg:
        _write(args.svg, _optimum_svg(body, rep.best.lattice))
    _emit(doc)
    return 0


def _optimum_svg(body, lat: Lattice) -> str:
    rep = cell_report(body, lat)
    pts = lattice_points_array(lat, body, 2.5)
    return emit_svg(Scene(polygons=[_outline(body)], points=[pts], cells=[rep.cell.vertices]))


def _bench_tsv(rows, timings: bool) -> str:
    cols = TSV_COLUMNS + (("runtime_s",) if timings else ())
    lines = ["\t".join(cols)]
    for r in rows:
        b = r.best
        vals = [r.body, str(r.seed), str(r.starts), f"{r.density:.9f}", f"{r.reference:.9f}",
                f"{r.gap:.3e}", f"{r.gamma:.9f}", str(r.feasible).lower(),
                f"{b.a:.9f}", f"{b.b:.9f}", f"{b.c:.9f}", f"{b.theta:.9f}"]
        if timings:
            vals.append(f"{r.runtime_s:.2f}")
        lines.append("\t".join(vals))
    return "\n".join(lines) + "\n"


def cmd_benchmark(args) -> int:
    from .plotting import plot_cell_in_body

    seed = _seed(args)
    bodies = args.bodies.split(",") if args.bodies else None
    t0 = time.perf_counter()
    rows = benchmark_suite(starts=args.starts, seed=seed, bodies=bodies)
    tsv = _bench_tsv(rows, args.timings)
    doc = {
        "schema": io.SCHEMA_TAG,
        "command": "benchmark",
        "seed": seed,
        "starts": args.starts,
        "rows": [{
            "body": r.body, "density": r.density, "reference": r.reference, "gap": r.gap,
            "gamma": r.gamma, "feasible": r.feasible, "best": list(r.best.as_tuple()),
            **({"runtime_s": r.runtime_s} if args.timings else {}),
        } for r in rows],
    }
    io.validate_result(doc)
    makers = dict(BENCHMARK_BODIES)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "benchmark.tsv", tsv)
        _write(out / "benchmark.json", io.dumps(doc))
    svg_dir = Path(args.svg) if args.svg else (Path(args.out) if args.out else None)
    if svg_dir is not None:
        svg_dir.mkdir(parents=True, exist_ok=True)
        for r in rows:
            body = makers[r.body]()
            _write(svg_dir / f"{r.body}.svg", _optimum_svg(body, r.best.lattice))
    if args.out:
        for r in rows:
            body = makers[r.body]()
            rep = cell_report(body, r.best.lattice)
            pts = lattice_points_array(r.best.lattice, body, 2.2)
            plot_cell_in_body(_outline(body), rep.cell.vertices, pts, Path(args.out) / f"{r.body}.png",
                              title=f"{r.body}: density {r.density:.6f}")
    sys.stdout.write(tsv)
    if args.timings:
        sys.stderr.write(f"total runtime {time.perf_counter() - t0:.1f} s\n")
    return 0


def example2_formula(i: int) -> list[dict]:
    """Pieces y = slope * x + intercept of the bisector of (0,0), (0,2) for C_i."""
    k = i / (i + 1)
    x1 = 1 - 1 / i
    return [
        {"x_min": None, "x_max": -2.0, "slope": 0.5, "intercept": 1.0},
        {"x_min": -2.0, "x_max": -x1, "slope": k, "intercept": 2 * k},
        {"x_min": -x1, "x_max": x1, "slope": 0.0, "intercept": 1.0},
        {"x_min": x1, "x_max": 2.0, "slope": k, "intercept": 2 / (i + 1)},
        {"x_min": 2.0, "x_max": None, "slope": 0.5, "intercept": 1.0},
    ]


def example1_paths(xs=(0.5, 1.5, 2.0, 3.0), half=0.5, samples=401):
    """Continuity probes of the bicone bisector across (x, 0, 0)."""
    body = DiscBicone((1.0, 0.0, 1.0))
    p, q = np.zeros(3), np.array([0.0, 0.0, 1.0])
    out = []
    for x in xs:
        path = segment_path([x, -half, 0.0], [x, half, 0.0])
        events = continuity_probe(body, p, q, path, samples)
        out.append({
            "x": float(x),
            "predicted_jump": max(0.0, (abs(x) - 1) / 2),
            "jumps": [{"location": loc.tolist(), "magnitude": mag} for loc, mag in events],
        })
    return out, body, p, q


def cmd_examples(args) -> int:
    from .plotting import plot_bisector_family, plot_probe

    doc = {"schema": io.SCHEMA_TAG, "command": "examples", "which": args.which}
    p, q = np.zeros(2), np.array([0.0, 2.0])
    if args.which == 2:
        if args.i < 1:
            raise GeometryError("i must be a positive integer")
        poly = skew_hexagon(args.i)
        chain = bisector_2d_exact(poly, p, q)
        doc["i"] = args.i
        doc["chain"] = simplify(chain).to_json()
        doc["formula"] = example2_formula(args.i)
        if args.svg:
            _write(args.svg, emit_svg(Scene(polygons=[poly.vertices], chains=[chain.polyline(4.0)],
                                            points=[np.array([p, q])])))
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            fam = [("square", np.array([[-4.0, 1.0], [4.0, 1.0]]))]
            for i in sorted({1, 2, 5, 10, args.i}):
                fam.append((f"i = {i}", bisector_2d_exact(skew_hexagon(i), p, q).polyline(6.0)))
            plot_bisector_family(fam, out / "example2_bisectors.png",
                                 title="bisectors of (0,0), (0,2)")
    else:
        paths, body, p3, q3 = example1_paths()
        doc["paths"] = paths
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            s = np.linspace(-0.5, 0.5, 401)
            curves = []
            for rec in paths:
                X = np.stack([np.full_like(s, rec["x"]), s, np.zeros_like(s)], axis=1)
                curves.append((f"x = {rec['x']}", s, midpoint_map_batch(body, p3, q3, X)[:, 2]))
            plot_probe(curves, out / "example1_probe.png", title="bicone bisector across (x, 0, 0)")
    _emit(doc)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="random seed (MINKCELL_SEED overrides)")
    common.add_argument("--svg", help="write an SVG figure to this path")

    ap = _Parser(prog="minkcell", description="Minkowski bisectors, cells and lattice coverings")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("bisector", parents=[common], help="bisector of two points")
    s.add_argument("--body", required=True)
    s.add_argument("--p", type=_point, required=True)
    s.add_argument("--q", type=_point, required=True)
    s.add_argument("--extent", type=float, default=4.0)
    s.add_argument("--samples", type=int, default=21, help="grid size for non-planar bodies")
    s.set_defaults(func=cmd_bisector)

    s = sub.add_parser("cell", parents=[common], help="Minkowski cell of a lattice")
    s.add_argument("--body", required=True)
    s.add_argument("--lattice", required=True)
    s.add_argument("--mc-samples", type=int, default=200_000)
    s.add_argument("--verify", type=int, default=0, metavar="N",
                   help="also run the tiling check with N probes")
    s.set_defaults(func=cmd_cell)

    s = sub.add_parser("tile", parents=[common], help="verify that cells tile space")
    s.add_argument("--body", required=True)
    s.add_argument("--lattice", required=True)
    s.add_argument("--samples", type=int, default=10_000)
    s.set_defaults(func=cmd_tile)

    s = sub.add_parser("optimize", parents=[common], help="thinnest lattice covering search")
    s.add_argument("--body", required=True)
    s.add_argument("--starts", type=int, default=32)
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("benchmark", parents=[common], help="covering benchmark table (TSV)")
    s.add_argument("--starts", type=int, default=32)
    s.add_argument("--bodies", help="comma-separated subset of square,hexagon,octagon,16-gon,64-gon")
    s.add_argument("--out", help="directory for TSV, JSON, SVG and PNG outputs")
    s.add_argument("--timings", action="store_true", help="add runtimes (not reproducible)")
    s.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("examples", parents=[common], help="worked examples")
    s.add_argument("--which", type=int, choices=(1, 2), required=True)
    s.add_argument("--i", type=int, default=2)
    s.add_argument("--out", help="directory for PNG figures")
    s.set_defaults(func=cmd_examples)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    for name in ("starts", "samples", "mc_samples"):
        if getattr(args, name, 1) < 1:
            ap.error(f"--{name.replace('_', '-')} must be positive")
    if getattr(args, "tol", 1.0) <= 0 or getattr(args, "extent", 1.0) <= 0:
        ap.error("tolerances and extents must be positive")
    if getattr(args, "verify", 0) < 0:
        ap.error("--verify must be non-negative")
    if getattr(args, "bodies", None):
        known = [name for name, _ in BENCHMARK_BODIES]
        unknown = sorted(set(args.bodies.split(",")) - set(known))
        if unknown:
            ap.error(f"unknown benchmark bodies {unknown}; choose from {','.join(known)}")
    try:
        return args.func(args)
    except io.SchemaError as exc:
        print(f"minkcell: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except InfeasibleError as exc:
        print(f"minkcell: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except GeometryError as exc:
        print(f"minkcell: geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except OSError as exc:
        print(f"minkcell: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
