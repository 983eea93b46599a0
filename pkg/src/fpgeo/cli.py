"""Command-line front end.

Every command writes a JSON report (or CSV rows) that echoes its
configuration; reruns with the same arguments produce identical bytes.
Exit codes: 0 success, 2 usage or configuration error, 3 estimation
failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time

import numpy as np

from . import __version__
from .errors import FpgeoError, UsageError
from .shapes import Box, load_shape

log = logging.getLogger("fpgeo")

METHODS = ("tv", "rotavg", "mollified", "minkowski", "crofton")
MODELS = ("pixel-approx", "hull-approx", "swiss-cheese", "boolean")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _number(text):
    """Float that also accepts simple fractions such as 1/256."""
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _numbers(text):
    return [_number(v) for v in text.split(",") if v.strip()]


def _window(text, dim=None):
    vals = _floats(text)
    if len(vals) % 2 or not vals:
        raise UsageError("window needs 2d numbers: lo..., hi...")
    d = len(vals) // 2
    if dim is not None and d != dim:
        raise UsageError(f"window has dimension {d}, expected {dim}")
    return Box(tuple(vals[:d]), tuple(vals[d:]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


class Output:
    """Collects the report and writes it once the command finishes."""

    def __init__(self, args):
        self.args = args
        self.t0 = time.perf_counter()

    def config(self):
        skip = {"func", "timing", "verbose"}
        return {k: v for k, v in sorted(vars(self.args).items()) if k not in skip}

    def report(self, result):
        wall = time.perf_counter() - self.t0
        log.info("wall time %.3f s", wall)
        return {"tool": "fpgeo", "version": __version__, "command": self.args.command,
                "config": self.config(), "seed": getattr(self.args, "seed", None),
                "wall_time": wall if self.args.timing else None, "result": result}

    def emit_json(self, result, path=None):
        text = json.dumps(_jsonable(self.report(result)), indent=2, sort_keys=True) + "\n"
        _write(text, path if path is not None else self.args.out)

    def emit_rows(self, rows, header, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        _write(buf.getvalue(), path if path is not None else self.args.out)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _load_grid(path):
    from .grid import load_grid

    try:
        return load_grid(path)
    except OSError as exc:
        raise UsageError(f"cannot read grid {path}: {exc}") from exc


def _load_shape(path):
    try:
        return load_shape(path)
    except OSError as exc:
        raise UsageError(f"cannot read shape {path}: {exc}") from exc


# --- commands ---------------------------------------------------------------------


def cmd_rasterize(args, out):
    from .grid import grid_volume, rasterize, save_grid

    if args.shape is None or args.h is None:
        raise UsageError("rasterize needs --shape and --h")
    shape = _load_shape(args.shape)
    if args.window:
        window = _window(args.window, shape.dim)
    else:
        lo, hi = shape.bbox()
        window = Box(tuple(lo - 2 * args.h), tuple(hi + 2 * args.h))
    grid = rasterize(shape, args.h, window)
    if args.grid_out is None:
        raise UsageError("rasterize needs --grid-out")
    save_grid(grid, args.grid_out)
    out.emit_json({"extents": list(grid.extents), "spacing": grid.spacing,
                   "origin": list(grid.origin), "cells_set": grid.count(),
                   "volume": grid_volume(grid), "clipped": grid.clipped})


def cmd_perimeter(args, out):
    from . import perimeter as P
    from .crofton import crofton_perimeter_estimate
    from .report import EstimateReport

    method = args.method
    if method == "rotavg":
        if args.shape is None or args.h is None:
            raise UsageError("rotavg rotates an analytic shape: give --shape and --h")
        rep = P.rotation_averaged_tv_perimeter(_load_shape(args.shape), args.h,
                                               args.reps or 64, args.seed)
    else:
        if args.grid is None:
            raise UsageError(f"method {method} needs --grid")
        grid = _load_grid(args.grid[0])
        if method == "tv":
            rep = EstimateReport(P.tv_perimeter(grid), 0.0, 1, None, "tv", {})
        elif method == "mollified":
            rho = args.rho if args.rho is not None else P.default_rho(grid)
            rep = EstimateReport(P.mollified_variation(grid, rho), 0.0, 1, None, "mollified",
                                 {"rho": rho})
        elif method == "minkowski":
            r = args.r if args.r is not None else 4 * grid.spacing
            rep = EstimateReport(P.minkowski_perimeter(grid, r), 0.0, 1, None, "minkowski",
                                 {"r": r})
        else:
            j = args.j or 1
            rep = crofton_perimeter_estimate(grid, j, args.n_flats or 10000, args.convention,
                                             args.seed, args.rho)
    if args.format == "csv":
        out.emit_rows([(rep.method, rep.value, rep.stderr, rep.n, rep.seed)],
                      ("method", "value", "stderr", "n", "seed"))
    else:
        out.emit_json(rep.to_dict())


def cmd_metric(args, out):
    from .metrics import strict_metric

    if not args.grid or len(args.grid) != 2:
        raise UsageError("metric needs two grids: --grid A --grid B")
    a, b = (_load_grid(p) for p in args.grid)
    rep = strict_metric(a, b, args.estimator, args.rho)
    if args.format == "csv":
        out.emit_rows([(rep.l1_part, rep.variation_gap, rep.total)],
                      ("l1_part", "variation_gap", "total"))
    else:
        out.emit_json(rep.to_dict())


def cmd_crofton_verify(args, out):
    from .crofton import mean_projection_length, projection_average_mc

    n = args.n or 10 ** 6
    rep = projection_average_mc(args.d, args.j or 1, n, args.seed)
    exact = mean_projection_length(args.d, args.j or 1)
    res = rep.to_dict()
    res.update({"exact": exact, "relative_error": rep.value / exact - 1})
    if args.format == "csv":
        out.emit_rows([(args.d, args.j or 1, n, rep.value, rep.stderr, exact)],
                      ("d", "j", "n", "value", "stderr", "exact"))
    else:
        out.emit_json(res)


def _model_pixel(args):
    from .models.lattice import pixel_approximation
    from .perimeter import tv_perimeter
    from .grid import grid_volume
    from .rng import derive_seed

    body = _load_shape(args.shape)
    per, vol = body.perimeter(), body.volume()
    rows, summary = [], []
    for i, t in enumerate(args.t):
        ratios, vols = [], []
        for r in range(args.reps):
            z = pixel_approximation(body, t, derive_seed(args.seed, i, r))
            p, v = tv_perimeter(z), grid_volume(z)
            rows.append((t, r, v, p, p / per))
            ratios.append(p / per)
            vols.append(v / vol)
        summary.append({"t": t, "mean_perimeter_ratio": float(np.mean(ratios)),
                        "mean_volume_ratio": float(np.mean(vols))})
    return rows, ("t", "rep", "volume", "perimeter", "perimeter_ratio"), {
        "per_t": summary, "anisotropy_limit": 4 / math.pi}


def _model_hull(args):
    from .models.lattice import hull_approximation, levy_distance_to_point
    from .rng import derive_seed

    body = _load_shape(args.shape)
    per, vol = body.perimeter(), body.volume()
    rows, summary = [], []
    for i, t in enumerate(args.t):
        hulls = [hull_approximation(body, t, derive_seed(args.seed, i, r))
                 for r in range(args.reps)]
        for r, hl in enumerate(hulls):
            rows.append((t, r, hl.area, hl.perimeter, int(hl.degenerate), hl.perimeter / per))
        areas = [hl.area for hl in hulls]
        pers = [hl.perimeter for hl in hulls]
        summary.append({"t": t, "mean_perimeter_ratio": float(np.mean(pers)) / per,
                        "mean_area_ratio": float(np.mean(areas)) / vol,
                        "levy_area": levy_distance_to_point(areas, vol),
                        "levy_perimeter": levy_distance_to_point(pers, per)})
    return rows, ("t", "rep", "area", "perimeter", "degenerate", "perimeter_ratio"), {
        "per_t": summary}


def _model_cheese(args):
    from .grid import IndicatorGrid
    from .metrics import strict_metric
    from .models.cheese import swiss_cheese

    h = args.h or 1 / 256
    rows, summary = [], []
    for e in args.eps:
        ds = []
        for r in range(args.reps):
            c = swiss_cheese(e, args.n_balls, args.seed + r, h)
            full = IndicatorGrid.empty_like(c.xi, True)
            d = strict_metric(c.xi, full, rho=args.rho)
            ds.append(d.total)
            rows.append((e, r, c.perimeter, c.perimeter_bound, c.complement_perimeter,
                         d.l1_part, d.variation_gap, d.total))
        summary.append({"eps": e, "mean_strict_distance": float(np.mean(ds)),
                        "perimeter_bound": 2 * math.pi * e})
    return rows, ("eps", "rep", "perimeter", "perimeter_bound", "complement_perimeter",
                  "l1_part", "variation_gap", "strict_distance"), {"per_eps": summary}


def _load_grain(spec):
    from .models.process import grain_from_dict

    if spec is None:
        raise UsageError("boolean model needs --grain")
    text = spec
    if not spec.lstrip().startswith("{"):
        try:
            with open(spec) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read grain spec {spec}: {exc}") from exc
    try:
        return grain_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise UsageError(f"grain spec is not valid JSON: {exc}") from exc


def _model_boolean(args):
    from .models import process as M

    if args.gamma is None:
        raise UsageError("boolean model needs --gamma")
    grain = _load_grain(args.grain)
    window = _window(args.window, grain.dim) if args.window else Box.cube(0.0, 20.0, grain.dim)
    cfg = M.FpProcessConfig(args.gamma, window, grain, args.seed)
    h = args.h or 1 / 128
    run = M.boolean_run(cfg, h, args.reps, n_bins=args.n_bins, j=args.j,
                        n_flats=args.n_flats or 1000, rho=args.rho)
    vol = run.volume
    rows = [(r.index, r.n_particles, r.perimeter / vol,
             None if r.section is None else r.section / vol) for r in run.records]
    est = run.perimeter()
    summary = {"specific_perimeter": est.to_dict(),
               "closed_form": M.boolean_specific_perimeter(args.gamma, grain),
               "inner_window": [list(cfg.inner_window.lo), list(cfg.inner_window.hi)]}
    if args.reps > 1:
        am = run.area_measure()
        summary["area_measure"] = {"density": am.density, "stderr": am.stderr,
                                   "total": am.total.value}
        if args.j:
            summary["stereology"] = run.stereology(args.convention).to_dict()
    return rows, ("rep", "n_particles", "perimeter_density", "section_mass_density"), summary


def cmd_model(args, out):
    if args.model in ("pixel-approx", "hull-approx"):
        if args.shape is None or not args.t:
            raise UsageError(f"{args.model} needs --shape and --t")
    if args.model == "swiss-cheese" and not args.eps:
        raise UsageError("swiss-cheese needs --eps")
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    fn = {"pixel-approx": _model_pixel, "hull-approx": _model_hull,
          "swiss-cheese": _model_cheese, "boolean": _model_boolean}[args.model]
    rows, header, summary = fn(args)
    if args.format == "csv" or args.summary:
        out.emit_rows(rows, header)
        if args.summary:
            out.emit_json(summary, args.summary)
    else:
        summary["rows"] = [dict(zip(header, r)) for r in rows]
        out.emit_json(summary)


# --- parser -----------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--timing", action="store_true",
                        help="record wall time in the JSON report (breaks byte-identity)")
    common.add_argument("--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fpgeo", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fpgeo {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rasterize", parents=[common], help="rasterize a shape spec")
    r.add_argument("--shape")
    r.add_argument("--h", type=_number)
    r.add_argument("--window", help="lo..., hi... (default: shape bbox plus 2h)")
    r.add_argument("--grid-out", help="grid file (.pbm for 2D, otherwise FPG1)")
    r.set_defaults(func=cmd_rasterize)

    q = sub.add_parser("perimeter", parents=[common], help="estimate a perimeter")
    q.add_argument("--grid", action="append")
    q.add_argument("--shape")
    q.add_argument("--method", choices=METHODS, required=True)
    q.add_argument("--h", type=_number, help="spacing for rotavg")
    q.add_argument("--rho", type=_number)
    q.add_argument("--r", type=_number, help="Minkowski dilation radius")
    q.add_argument("--j", type=int)
    q.add_argument("--n-flats", type=int)
    q.add_argument("--reps", type=int, help="rotations for rotavg")
    q.add_argument("--convention", choices=("self", "paper"), default="self")
    q.set_defaults(func=cmd_perimeter)

    m = sub.add_parser("metric", parents=[common], help="strict distance between two grids")
    m.add_argument("--grid", action="append")
    m.add_argument("--estimator", choices=("mollified", "tv", "minkowski"), default="mollified")
    m.add_argument("--rho", type=_number)
    m.set_defaults(func=cmd_metric)

    o = sub.add_parser("model", parents=[common], help="random-set experiments")
    o.add_argument("model", choices=MODELS)
    o.add_argument("--shape")
    o.add_argument("--t", type=_numbers, help="comma-separated lattice scales")
    o.add_argument("--eps", type=_numbers, help="comma-separated Swiss-cheese radii")
    o.add_argument("--n-balls", type=int)
    o.add_argument("--gamma", type=_number)
    o.add_argument("--grain", help="grain JSON (inline or path)")
    o.add_argument("--window")
    o.add_argument("--h", type=_number)
    o.add_argument("--rho", type=_number)
    o.add_argument("--j", type=int)
    o.add_argument("--n-flats", type=int)
    o.add_argument("--n-bins", type=int, default=16)
    o.add_argument("--reps", type=int, default=10)
    o.add_argument("--convention", choices=("self", "paper"), default="self")
    o.add_argument("--summary", help="also write the summary JSON here (rows go to --out)")
    o.set_defaults(func=cmd_model)

    c = sub.add_parser("crofton-verify", parents=[common],
                       help="Monte-Carlo mean projection length")
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--j", type=int, default=1)
    c.add_argument("--n", type=int)
    c.set_defaults(func=cmd_crofton_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="fpgeo: %(message)s", stream=sys.stderr)
    try:
        args.func(args, Output(args))
    except (UsageError, ValueError) as exc:
        print(f"fpgeo: error: {exc}", file=sys.stderr)
        return 2
    except FpgeoError as exc:
        print(f"fpgeo: estimation failed: {exc}", file=sys.stderr)
        return 3
    except (ArithmeticError, MemoryError, RuntimeError) as exc:
        print(f"fpgeo: estimation failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
