"""``rosfit`` command line: simulate, compare, calibrate, realtime, benchmark.

Exit codes: 0 success, 1 invalid input, 2 runtime failure. Output files are
written to a staging directory and moved into ``--out`` only when the whole
command succeeds.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import re
import shutil
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from rosfit import __version__, _accel, dfo
from rosfit.calibrator import (DEFAULT_BOUNDS, CalibrationSpec, Problem, calibrate,
                               realtime_calibrate, run_benchmark)
from rosfit.ellipse import FactorTuple
from rosfit.landscape import (LandscapeError, ScarSeries, format_ascii_grid, load_burn_grid,
                              load_ignition, load_landscape, load_scars, load_weather,
                              parse_ignition)
from rosfit.metrics import compare, final_only_weights, uniform_weights
from rosfit.simulator import FMS, GLOBAL, AdjustmentSet, run

log = logging.getLogger("rosfit")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument plumbing

def _add_instance_args(p):
    p.add_argument("--fuels", required=True, type=Path, help="fuel-code ASCII grid")
    p.add_argument("--fuel-table", required=True, type=Path, help="CSV id,name,hros_ref,bros_ref,lb_ref")
    p.add_argument("--weather", required=True, type=Path, help="CSV wind_speed,wind_heading,duration")
    p.add_argument("--reference-wind", type=float, default=10.0, help="km/h (default 10)")
    ig = p.add_mutually_exclusive_group(required=True)
    ig.add_argument("--ignition", help="row,col[,start_minutes]")
    ig.add_argument("--ignition-file", type=Path, help="one-line CSV row,col[,start_minutes]")
    p.add_argument("--dt", type=float, default=1.0, help="simulation step, minutes (default 1)")


def _add_output_args(p, render=True):
    p.add_argument("--out", required=True, type=Path, help="output directory")
    if render:
        p.add_argument("--render", action="store_true", help="also write PGM images of the scars")


def _add_observed_args(p):
    p.add_argument("--observed", required=True, type=Path,
                   help="directory of observed scar grids (*.asc, sorted by name)")
    p.add_argument("--report-every", type=float, default=60.0,
                   help="minutes between observed scars when file names carry no time")


def _add_fit_args(p, algorithm=True):
    p.add_argument("--mode", choices=(GLOBAL, FMS), default=GLOBAL)
    if algorithm:
        p.add_argument("--algorithm", choices=dfo.ALGORITHMS, default=dfo.BOBYQA)
    p.add_argument("--mu", choices=("uniform", "final-only", "custom-file"), default="uniform")
    p.add_argument("--mu-file", type=Path, help="one weight per line (with --mu custom-file)")
    p.add_argument("--norm", choices=("frobenius", "hamming"), default="frobenius")
    p.add_argument("--max-evals", type=int, default=200)
    p.add_argument("--max-time", type=float, default=float("inf"), help="seconds")
    p.add_argument("--xtol", type=float, default=1e-16)
    p.add_argument("--bounds", default=f"{DEFAULT_BOUNDS[0]},{DEFAULT_BOUNDS[1]}", help="lo,hi")
    p.add_argument("--x0", help="start factors x1,x2,x3,x4 (replicated per fuel in fms mode)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rosfit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rosfit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run the fire-growth simulator")
    _add_instance_args(p)
    _add_output_args(p)
    p.add_argument("--horizon", type=float, default=420.0, help="minutes (default 420)")
    p.add_argument("--report-every", type=float, default=60.0, help="minutes (default 60)")
    fx = p.add_mutually_exclusive_group()
    fx.add_argument("--factors", help="global factors x1,x2,x3,x4")
    fx.add_argument("--factors-json", type=Path, help="adjustment set JSON (e.g. a calibrate result)")

    p = sub.add_parser("compare", help="metrics between two burn grids")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--ssim-window", type=int, default=None,
                   help="sliding-window SSIM side (default: single global window)")

    for name, hlp in (("calibrate", "fit adjustment factors to observed scars"),
                      ("realtime", "hour-by-hour warm-started refits")):
        p = sub.add_parser(name, help=hlp)
        _add_instance_args(p)
        _add_observed_args(p)
        _add_fit_args(p)
        _add_output_args(p)

    p = sub.add_parser("benchmark", help="compare optimizers on one instance")
    _add_instance_args(p)
    _add_observed_args(p)
    _add_fit_args(p, algorithm=False)
    p.add_argument("--algorithms", default=",".join(dfo.ALGORITHMS),
                   help=f"comma list from {','.join(dfo.ALGORITHMS)}")
    _add_output_args(p, render=False)

    for p in sub.choices.values():
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def _floats(text: str, n: int | None, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{what}: expected {n} values, got {len(vals)}")
    return vals


def _instance(args):
    land = load_landscape(args.fuels, args.fuel_table)
    weather = load_weather(args.weather, args.reference_wind)
    ign = parse_ignition(args.ignition) if args.ignition else load_ignition(args.ignition_file)
    ign.validate(land)
    return land, weather, ign


_TIME_IN_NAME = re.compile(r"(\d+)\.asc$")


def _observed(args, land) -> ScarSeries:
    d = args.observed
    if not d.is_dir():
        raise FileNotFoundError(f"observed scar directory not found: {d}")
    paths = sorted(d.glob("*.asc"))
    if not paths:
        raise LandscapeError(f"no *.asc scar files in {d}")
    matches = [_TIME_IN_NAME.search(p.name) for p in paths]
    if all(matches):
        stamps = [float(m.group(1)) for m in matches]
    else:
        stamps = [args.report_every * (i + 1) for i in range(len(paths))]
    order = np.argsort(stamps, kind="stable")
    series = load_scars([paths[i] for i in order], [stamps[i] for i in order])
    series.check_compatible(land)
    return series


def _mu(args, T: int):
    if args.mu == "uniform":
        return uniform_weights(T)
    if args.mu == "final-only":
        return final_only_weights(T)
    if args.mu_file is None:
        raise UsageError("--mu custom-file requires --mu-file")
    vals = [float(v) for v in args.mu_file.read_text().split()]
    if len(vals) != T:
        raise UsageError(f"--mu-file has {len(vals)} weights for {T} observed scars")
    return np.array(vals)


def _spec(args, land, T: int, algorithm=None) -> CalibrationSpec:
    lo, hi = _floats(args.bounds, 2, "--bounds")
    x0 = None
    if args.x0:
        x0 = AdjustmentSet.uniform(_floats(args.x0, 4, "--x0"), args.mode, land.fuels_present())
    opts = dfo.OptOptions(xtol_abs=args.xtol, max_evals=args.max_evals, max_time=args.max_time)
    return CalibrationSpec(args.mode, _mu(args, T), algorithm or args.algorithm, opts, x0,
                           (lo, hi), args.norm, args.dt)


# ---------------------------------------------------------------------------
# artifacts

def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(args, argv, inputs: dict[str, Path], extra: dict | None = None) -> dict:
    resolved = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
                if k != "func"}
    for k, v in list(resolved.items()):
        if isinstance(v, float) and not np.isfinite(v):
            resolved[k] = str(v)
    files = {}
    for name, path in inputs.items():
        if path is None:
            continue
        path = Path(path)
        if path.is_dir():
            files[name] = {str(p.name): _sha256(p) for p in sorted(path.glob("*.asc"))}
        else:
            files[name] = {"path": str(path.resolve()), "sha256": _sha256(path)}
    m = {
        "tool": "rosfit",
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "resolved_args": resolved,
        "inputs": files,
        "numba": _accel.USE_NUMBA,
        "deterministic": True,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        m.update(extra)
    return m


class _Staging:
    """Collect outputs in a temp dir; move them into ``out`` on success."""

    def __init__(self, out: Path):
        self.out = Path(out)
        self.out.parent.mkdir(parents=True, exist_ok=True)
        self.dir = Path(tempfile.mkdtemp(prefix=".rosfit-staging-", dir=self.out.parent))

    def path(self, rel: str) -> Path:
        p = self.dir / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def text(self, rel: str, content: str) -> None:
        self.path(rel).write_text(content)

    def json(self, rel: str, obj) -> None:
        self.text(rel, json.dumps(obj, indent=2, default=_json_default) + "\n")

    def commit(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        for src in sorted(self.dir.rglob("*")):
            if src.is_file():
                dst = self.out / src.relative_to(self.dir)
                dst.parent.mkdir(parents=True, exist_ok=True)
                os.replace(src, dst)
        shutil.rmtree(self.dir, ignore_errors=True)

    def abort(self) -> None:
        shutil.rmtree(self.dir, ignore_errors=True)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o)}")


def pgm_bytes(grid: np.ndarray, scale: int = 4) -> bytes:
    """Binary PGM (P5); burned cells dark, unburned white."""
    g = np.asarray(grid, dtype=np.uint8)
    img = np.where(g == 1, 0, 255).astype(np.uint8)
    img = np.kron(img, np.ones((scale, scale), dtype=np.uint8))
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode() + img.tobytes()


def _write_series(stage: _Staging, series: ScarSeries, cell_size: float, subdir: str,
                  render: bool) -> list[str]:
    names = []
    for grid, t in zip(series.grids, series.timestamps):
        name = f"{subdir}/scar_{int(round(t)):05d}.asc"
        stage.text(name, format_ascii_grid(grid, cell_size))
        names.append(name)
        if render:
            stage.path(name[:-4] + ".pgm").write_bytes(pgm_bytes(grid))
    return names


def _trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["neval", "f_incumbent"])
    w.writerows((n, repr(f)) for n, f in trace)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(args, argv) -> int:
    land, weather, ign = _instance(args)
    if args.factors:
        x = AdjustmentSet(GLOBAL, global_factors=FactorTuple(*_floats(args.factors, 4, "--factors")))
    elif args.factors_json:
        d = json.loads(args.factors_json.read_text())
        x = AdjustmentSet.from_dict(d.get("x_star", d))
    else:
        x = AdjustmentSet.identity(GLOBAL)
    if args.report_every <= 0 or args.horizon < args.report_every:
        raise UsageError("need 0 < --report-every <= --horizon")
    n = round(args.horizon / args.report_every)
    series = run(land, weather, ign, x, [args.report_every * (i + 1) for i in range(n)], args.dt)
    stage = _Staging(args.out)
    try:
        files = _write_series(stage, series, land.cell_size, "scars", args.render)
        stage.json("manifest.json", _manifest(
            args, argv, {"fuels": args.fuels, "fuel_table": args.fuel_table,
                         "weather": args.weather, "ignition_file": args.ignition_file},
            {"adjustment": x.to_dict(), "timestamps": list(series.timestamps),
             "burned_cells": series.burned_area().tolist(), "outputs": files}))
        stage.commit()
    except BaseException:
        stage.abort()
        raise
    log.info("wrote %d scars to %s", len(files), args.out)
    return EXIT_OK


def cmd_compare(args, argv) -> int:
    a, b = load_burn_grid(args.a), load_burn_grid(args.b)
    if a.shape != b.shape:
        raise LandscapeError(f"incompatible grid dimensions: {a.shape} vs {b.shape}")
    metrics = compare(a, b)
    if args.ssim_window:
        from rosfit.metrics import ssim
        metrics["ssim"] = ssim(a, b, window=args.ssim_window)
    if args.format == "json":
        print(json.dumps(metrics))
    else:
        print(",".join(metrics))
        print(",".join(repr(v) for v in metrics.values()))
    return EXIT_OK


def _fit_inputs(args):
    land, weather, ign = _instance(args)
    observed = _observed(args, land)
    return land, weather, ign, observed


def _fit_manifest_inputs(args):
    return {"fuels": args.fuels, "fuel_table": args.fuel_table, "weather": args.weather,
            "ignition_file": args.ignition_file, "observed": args.observed}


def cmd_calibrate(args, argv) -> int:
    land, weather, ign, observed = _fit_inputs(args)
    spec = _spec(args, land, len(observed))
    result = calibrate(land, weather, ign, observed, spec)
    stage = _Staging(args.out)
    try:
        stage.json("result.json", result.to_dict())
        stage.text("trace.csv", _trace_csv(result.opt.trace))
        if args.render:
            fitted = run(land, weather, ign, result.x_star, observed.timestamps, args.dt)
            _write_series(stage, fitted, land.cell_size, "fitted", True)
        stage.json("manifest.json", _manifest(args, argv, _fit_manifest_inputs(args),
                                              {"mu": list(spec.mu)}))
        stage.commit()
    except BaseException:
        stage.abort()
        raise
    log.info("error %.6g -> %.6g in %d evaluations", result.initial_error, result.final_error,
             result.opt.neval)
    return EXIT_OK


def cmd_realtime(args, argv) -> int:
    land, weather, ign, observed = _fit_inputs(args)
    spec = _spec(args, land, len(observed))
    results = realtime_calibrate(land, weather, ign, observed, spec)
    stage = _Staging(args.out)
    try:
        steps = []
        for t, r in enumerate(results, start=1):
            d = r.to_dict()
            d["step"] = t
            d["timestamp"] = observed.timestamps[t - 1]
            steps.append(d)
        stage.json("realtime.json", {"steps": steps})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "neval", "f_incumbent"])
        for t, r in enumerate(results, start=1):
            w.writerows((t, n, repr(f)) for n, f in r.opt.trace)
        stage.text("trace.csv", buf.getvalue())
        if args.render:
            fitted = run(land, weather, ign, results[-1].x_star, observed.timestamps, args.dt)
            _write_series(stage, fitted, land.cell_size, "fitted", True)
        stage.json("manifest.json", _manifest(args, argv, _fit_manifest_inputs(args)))
        stage.commit()
    except BaseException:
        stage.abort()
        raise
    return EXIT_OK


def cmd_benchmark(args, argv) -> int:
    land, weather, ign, observed = _fit_inputs(args)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    bad = sorted(set(algorithms) - set(dfo.ALGORITHMS))
    if bad:
        raise UsageError(f"unknown algorithm(s) {bad}; choose from {dfo.ALGORITHMS}")
    spec = _spec(args, land, len(observed), algorithm=algorithms[0] if algorithms else None)
    table = run_benchmark(Problem(land, weather, ign, observed), algorithms, spec)
    stage = _Staging(args.out)
    try:
        stage.text("benchmark.csv", table.to_csv())
        stage.json("manifest.json", _manifest(args, argv, _fit_manifest_inputs(args)))
        stage.commit()
    except BaseException:
        stage.abort()
        raise
    sys.stdout.write(table.to_csv())
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "calibrate": cmd_calibrate,
    "realtime": cmd_realtime,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"rosfit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except (ValueError, FileNotFoundError) as exc:
        print(f"rosfit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"rosfit: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
