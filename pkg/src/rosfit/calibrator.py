"""Fit ROS adjustment factors to observed scar series."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from rosfit import dfo
from rosfit.dfo import OptOptions, OptResult
from rosfit.landscape import IgnitionSpec, Landscape, LandscapeError, ScarSeries, WeatherStream
from rosfit.metrics import grid_norm, uniform_weights
from rosfit.simulator import GLOBAL, AdjustmentSet, BlackBox, FireCase, run

DEFAULT_BOUNDS = (0.01, 10.0)
UNCONSTRAINED = (dfo.NELDER_MEAD, dfo.NEWUOA)


@dataclass
class CalibrationSpec:
    """What to fit and how.

    ``mu=None`` means uniform weights over the observed series. The box is
    handed to pattern search and bobyqa; nelder-mead and newuoa run
    unconstrained and proposals outside the box score ``+inf``.
    """
    mode: str = GLOBAL
    mu: Sequence[float] | None = None
    algorithm: str = dfo.BOBYQA
    opts: OptOptions = field(default_factory=lambda: OptOptions(max_evals=200))
    x0: AdjustmentSet | None = None
    bounds: tuple[float, float] = DEFAULT_BOUNDS
    norm: str = "frobenius"
    dt: float = 1.0


@dataclass
class CalibrationResult:
    x_star: AdjustmentSet
    initial_error: float
    final_error: float
    opt: OptResult
    forecast_error: float | None = None
    x_start: AdjustmentSet | None = None

    def to_dict(self) -> dict:
        d = {
            "x_star": self.x_star.to_dict(),
            "x_star_flat": [float(v) for v in self.x_star.flatten()],
            "initial_error": self.initial_error,
            "final_error": self.final_error,
            "optimizer": self.opt.to_dict(),
        }
        if self.forecast_error is not None:
            d["forecast_error"] = self.forecast_error
        if self.x_start is not None:
            d["x_start"] = [float(v) for v in self.x_start.flatten()]
        return d


@dataclass
class Problem:
    """One calibration instance: landscape, fire(s) and observed scars."""
    land: Landscape
    weather: WeatherStream
    ignition: IgnitionSpec
    observed: ScarSeries
    extra_fires: list[FireCase] = field(default_factory=list)


def _opts_for(spec: CalibrationSpec, n: int) -> OptOptions:
    o = spec.opts
    bounds = None if spec.algorithm in UNCONSTRAINED else spec.bounds
    return OptOptions(o.xtol_abs, o.max_evals, o.max_time, bounds, o.m_points, o.initial_step)


def _start_point(land: Landscape, spec: CalibrationSpec) -> AdjustmentSet:
    x0 = spec.x0 or AdjustmentSet.identity(spec.mode, land.fuels_present())
    if x0.mode != spec.mode:
        raise ValueError(f"start point is {x0.mode} but the calibration mode is {spec.mode}")
    x0.check_covers(land)
    flat = x0.flatten()
    lo, hi = spec.bounds
    if np.any(flat < lo) or np.any(flat > hi):
        raise ValueError(f"start point {flat} outside bounds [{lo}, {hi}]")
    return x0


def build_objective(land: Landscape, weather: WeatherStream, ign: IgnitionSpec,
                    observed: ScarSeries, spec: CalibrationSpec,
                    extra_fires: Sequence[FireCase] = ()) -> BlackBox:
    observed.check_compatible(land)
    mu = uniform_weights(len(observed)) if spec.mu is None else np.asarray(spec.mu, dtype=float)
    cases = [FireCase(weather, ign, observed, mu)] + list(extra_fires)
    return BlackBox(land, cases, spec.mode, norm=spec.norm, bounds=spec.bounds, dt=spec.dt)


def calibrate(land: Landscape, weather: WeatherStream, ign: IgnitionSpec, observed: ScarSeries,
              spec: CalibrationSpec | None = None,
              extra_fires: Sequence[FireCase] = ()) -> CalibrationResult:
    """Minimise the weighted scar error starting from ``spec.x0`` (all ones by default).

    The start point is the optimizer's first evaluation, so the returned
    error never exceeds the error at the start.
    """
    spec = spec or CalibrationSpec()
    x0 = _start_point(land, spec)
    objective = build_objective(land, weather, ign, observed, spec, extra_fires)
    return _solve(objective, x0, spec)


def _solve(objective: BlackBox, x0: AdjustmentSet, spec: CalibrationSpec) -> CalibrationResult:
    flat0 = x0.flatten()
    res = dfo.minimize(objective, flat0, spec.algorithm, _opts_for(spec, flat0.size))
    if res.neval != objective.neval:
        raise RuntimeError(f"evaluation count drift: optimizer {res.neval}, objective {objective.neval}")
    initial = res.trace[0][1]
    return CalibrationResult(objective.decode(res.x_best), initial, res.f_best, res, x_start=x0)


def realtime_calibrate(land: Landscape, weather: WeatherStream, ign: IgnitionSpec,
                       scar_stream: ScarSeries, spec: CalibrationSpec | None = None
                       ) -> list[CalibrationResult]:
    """Refit after each new scar, warm-starting from the previous optimum.

    At step ``t`` the objective covers scars ``1..t`` with weights ``1/t``.
    ``initial_error`` is that objective at the previous optimum;
    ``forecast_error`` is the norm between the previous optimum's simulated
    scar at ``t`` and the observed one.
    """
    spec = spec or CalibrationSpec()
    if len(scar_stream) == 0:
        raise LandscapeError("empty scar stream")
    ts = scar_stream.timestamps
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise LandscapeError(f"scar timestamps out of order: {ts}")
    scar_stream.check_compatible(land)

    x_prev = _start_point(land, spec)
    results = []
    for t in range(1, len(scar_stream) + 1):
        observed = scar_stream.head(t)
        step_spec = CalibrationSpec(spec.mode, np.full(t, 1.0 / t), spec.algorithm, spec.opts,
                                    x_prev, spec.bounds, spec.norm, spec.dt)
        sim_prev = run(land, weather, ign, x_prev, ts[:t], spec.dt)
        forecast = grid_norm(sim_prev[t - 1], observed[t - 1], spec.norm)
        objective = build_objective(land, weather, ign, observed, step_spec)
        result = _solve(objective, x_prev, step_spec)
        result.forecast_error = forecast
        results.append(result)
        x_prev = result.x_star
    return results


@dataclass
class BenchRow:
    algorithm: str
    neval: int
    runtime_min: float
    min_value: float
    start_value: float
    termination: str


class BenchTable(list):
    COLUMNS = ("algorithm", "NEVAL", "RUNTIME", "MinValue", "StartValue", "termination")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self:
            w.writerow([r.algorithm, r.neval, f"{r.runtime_min:.4f}", repr(r.min_value),
                        repr(r.start_value), r.termination])
        return buf.getvalue()


def run_benchmark(problem: Problem, algorithms: Sequence[str],
                  spec: CalibrationSpec | None = None) -> BenchTable:
    """Run each algorithm on the same instance with the same budget.

    Every algorithm gets a fresh objective (own evaluation counter). RUNTIME
    is wall-clock minutes.
    """
    spec = spec or CalibrationSpec()
    if not algorithms:
        raise ValueError("at least one algorithm is required")
    x0 = _start_point(problem.land, spec)
    table = BenchTable()
    for alg in algorithms:
        alg_spec = CalibrationSpec(spec.mode, spec.mu, alg, spec.opts, x0, spec.bounds,
                                   spec.norm, spec.dt)
        objective = build_objective(problem.land, problem.weather, problem.ignition,
                                    problem.observed, alg_spec, problem.extra_fires)
        t0 = time.perf_counter()
        res = _solve(objective, x0, alg_spec)
        minutes = (time.perf_counter() - t0) / 60.0
        table.append(BenchRow(alg, res.opt.neval, minutes, res.final_error, res.initial_error,
                              res.opt.termination))
    return table
