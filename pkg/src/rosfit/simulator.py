"""Time-stepped fire growth on a raster and the calibration black box."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np

from rosfit import _kernels
from rosfit.ellipse import (IDENTITY, EllipseError, FactorTuple, RosTriple, apply_factors,
                            derive_flank_ros, ellipse_rates, spread_rate)
from rosfit.landscape import (FuelParams, IgnitionSpec, Landscape, LandscapeError, ScarSeries,
                              WeatherStream, hourly_timestamps)
from rosfit.metrics import weighted_error

GLOBAL = "global"
FMS = "fms"
MODES = (GLOBAL, FMS)


class RosProvider(Protocol):
    def __call__(self, fuel: FuelParams, wind_speed: float, reference_wind: float) -> RosTriple: ...


def wind_scaled_ros(fuel: FuelParams, wind_speed: float, reference_wind: float) -> RosTriple:
    """Default provider: head ROS and length-to-breadth scale linearly with wind."""
    w = wind_speed / reference_wind
    hros = fuel.hros_ref * w
    bros = fuel.bros_ref
    lb = max(1.0, fuel.lb_ref * w)
    return RosTriple(hros, derive_flank_ros(hros, bros, lb), bros)


@dataclass(frozen=True)
class AdjustmentSet:
    """Decision vector: one factor tuple, or one per fuel ID."""
    mode: str = GLOBAL
    global_factors: FactorTuple = IDENTITY
    per_fuel: Mapping[int, FactorTuple] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown adjustment mode {self.mode!r}; expected one of {MODES}")
        object.__setattr__(self, "global_factors", FactorTuple(*self.global_factors))
        object.__setattr__(self, "per_fuel",
                           {int(k): FactorTuple(*v) for k, v in sorted(self.per_fuel.items())})

    @classmethod
    def identity(cls, mode: str = GLOBAL, fuels: Sequence[int] = ()) -> "AdjustmentSet":
        if mode == FMS:
            return cls(FMS, per_fuel={f: IDENTITY for f in fuels})
        return cls(GLOBAL)

    @classmethod
    def uniform(cls, factors, mode: str = GLOBAL, fuels: Sequence[int] = ()) -> "AdjustmentSet":
        factors = FactorTuple(*factors)
        if mode == FMS:
            return cls(FMS, per_fuel={f: factors for f in fuels})
        return cls(GLOBAL, global_factors=factors)

    def factors_for(self, fuel_id: int) -> FactorTuple:
        if self.mode == GLOBAL:
            return self.global_factors
        try:
            return self.per_fuel[fuel_id]
        except KeyError:
            raise ValueError(f"FMS adjustment set has no factors for fuel {fuel_id}") from None

    def check_covers(self, land: Landscape) -> None:
        if self.mode == FMS:
            missing = sorted(set(land.fuels_present()) - set(self.per_fuel))
            if missing:
                raise ValueError(f"FMS adjustment set missing fuel(s) {missing}")

    def flatten(self) -> np.ndarray:
        """Flat vector: x1..x4, per fuel in ascending fuel-ID order for FMS."""
        if self.mode == GLOBAL:
            return np.array(self.global_factors, dtype=np.float64)
        return np.array([v for f in sorted(self.per_fuel) for v in self.per_fuel[f]],
                        dtype=np.float64)

    @classmethod
    def decode(cls, vec, mode: str = GLOBAL, fuels: Sequence[int] = ()) -> "AdjustmentSet":
        vec = np.asarray(vec, dtype=np.float64).ravel()
        fuels = sorted(fuels)
        n = 4 if mode == GLOBAL else 4 * len(fuels)
        if vec.size != n:
            raise ValueError(f"{mode} decision vector needs {n} values, got {vec.size}")
        if mode == GLOBAL:
            return cls(GLOBAL, global_factors=FactorTuple(*map(float, vec)))
        return cls(FMS, per_fuel={f: FactorTuple(*map(float, vec[4 * i:4 * i + 4]))
                                  for i, f in enumerate(fuels)})

    def to_dict(self) -> dict:
        if self.mode == GLOBAL:
            return {"mode": GLOBAL, "factors": list(self.global_factors)}
        return {"mode": FMS, "per_fuel": {str(f): list(v) for f, v in self.per_fuel.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "AdjustmentSet":
        if d["mode"] == GLOBAL:
            return cls(GLOBAL, global_factors=FactorTuple(*d["factors"]))
        return cls(FMS, per_fuel={int(f): FactorTuple(*v) for f, v in d["per_fuel"].items()})


def axis_distances(cell_size: float) -> np.ndarray:
    diag = cell_size * math.sqrt(2.0)
    return np.array([cell_size, diag] * 4, dtype=np.float64)


def axis_rate_table(land: Landscape, weather: WeatherStream, x: AdjustmentSet | None,
                    provider: RosProvider = wind_scaled_ros) -> tuple[np.ndarray, list[int]]:
    """Directional spread rates, shape (records, fuels, 8), and the fuel order.

    ``x=None`` skips the adjustment step entirely (plain ellipse).
    """
    fuels = land.fuels_present()
    table = np.zeros((len(weather.records), len(fuels), 8), dtype=np.float64)
    for r, rec in enumerate(weather.records):
        for fi, fid in enumerate(fuels):
            ros = provider(land.fuel_table[fid], rec.wind_speed, weather.reference_wind)
            er = ellipse_rates(ros) if x is None else apply_factors(ros, x.factors_for(fid))
            for k in range(8):
                table[r, fi, k] = spread_rate(er, _kernels.AXIS_BEARING[k] - rec.wind_heading)
    return table, fuels


def _step_count(minutes: float, dt: float, what: str) -> int:
    s = minutes / dt
    k = int(round(s))
    if not math.isclose(s, k, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"{what} ({minutes} min) is not a multiple of the time step {dt} min")
    return k


def run(land: Landscape, weather: WeatherStream, ign: IgnitionSpec, x: AdjustmentSet | None,
        report_times: Sequence[float], dt: float = 1.0,
        provider: RosProvider = wind_scaled_ros) -> ScarSeries:
    """Simulate and snapshot the burned set at each of ``report_times`` (minutes)."""
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    ign.validate(land)
    if x is not None:
        x.check_covers(land)
    report_times = tuple(float(t) for t in report_times)
    if not report_times:
        raise ValueError("no report times requested")
    horizon = report_times[-1]
    if horizon > weather.total_duration + 1e-9:
        raise LandscapeError(
            f"horizon {horizon} min exceeds weather coverage of {weather.total_duration} min")
    nsteps = _step_count(horizon, dt, "horizon")
    report_steps = np.array([_step_count(t, dt, "report time") for t in report_times],
                            dtype=np.int64)
    ign_step = _step_count(ign.start_time, dt, "ignition time")

    rates, fuels = axis_rate_table(land, weather, x, provider)
    lookup = {f: i for i, f in enumerate(fuels)}
    fuel_idx = np.full(land.shape, -1, dtype=np.int64)
    for f, i in lookup.items():
        fuel_idx[land.fuel_codes == f] = i
    step_record = np.array([weather.record_index_at(s * dt) for s in range(nsteps)],
                           dtype=np.int64)
    grids = _kernels.burn(fuel_idx, rates, step_record, axis_distances(land.cell_size), float(dt),
                          ign.row, ign.col, ign_step, report_steps)
    return ScarSeries(grids, report_times)


def simulate(land: Landscape, weather: WeatherStream, ign: IgnitionSpec,
             x: AdjustmentSet | None = None, horizon: float = 420.0, report_every: float = 60.0,
             dt: float = 1.0, provider: RosProvider = wind_scaled_ros) -> ScarSeries:
    """Burn-grid series at ``report_every, 2*report_every, ..., horizon`` minutes."""
    if not report_every > 0:
        raise ValueError(f"report interval must be positive, got {report_every}")
    n = _step_count(horizon, report_every, "horizon")
    if n < 1:
        raise ValueError(f"horizon {horizon} shorter than one report interval")
    return run(land, weather, ign, x, hourly_timestamps(horizon, report_every), dt, provider)


@dataclass
class FireCase:
    """One observed fire: its weather, ignition and scar series, plus its weight."""
    weather: WeatherStream
    ignition: IgnitionSpec
    observed: ScarSeries
    mu: np.ndarray
    weight: float = 1.0


class BlackBox:
    """Flat-vector objective: decode, simulate, weighted scar error.

    Out-of-domain vectors (negative or outside ``bounds``, or factors that
    make the ellipse imaginary) score ``+inf`` and are counted as
    infeasible evaluations.
    """

    def __init__(self, land: Landscape, cases: Sequence[FireCase], mode: str = GLOBAL,
                 norm: str = "frobenius", bounds: tuple[float, float] | None = None,
                 dt: float = 1.0, provider: RosProvider = wind_scaled_ros,
                 keep_history: bool = True):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if not cases:
            raise ValueError("at least one fire case is required")
        self.land = land
        self.cases = list(cases)
        self.mode = mode
        self.norm = norm
        self.bounds = bounds
        self.dt = dt
        self.provider = provider
        self.fuels = land.fuels_present()
        self.keep_history = keep_history
        self.history: list[tuple[np.ndarray, float]] = []
        self.n_infeasible = 0
        self._neval = 0
        self._lock = threading.Lock()
        for c in self.cases:
            c.observed.check_compatible(land)
            c.ignition.validate(land)
            if len(c.mu) != len(c.observed):
                raise ValueError(
                    f"weight vector length {len(c.mu)} != {len(c.observed)} observed scars")

    @property
    def arity(self) -> int:
        return 4 if self.mode == GLOBAL else 4 * len(self.fuels)

    @property
    def neval(self) -> int:
        return self._neval

    def decode(self, vec) -> AdjustmentSet:
        return AdjustmentSet.decode(vec, self.mode, self.fuels)

    def in_domain(self, vec: np.ndarray) -> bool:
        if not np.all(np.isfinite(vec)) or np.any(vec < 0):
            return False
        if self.bounds is not None:
            lo, hi = self.bounds
            return bool(np.all(vec >= lo) and np.all(vec <= hi))
        return True

    def evaluate(self, x: AdjustmentSet) -> float:
        """Weighted error of ``x`` without touching the evaluation counter."""
        total = 0.0
        for c in self.cases:
            sim = run(self.land, c.weather, c.ignition, x, c.observed.timestamps, self.dt,
                      self.provider)
            total += c.weight * weighted_error(sim, c.observed, c.mu, self.norm)
        return total

    def __call__(self, vec) -> float:
        vec = np.array(vec, dtype=np.float64).ravel()
        if vec.size != self.arity:
            raise ValueError(f"{self.mode} objective takes {self.arity} values, got {vec.size}")
        with self._lock:
            self._neval += 1
        value = math.inf
        if self.in_domain(vec):
            try:
                value = self.evaluate(self.decode(vec))
            except EllipseError:
                value = math.inf
        if value == math.inf:
            with self._lock:
                self.n_infeasible += 1
        if self.keep_history:
            with self._lock:
                self.history.append((vec, value))
        return value


def make_objective(land: Landscape, weather: WeatherStream, ign: IgnitionSpec,
                   observed: ScarSeries, mu, mode: str = GLOBAL, **kwargs) -> BlackBox:
    mu = np.asarray(mu, dtype=np.float64)
    return BlackBox(land, [FireCase(weather, ign, observed, mu)], mode, **kwargs)

