"""Deterministic synthetic instances standing in for observed fires.

Targets are produced by the simulator itself under hidden factors, so the
calibration optimum over a fixture is exactly 0 at those factors.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rosfit.ellipse import FactorTuple
from rosfit.landscape import (FuelParams, IgnitionSpec, Landscape, ScarSeries, WeatherRecord,
                              WeatherStream, load_ignition, load_landscape, load_scars,
                              load_weather, write_landscape, write_scars, write_weather)
from rosfit.simulator import FMS, GLOBAL, AdjustmentSet, simulate

HIDDEN_GLOBAL = FactorTuple(1.4, 1.1, 1.8, 1.15)

# Per-fuel hidden tuples; magnitudes stay inside the 0.26-2.6 band seen in
# fitted factors for real fuels.
HIDDEN_FMS = {
    1: FactorTuple(1.50, 0.80, 1.00, 1.40),
    2: FactorTuple(1.30, 1.05, 1.05, 1.20),
    3: FactorTuple(1.25, 1.30, 1.00, 1.50),
    4: FactorTuple(1.00, 1.00, 1.00, 1.00),
    5: FactorTuple(0.90, 1.00, 1.10, 1.00),
    6: FactorTuple(0.80, 0.90, 1.00, 1.10),
    7: FactorTuple(1.20, 1.05, 0.95, 1.15),
    8: FactorTuple(1.45, 1.40, 1.00, 1.30),
}


@dataclass
class FixtureCase:
    name: str
    landscape: Landscape
    weather: WeatherStream
    ignition: IgnitionSpec
    hidden_x: AdjustmentSet
    horizon: float = 420.0
    report_every: float = 60.0
    expected: ScarSeries | None = field(default=None, repr=False)

    def regenerate(self) -> ScarSeries:
        return generate_target(self.landscape, self.weather, self.ignition, self.hidden_x,
                               self.horizon, self.report_every)

    def __post_init__(self):
        if self.expected is None:
            self.expected = self.regenerate()


def generate_target(land: Landscape, weather: WeatherStream, ign: IgnitionSpec,
                    hidden_x: AdjustmentSet, horizon: float = 420.0,
                    report_every: float = 60.0) -> ScarSeries:
    return simulate(land, weather, ign, hidden_x, horizon, report_every)


def steady_weather(wind_speed=10.0, heading=45.0, hours=7, reference_wind=10.0) -> WeatherStream:
    return WeatherStream(tuple(WeatherRecord(wind_speed, heading, 60.0) for _ in range(hours)),
                         reference_wind)


def circle_5x5() -> FixtureCase:
    """Circular spread at 100 m/min on 100 m cells, ignition in the middle.

    Wind equals the reference wind, so the fuel keeps LB = 1 and spreads
    equally in every direction.
    """
    land = Landscape(np.ones((5, 5), dtype=np.int64), {1: FuelParams(100.0, 100.0, 1.0, "circle")})
    return FixtureCase("circle_5x5", land, steady_weather(10.0, 0.0), IgnitionSpec(2, 2),
                       AdjustmentSet.identity())


def homogeneous_20x20() -> FixtureCase:
    land = Landscape(np.ones((20, 20), dtype=np.int64),
                     {1: FuelParams(2.5, 0.5, 1.1, "grass")})
    return FixtureCase("homogeneous_20x20", land, steady_weather(10.0, 45.0),
                       IgnitionSpec(12, 7), AdjustmentSet(GLOBAL, global_factors=HIDDEN_GLOBAL))


def striped_8fuel() -> FixtureCase:
    """24x24 landscape with vertical stripes of eight fuels and a firebreak row."""
    table = {
        1: FuelParams(7.5, 1.5, 2.0, "C-1"),
        2: FuelParams(6.25, 1.25, 1.8, "C-2"),
        3: FuelParams(5.5, 1.25, 1.6, "C-3"),
        4: FuelParams(5.0, 1.0, 2.2, "C-4"),
        5: FuelParams(3.75, 0.75, 1.5, "C-5"),
        6: FuelParams(3.0, 1.0, 1.3, "D-1"),
        7: FuelParams(8.75, 2.0, 2.5, "O-1a"),
        8: FuelParams(5.0, 1.25, 1.7, "M-1"),
    }
    cols = np.arange(24)
    codes = np.tile(1 + (cols // 3) % 8, (24, 1)).astype(np.int64)
    codes[4, 2:9] = 0
    land = Landscape(codes, table)
    return FixtureCase("striped_8fuel", land, steady_weather(12.0, 30.0), IgnitionSpec(14, 11),
                       AdjustmentSet(FMS, per_fuel=HIDDEN_FMS))


def barrier_island() -> FixtureCase:
    """All non-fuel except the ignition cell."""
    codes = np.zeros((6, 6), dtype=np.int64)
    codes[3, 2] = 1
    land = Landscape(codes, {1: FuelParams(50.0, 10.0, 2.0, "island")})
    return FixtureCase("barrier_island", land, steady_weather(), IgnitionSpec(3, 2),
                       AdjustmentSet.identity())


ALL_CASES = {
    "circle_5x5": circle_5x5,
    "homogeneous_20x20": homogeneous_20x20,
    "striped_8fuel": striped_8fuel,
    "barrier_island": barrier_island,
}


def write_fixture(case: FixtureCase, directory) -> Path:
    """Write a case as loadable files: fuels.asc, fuels.csv, weather.csv,
    ignition.csv, hidden.json, scars/."""
    d = Path(directory) / case.name
    d.mkdir(parents=True, exist_ok=True)
    write_landscape(case.landscape, d / "fuels.asc", d / "fuels.csv")
    write_weather(case.weather, d / "weather.csv")
    ig = case.ignition
    (d / "ignition.csv").write_text(f"row,col,start_time\n{ig.row},{ig.col},{ig.start_time!r}\n")
    meta = {"hidden_x": case.hidden_x.to_dict(), "horizon": case.horizon,
            "report_every": case.report_every, "reference_wind": case.weather.reference_wind,
            "timestamps": list(case.expected.timestamps)}
    (d / "hidden.json").write_text(json.dumps(meta, indent=2) + "\n")
    write_scars(case.expected, d / "scars", cell_size=case.landscape.cell_size)
    return d


def load_fixture(directory) -> FixtureCase:
    d = Path(directory)
    meta = json.loads((d / "hidden.json").read_text())
    land = load_landscape(d / "fuels.asc", d / "fuels.csv")
    weather = load_weather(d / "weather.csv", meta["reference_wind"])
    scars = load_scars(sorted((d / "scars").glob("*.asc")), meta["timestamps"])
    return FixtureCase(d.name, land, weather, load_ignition(d / "ignition.csv"),
                       AdjustmentSet.from_dict(meta["hidden_x"]), meta["horizon"],
                       meta["report_every"], expected=scars)
