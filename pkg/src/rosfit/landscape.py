"""Landscape, weather, ignition and scar-series I/O.

Rasters use the plain-text GIS grid layout::

    ncols        5
    nrows        5
    xllcorner    0
    yllcorner    0
    cellsize     100
    NODATA_value -9999
    1 1 1 1 1
    ...

The first body row is the northernmost row of the landscape. Fuel code 0
and NODATA both mean non-fuel.
"""
from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

NODATA = -9999
DEFAULT_CELL_SIZE = 100.0
DEFAULT_REFERENCE_WIND = 10.0

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "xllcenter", "yllcenter",
                "cellsize", "nodata_value")


class LandscapeError(ValueError):
    """Malformed or inconsistent landscape input."""


@dataclass(frozen=True)
class FuelParams:
    hros_ref: float
    bros_ref: float
    lb_ref: float
    name: str = ""

    def __post_init__(self):
        for v in (self.hros_ref, self.bros_ref, self.lb_ref):
            if not math.isfinite(v):
                raise LandscapeError(f"non-finite fuel parameter in {self!r}")
        if self.bros_ref < 0 or self.hros_ref < self.bros_ref:
            raise LandscapeError(
                f"fuel {self.name!r}: need hros_ref >= bros_ref >= 0, "
                f"got hros_ref={self.hros_ref}, bros_ref={self.bros_ref}")
        if self.lb_ref < 1:
            raise LandscapeError(
                f"fuel {self.name!r}: invalid length-to-breadth ratio lb_ref={self.lb_ref} < 1")


@dataclass(frozen=True, eq=False)
class Landscape:
    fuel_codes: np.ndarray
    fuel_table: dict[int, FuelParams]
    cell_size: float = DEFAULT_CELL_SIZE

    def __post_init__(self):
        codes = np.array(self.fuel_codes, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[0] < 1 or codes.shape[1] < 1:
            raise LandscapeError(f"fuel grid must be a non-empty 2-D array, got shape {codes.shape}")
        if not self.cell_size > 0:
            raise LandscapeError(f"cell_size must be positive, got {self.cell_size}")
        codes[codes == NODATA] = 0
        if (codes < 0).any():
            raise LandscapeError("negative fuel code in grid")
        unknown = sorted(set(np.unique(codes).tolist()) - {0} - set(self.fuel_table))
        if unknown:
            raise LandscapeError(f"unknown fuel code(s) {unknown}: no fuel table entry")
        codes.setflags(write=False)
        object.__setattr__(self, "fuel_codes", codes)

    @property
    def rows(self) -> int:
        return self.fuel_codes.shape[0]

    @property
    def cols(self) -> int:
        return self.fuel_codes.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.fuel_codes.shape

    @property
    def n_cells(self) -> int:
        return self.fuel_codes.size

    def fuels_present(self) -> list[int]:
        """Fuel IDs that occur in the grid, ascending."""
        codes = np.unique(self.fuel_codes)
        return [int(c) for c in codes if c != 0]

    def __eq__(self, other):
        if not isinstance(other, Landscape):
            return NotImplemented
        return (self.cell_size == other.cell_size
                and self.fuel_table == other.fuel_table
                and np.array_equal(self.fuel_codes, other.fuel_codes))


@dataclass(frozen=True)
class WeatherRecord:
    wind_speed: float
    wind_heading: float
    duration: float


@dataclass(frozen=True)
class WeatherStream:
    """Piecewise-constant wind.

    ``wind_heading`` is the direction the fire head points, in degrees
    counterclockwise from East.
    """
    records: tuple[WeatherRecord, ...]
    reference_wind: float = DEFAULT_REFERENCE_WIND

    def __post_init__(self):
        recs = tuple(r if isinstance(r, WeatherRecord) else WeatherRecord(*map(float, r))
                     for r in self.records)
        if not recs:
            raise LandscapeError("weather stream is empty")
        if not self.reference_wind > 0:
            raise LandscapeError(f"reference_wind must be positive, got {self.reference_wind}")
        for r in recs:
            if not (math.isfinite(r.wind_speed) and r.wind_speed >= 0):
                raise LandscapeError(f"negative or non-finite wind speed {r.wind_speed}")
            if not 0 <= r.wind_heading < 360:
                raise LandscapeError(f"wind heading {r.wind_heading} outside [0, 360)")
            if not r.duration > 0:
                raise LandscapeError(f"record duration must be positive, got {r.duration}")
        object.__setattr__(self, "records", recs)

    @property
    def total_duration(self) -> float:
        return float(sum(r.duration for r in self.records))

    def record_index_at(self, minutes: float) -> int:
        """Index of the record in effect at ``minutes`` (records are half-open)."""
        end = 0.0
        for i, r in enumerate(self.records):
            end += r.duration
            if minutes < end:
                return i
        raise LandscapeError(
            f"time {minutes} min exceeds weather coverage of {self.total_duration} min")


@dataclass(frozen=True)
class IgnitionSpec:
    row: int
    col: int
    start_time: float = 0.0

    def __post_init__(self):
        if self.start_time < 0:
            raise LandscapeError(f"ignition start_time must be >= 0, got {self.start_time}")

    def validate(self, land: Landscape) -> None:
        if not (0 <= self.row < land.rows and 0 <= self.col < land.cols):
            raise LandscapeError(
                f"ignition ({self.row}, {self.col}) outside {land.rows}x{land.cols} grid")
        if land.fuel_codes[self.row, self.col] == 0:
            raise LandscapeError(f"ignition ({self.row}, {self.col}) is on a non-fuel cell")


@dataclass(frozen=True, eq=False)
class ScarSeries:
    grids: np.ndarray
    timestamps: tuple[float, ...]

    def __post_init__(self):
        grids = np.asarray(self.grids)
        if grids.ndim != 3:
            raise LandscapeError(f"scar series must be a stack of 2-D grids, got shape {grids.shape}")
        if not np.isin(grids, (0, 1)).all():
            raise LandscapeError("non-binary scar value")
        ts = tuple(float(t) for t in self.timestamps)
        if len(ts) != grids.shape[0]:
            raise LandscapeError(f"{grids.shape[0]} grids but {len(ts)} timestamps")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise LandscapeError(f"timestamps must be strictly increasing: {ts}")
        grids = grids.astype(np.uint8)
        grids.setflags(write=False)
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return self.grids.shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self.grids[i]

    @property
    def shape(self) -> tuple[int, int]:
        return self.grids.shape[1:]

    def head(self, t: int) -> "ScarSeries":
        """The first ``t`` grids."""
        return ScarSeries(self.grids[:t], self.timestamps[:t])

    def burned_area(self) -> np.ndarray:
        return self.grids.reshape(len(self), -1).sum(axis=1)

    def check_compatible(self, land: Landscape) -> None:
        if self.shape != land.shape:
            raise LandscapeError(
                f"scar grid dimensions {self.shape} do not match landscape {land.shape}")

    def __eq__(self, other):
        if not isinstance(other, ScarSeries):
            return NotImplemented
        return self.timestamps == other.timestamps and np.array_equal(self.grids, other.grids)


# ---------------------------------------------------------------------------
# raster files

def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_ascii_grid(path) -> tuple[np.ndarray, dict]:
    """Parse an ASCII grid file into ``(int64 array, header)``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"raster file not found: {path}")
    header: dict[str, float] = {}
    body: list[list[str]] = []
    with path.open() as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            key = parts[0].lower()
            if not body and key in _HEADER_KEYS:
                if len(parts) != 2:
                    raise LandscapeError(f"{path}: malformed header line {line.strip()!r}")
                header[key] = float(parts[1])
            else:
                body.append(parts)
    for key in ("ncols", "nrows"):
        if key not in header:
            raise LandscapeError(f"{path}: missing '{key}' header")
    nrows, ncols = int(header["nrows"]), int(header["ncols"])
    if len(body) != nrows or any(len(r) != ncols for r in body):
        raise LandscapeError(
            f"{path}: dimension mismatch, header says {nrows}x{ncols} but body is "
            f"{len(body)}x{sorted({len(r) for r in body})}")
    try:
        vals = np.array([[float(v) for v in r] for r in body], dtype=np.float64).reshape(nrows, ncols)
    except ValueError as exc:
        raise LandscapeError(f"{path}: non-numeric raster value ({exc})") from None
    if not np.array_equal(vals, np.round(vals)):
        raise LandscapeError(f"{path}: raster values must be integers")
    header.setdefault("cellsize", DEFAULT_CELL_SIZE)
    header.setdefault("nodata_value", NODATA)
    return vals.astype(np.int64), header


def format_ascii_grid(grid: np.ndarray, cell_size: float = DEFAULT_CELL_SIZE,
                      nodata: int = NODATA) -> str:
    grid = np.asarray(grid)
    nrows, ncols = grid.shape
    lines = [f"ncols {ncols}", f"nrows {nrows}", "xllcorner 0", "yllcorner 0",
             f"cellsize {cell_size:g}", f"NODATA_value {nodata}"]
    lines += [" ".join(str(int(v)) for v in row) for row in grid]
    return "\n".join(lines) + "\n"


def write_ascii_grid(grid: np.ndarray, path, cell_size: float = DEFAULT_CELL_SIZE) -> None:
    _atomic_write_text(path, format_ascii_grid(grid, cell_size))


def load_fuel_table(path) -> dict[int, FuelParams]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"fuel table not found: {path}")
    table: dict[int, FuelParams] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "name", "hros_ref", "bros_ref", "lb_ref"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise LandscapeError(f"{path}: fuel table needs columns {sorted(required)}")
        for row in reader:
            fid = int(row["id"])
            if fid <= 0:
                raise LandscapeError(f"{path}: fuel id must be positive, got {fid}")
            if fid in table:
                raise LandscapeError(f"{path}: duplicate fuel id {fid}")
            table[fid] = FuelParams(float(row["hros_ref"]), float(row["bros_ref"]),
                                    float(row["lb_ref"]), row["name"])
    return table


def load_landscape(fuel_grid_path, fuel_table_path) -> Landscape:
    codes, header = read_ascii_grid(fuel_grid_path)
    nodata = int(header["nodata_value"])
    codes[codes == nodata] = 0
    return Landscape(codes, load_fuel_table(fuel_table_path), float(header["cellsize"]))


def write_landscape(land: Landscape, fuel_grid_path, fuel_table_path) -> None:
    write_ascii_grid(land.fuel_codes, fuel_grid_path, land.cell_size)
    rows = ["id,name,hros_ref,bros_ref,lb_ref"]
    for fid in sorted(land.fuel_table):
        p = land.fuel_table[fid]
        rows.append(f"{fid},{p.name},{p.hros_ref!r},{p.bros_ref!r},{p.lb_ref!r}")
    _atomic_write_text(fuel_table_path, "\n".join(rows) + "\n")


def load_weather(path, reference_wind: float = DEFAULT_REFERENCE_WIND) -> WeatherStream:
    """Read a ``wind_speed,wind_heading,duration`` CSV (speeds km/h, minutes)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"weather file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"wind_speed", "wind_heading", "duration"}
        if reader.fieldnames is None:
            raise LandscapeError(f"{path}: weather file is empty")
        if not required <= set(reader.fieldnames):
            raise LandscapeError(f"{path}: weather file needs columns {sorted(required)}")
        recs = [WeatherRecord(float(r["wind_speed"]), float(r["wind_heading"]), float(r["duration"]))
                for r in reader]
    return WeatherStream(tuple(recs), reference_wind)


def write_weather(weather: WeatherStream, path) -> None:
    rows = ["wind_speed,wind_heading,duration"]
    rows += [f"{r.wind_speed!r},{r.wind_heading!r},{r.duration!r}" for r in weather.records]
    _atomic_write_text(path, "\n".join(rows) + "\n")


def load_ignition(path) -> IgnitionSpec:
    """One-line CSV ``row,col[,start_time]``; an optional header line is skipped."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"ignition file not found: {path}")
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    if lines and lines[0].lower().startswith("row"):
        lines = lines[1:]
    if len(lines) != 1:
        raise LandscapeError(f"{path}: expected exactly one ignition line, got {len(lines)}")
    return parse_ignition(lines[0])


def parse_ignition(text: str) -> IgnitionSpec:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (2, 3):
        raise LandscapeError(f"ignition must be 'row,col[,start_time]', got {text!r}")
    try:
        row, col = int(parts[0]), int(parts[1])
        start = float(parts[2]) if len(parts) == 3 else 0.0
    except ValueError:
        raise LandscapeError(f"ignition must be 'row,col[,start_time]', got {text!r}") from None
    return IgnitionSpec(row, col, start)


def write_burn_grid(grid: np.ndarray, path, cell_size: float = DEFAULT_CELL_SIZE) -> None:
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise LandscapeError(f"burn grid must be 2-D, got shape {grid.shape}")
    if not np.isin(grid, (0, 1)).all():
        raise LandscapeError("non-binary scar value")
    write_ascii_grid(grid, path, cell_size)


def load_burn_grid(path) -> np.ndarray:
    grid, _ = read_ascii_grid(path)
    if not np.isin(grid, (0, 1)).all():
        raise LandscapeError(f"{path}: non-binary scar value")
    return grid.astype(np.uint8)


def load_scars(paths: Sequence, timestamps: Iterable[float]) -> ScarSeries:
    grids = [load_burn_grid(p) for p in paths]
    if not grids:
        raise LandscapeError("no scar files given")
    shapes = {g.shape for g in grids}
    if len(shapes) != 1:
        raise LandscapeError(f"dimension mismatch across scar series: {sorted(shapes)}")
    return ScarSeries(np.stack(grids), tuple(timestamps))


def write_scars(series: ScarSeries, directory, prefix: str = "scar",
                cell_size: float = DEFAULT_CELL_SIZE) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for grid, t in zip(series.grids, series.timestamps):
        p = directory / f"{prefix}_{int(round(t)):05d}.asc"
        write_burn_grid(grid, p, cell_size)
        paths.append(p)
    return paths


def hourly_timestamps(horizon: float, report_every: float = 60.0) -> tuple[float, ...]:
    n = int(round(horizon / report_every))
    return tuple(report_every * (i + 1) for i in range(n))
