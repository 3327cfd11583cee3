"""Time the numba and pure-numpy burn kernels on the same inputs.

    python benchmarks/bench_kernels.py [--size 150] [--repeat 3]

Both backends are checked for identical output before timing. The numba
column is missing when numba is not installed.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from rosfit import _accel, _kernels
from rosfit.fixtures import ALL_CASES, steady_weather
from rosfit.landscape import FuelParams, IgnitionSpec, Landscape
from rosfit.simulator import axis_distances, axis_rate_table


def kernel_args(land, weather, ign, x, horizon=420, report_every=60):
    rates, fuels = axis_rate_table(land, weather, x)
    fuel_idx = np.full(land.shape, -1, dtype=np.int64)
    for i, f in enumerate(fuels):
        fuel_idx[land.fuel_codes == f] = i
    steps = np.array([weather.record_index_at(s) for s in range(horizon)], dtype=np.int64)
    report = np.arange(report_every, horizon + 1, report_every, dtype=np.int64)
    return (fuel_idx, rates, steps, axis_distances(land.cell_size), 1.0,
            ign.row, ign.col, int(ign.start_time), report)


def synthetic(size: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    codes = rng.integers(1, 4, (size, size))
    codes[rng.random((size, size)) < 0.05] = 0
    mid = size // 2
    codes[mid, mid] = 1
    table = {1: FuelParams(30.0, 5.0, 2.0), 2: FuelParams(18.0, 4.0, 1.6),
             3: FuelParams(45.0, 8.0, 2.5)}
    return Landscape(codes, table, 30.0), steady_weather(14.0, 60.0), IgnitionSpec(mid, mid)


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=150, help="side of the synthetic grid")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cases = [(name, kernel_args(c.landscape, c.weather, c.ignition, c.hidden_x))
             for name, c in ((n, f()) for n, f in ALL_CASES.items())]
    land, weather, ign = synthetic(args.size)
    cases.append((f"synthetic_{args.size}x{args.size}", kernel_args(land, weather, ign, None)))

    have = _accel.HAVE_NUMBA and not _accel.DISABLED
    if have:
        _kernels._burn_numba(*cases[0][1])  # compile outside the timings

    print(f"{'case':<24}{'cells':>8}{'burned':>8}{'numpy s':>11}{'numba s':>11}{'speedup':>9}")
    for name, kargs in cases:
        ref = _kernels._burn_numpy(*kargs)
        t_np = best_of(_kernels._burn_numpy, kargs, args.repeat)
        cells = kargs[0].size
        burned = int(ref[-1].sum())
        if have:
            assert np.array_equal(ref, _kernels._burn_numba(*kargs)), name
            t_nb = best_of(_kernels._burn_numba, kargs, args.repeat)
            print(f"{name:<24}{cells:>8}{burned:>8}{t_np:>11.4f}{t_nb:>11.4f}{t_np / t_nb:>8.1f}x")
        else:
            print(f"{name:<24}{cells:>8}{burned:>8}{t_np:>11.4f}{'-':>11}{'-':>9}")


if __name__ == "__main__":
    main()
