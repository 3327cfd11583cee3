import hashlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rosfit import _accel, _kernels
from rosfit.fixtures import ALL_CASES, steady_weather
from rosfit.landscape import FuelParams, IgnitionSpec, Landscape
from rosfit.simulator import AdjustmentSet, axis_distances, axis_rate_table, simulate


def kernel_inputs(land, weather, ign, x, report_steps):
    rates, fuels = axis_rate_table(land, weather, x)
    fuel_idx = np.full(land.shape, -1, dtype=np.int64)
    for i, f in enumerate(fuels):
        fuel_idx[land.fuel_codes == f] = i
    nsteps = int(report_steps[-1])
    step_record = np.array([weather.record_index_at(s) for s in range(nsteps)], dtype=np.int64)
    return (fuel_idx, rates, step_record, axis_distances(land.cell_size), 1.0,
            ign.row, ign.col, int(ign.start_time), np.asarray(report_steps, dtype=np.int64))


@pytest.mark.parametrize("name", sorted(ALL_CASES))
def test_backends_agree_on_fixtures(name):
    c = ALL_CASES[name]()
    args = kernel_inputs(c.landscape, c.weather, c.ignition, c.hidden_x,
                         [60, 120, 180, 240, 300, 360, 420])
    a = _kernels._burn_numba(*args)
    b = _kernels._burn_numpy(*args)
    assert a.dtype == b.dtype == np.uint8
    assert np.array_equal(a, b)


@settings(max_examples=40)
@given(arrays(np.int64, (9, 11), elements=st.integers(0, 2)),
       st.floats(0.0, 30.0), st.floats(0.0, 359.0), st.integers(0, 8), st.integers(0, 10),
       st.integers(0, 20))
def test_backends_agree_random(codes, wind, heading, r, c, start):
    codes[r, c] = 1
    land = Landscape(codes, {1: FuelParams(80.0, 15.0, 2.0), 2: FuelParams(25.0, 10.0, 1.2)}, 50.0)
    weather = steady_weather(wind, heading, hours=2)
    args = kernel_inputs(land, weather, IgnitionSpec(r, c, start), None, [20, 45, 90, 120])
    assert np.array_equal(_kernels._burn_numba(*args), _kernels._burn_numpy(*args))


def test_ignition_before_first_snapshot_only():
    land = Landscape(np.ones((5, 5), dtype=np.int64), {1: FuelParams(100.0, 100.0, 1.0)})
    args = list(kernel_inputs(land, steady_weather(10.0, 0.0, 1), IgnitionSpec(2, 2), None, [0, 1]))
    for burn in (_kernels._burn_numba, _kernels._burn_numpy):
        g = burn(*args)
        assert g[0].sum() == 1 and g[1].sum() == 5


_SNIPPET = """
import hashlib
from rosfit import _accel
from rosfit.fixtures import striped_8fuel
c = striped_8fuel()
print(_accel.USE_NUMBA, hashlib.sha256(c.regenerate().grids.tobytes()).hexdigest())
"""


def _run_with_flag(value):
    env = dict(os.environ)
    env.pop("ROSFIT_DISABLE_NUMBA", None)
    if value is not None:
        env["ROSFIT_DISABLE_NUMBA"] = value
    out = subprocess.run([sys.executable, "-c", _SNIPPET], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return out[0] == "True", out[1]


def test_env_flag_selects_numpy_path():
    used, digest_numpy = _run_with_flag("1")
    assert used is False
    used, digest_default = _run_with_flag(None)
    assert used is _accel.HAVE_NUMBA
    assert digest_numpy == digest_default


def test_in_process_backend_matches_simulate():
    c = ALL_CASES["homogeneous_20x20"]()
    digest = hashlib.sha256(simulate(c.landscape, c.weather, c.ignition,
                                     c.hidden_x).grids.tobytes()).hexdigest()
    assert digest == hashlib.sha256(c.expected.grids.tobytes()).hexdigest()


def test_axis_tables():
    assert list(_kernels.AXIS_BEARING) == [0, 45, 90, 135, 180, 225, 270, 315]
    # bearing 90 (North) moves up a row
    assert (_kernels.AXIS_DROW[2], _kernels.AXIS_DCOL[2]) == (-1, 0)
    assert (_kernels.AXIS_DROW[0], _kernels.AXIS_DCOL[0]) == (0, 1)
    np.testing.assert_allclose(axis_distances(100.0)[1], 100 * np.sqrt(2))


def test_adjustment_passthrough_to_kernel():
    c = ALL_CASES["homogeneous_20x20"]()
    a = simulate(c.landscape, c.weather, c.ignition, AdjustmentSet.identity())
    b = simulate(c.landscape, c.weather, c.ignition, None)
    assert a == b


def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    script = Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    mod = runpy.run_path(str(script))
    mod["main"](["--size", "20", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "synthetic_20x20" in out and "homogeneous_20x20" in out
