import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rosfit.ellipse import FactorTuple
from rosfit.fixtures import barrier_island, circle_5x5, homogeneous_20x20, steady_weather
from rosfit.landscape import (FuelParams, IgnitionSpec, Landscape, LandscapeError, WeatherRecord,
                              WeatherStream)
from rosfit.simulator import (FMS, GLOBAL, AdjustmentSet, BlackBox, FireCase, make_objective, run,
                              simulate, wind_scaled_ros)
from rosfit.metrics import uniform_weights

from conftest import small_landscape


def test_circle_hand_simulation():
    c = circle_5x5()
    s = run(c.landscape, c.weather, c.ignition, None, [1, 2, 3])
    cross = np.zeros((5, 5), dtype=np.uint8)
    cross[2, 1:4] = cross[1:4, 2] = 1
    assert np.array_equal(s[0], cross)
    # 200 m of progress passes the 141.4 m diagonal at minute 2, and the
    # orthogonal neighbours' own cross lands at distance 2.
    block = np.zeros((5, 5), dtype=np.uint8)
    block[1:4, 1:4] = 1
    block[2, [0, 4]] = block[[0, 4], 2] = 1
    assert np.array_equal(s[1], block)
    assert s[2].sum() == 21


def test_barrier_island():
    c = barrier_island()
    assert (c.expected.burned_area() == 1).all()
    assert all(g[3, 2] == 1 for g in c.expected.grids)


def test_identity_bit_exact(three_fuel):
    land, weather, ign = three_fuel
    for mode in (GLOBAL, FMS):
        x = AdjustmentSet.identity(mode, land.fuels_present())
        assert run(land, weather, ign, x, [30, 60, 120, 180]) == run(land, weather, ign, None,
                                                                    [30, 60, 120, 180])


@st.composite
def instances(draw):
    codes = draw(arrays(np.int64, (8, 10), elements=st.integers(0, 3)))
    r, c = draw(st.integers(0, 7)), draw(st.integers(0, 9))
    codes[r, c] = 1
    land = small_landscape(codes, cell_size=draw(st.sampled_from([30.0, 60.0, 100.0])))
    recs = tuple(WeatherRecord(draw(st.floats(0, 30)), draw(st.floats(0, 359.9)), 30.0)
                 for _ in range(4))
    x = AdjustmentSet(GLOBAL, global_factors=FactorTuple(
        draw(st.floats(1.0, 3)), draw(st.floats(0.2, 1.0)), draw(st.floats(1.0, 3)),
        draw(st.floats(0, 2))))
    return land, WeatherStream(recs, 10.0), IgnitionSpec(r, c, draw(st.sampled_from([0, 5]))), x


@settings(max_examples=40)
@given(instances())
def test_monotone_and_nonfuel_barrier(inst):
    land, weather, ign, x = inst
    s = run(land, weather, ign, x, [10, 20, 40, 80, 120])
    g = s.grids.astype(int)
    assert (np.diff(g, axis=0) >= 0).all()
    assert (np.diff(s.burned_area()) >= 0).all()
    assert not g[:, land.fuel_codes == 0].any()


@settings(max_examples=40)
@given(instances())
def test_determinism(inst):
    land, weather, ign, x = inst
    assert run(land, weather, ign, x, [60, 120]) == run(land, weather, ign, x, [60, 120])


@settings(max_examples=25)
@given(instances())
def test_locality(inst):
    land, weather, ign, x = inst
    times = list(range(1, 121))
    g = run(land, weather, ign, x, times).grids.astype(bool)
    padded = np.pad(g, ((0, 0), (1, 1), (1, 1)))
    for t in range(1, len(times)):
        new = g[t] & ~g[t - 1]
        new[ign.row, ign.col] = False
        if not new.any():
            continue
        prev = padded[t - 1]
        near = np.zeros_like(g[t])
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr or dc:
                    near |= prev[1 + dr:1 + dr + g.shape[1], 1 + dc:1 + dc + g.shape[2]]
        assert not (new & ~near).any()


@settings(max_examples=30)
@given(instances())
def test_fms_global_equivalence(inst):
    land, weather, ign, x = inst
    v = x.global_factors
    fms = AdjustmentSet.uniform(v, FMS, land.fuels_present())
    assert run(land, weather, ign, fms, [60, 120]) == run(land, weather, ign, x, [60, 120])


@settings(max_examples=30)
@given(st.floats(1.0, 4.0), st.floats(0.0, 2.0), st.floats(0.0, 30.0), st.floats(0.0, 359.0))
def test_uniform_scaling_contains_baseline(k, x4, wind, heading):
    land = Landscape(np.ones((15, 15), dtype=np.int64), {1: FuelParams(4.0, 1.0, 1.8)})
    weather = steady_weather(wind, heading, hours=3)
    ign = IgnitionSpec(7, 7)
    base = run(land, weather, ign, AdjustmentSet.uniform((1, 1, 1, x4)), [60, 120, 180])
    grown = run(land, weather, ign, AdjustmentSet.uniform((k, k, k, x4)), [60, 120, 180])
    assert (grown.grids >= base.grids).all()


def test_wind_heading_direction():
    land = Landscape(np.ones((21, 21), dtype=np.int64), {1: FuelParams(10.0, 1.0, 3.0)})
    s = simulate(land, steady_weather(20.0, 0.0, hours=1), IgnitionSpec(10, 10), horizon=60)
    g = s[-1]
    assert g[10, 11:].sum() > g[10, :10].sum()  # head runs East
    s = simulate(land, steady_weather(20.0, 90.0, hours=1), IgnitionSpec(10, 10), horizon=60)
    g = s[-1]
    assert g[:10, 10].sum() > g[11:, 10].sum()  # North is up


def test_provider_scaling():
    fuel = FuelParams(10.0, 2.0, 2.0)
    h, f, b = wind_scaled_ros(fuel, 20.0, 10.0)
    assert (h, b) == (20.0, 2.0) and f == pytest.approx((20 + 2) / (2 * 4.0))
    h, f, b = wind_scaled_ros(fuel, 2.0, 10.0)
    assert f == pytest.approx((2.0 + 2.0) / 2)  # lb floored at 1


def test_delayed_ignition():
    c = circle_5x5()
    s = run(c.landscape, c.weather, IgnitionSpec(2, 2, 2.0), None, [1, 2, 3])
    assert s.burned_area().tolist() == [0, 1, 5]


def test_run_errors():
    c = homogeneous_20x20()
    with pytest.raises(LandscapeError, match="exceeds weather coverage"):
        simulate(c.landscape, c.weather, c.ignition, horizon=480)
    codes = np.ones((4, 4), dtype=np.int64)
    codes[0, 0] = 0
    land = Landscape(codes, {1: FuelParams(5, 1, 2)})
    with pytest.raises(LandscapeError, match="non-fuel"):
        simulate(land, c.weather, IgnitionSpec(0, 0))
    with pytest.raises(ValueError, match="multiple"):
        simulate(c.landscape, c.weather, c.ignition, horizon=90, report_every=60)
    with pytest.raises(ValueError):
        simulate(c.landscape, c.weather, c.ignition, AdjustmentSet(FMS, per_fuel={2: (1, 1, 1, 1)}))


def test_adjustment_set_codec():
    x = AdjustmentSet(FMS, per_fuel={3: (1, 2, 3, 4), 1: (5, 6, 7, 8)})
    assert x.flatten().tolist() == [5, 6, 7, 8, 1, 2, 3, 4]
    assert AdjustmentSet.decode(x.flatten(), FMS, [3, 1]) == x
    assert AdjustmentSet.from_dict(x.to_dict()) == x
    with pytest.raises(ValueError, match="needs 8 values"):
        AdjustmentSet.decode(np.ones(5), FMS, [1, 3])
    with pytest.raises(ValueError):
        AdjustmentSet("both")


@given(st.lists(st.floats(0, 10), min_size=4, max_size=4),
       st.lists(st.integers(1, 50), min_size=1, max_size=6, unique=True),
       st.data())
def test_flatten_decode_round_trip(g, fuels, data):
    x = AdjustmentSet.decode(g, GLOBAL)
    assert AdjustmentSet.decode(x.flatten(), GLOBAL) == x
    vec = data.draw(st.lists(st.floats(0, 10), min_size=4 * len(fuels), max_size=4 * len(fuels)))
    y = AdjustmentSet.decode(vec, FMS, fuels)
    assert AdjustmentSet.decode(y.flatten(), FMS, fuels) == y
    assert list(y.per_fuel) == sorted(fuels)


def test_objective_contract(three_fuel):
    land, weather, ign = three_fuel
    obs = run(land, weather, ign, None, [60, 120, 180])
    f = make_objective(land, weather, ign, obs, uniform_weights(3))
    assert f.arity == 4 and f(np.ones(4)) == 0.0
    g = make_objective(land, weather, ign, obs, uniform_weights(3), FMS)
    assert g.arity == 12 and g(np.ones(12)) == 0.0
    with pytest.raises(ValueError, match="takes 4 values"):
        f(np.ones(5))
    assert f(np.array([1.0, -0.1, 1.0, 1.0])) == math.inf
    assert f(np.array([1.0, 50.0, 1.0, 1.0])) == math.inf  # imaginary eccentricity
    # the arity error is raised before counting
    assert f.neval == 3 and f.n_infeasible == 2
    assert len(f.history) == 3


def test_objective_bounds(three_fuel):
    land, weather, ign = three_fuel
    obs = run(land, weather, ign, None, [60])
    f = make_objective(land, weather, ign, obs, [1.0], bounds=(0.5, 2.0))
    assert f(np.full(4, 2.5)) == math.inf and math.isfinite(f(np.full(4, 1.5)))


def test_objective_mu_length(three_fuel):
    land, weather, ign = three_fuel
    obs = run(land, weather, ign, None, [60, 120])
    with pytest.raises(ValueError, match="weight vector"):
        make_objective(land, weather, ign, obs, [1.0])


def test_counter_thread_safe(three_fuel):
    land, weather, ign = three_fuel
    obs = run(land, weather, ign, None, [30])
    f = BlackBox(land, [FireCase(weather, ign, obs, np.ones(1))], keep_history=False)

    def hammer():
        for _ in range(25):
            f(np.ones(4))

    threads = [threading.Thread(target=hammer) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert f.neval == 200
