from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rosfit.landscape import FuelParams, IgnitionSpec, Landscape
from rosfit.fixtures import steady_weather

DATA = Path(__file__).parent / "data"

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Filled by test_acceptance; printed once at the end of the session.
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def data_dir():
    return DATA


def small_landscape(codes, table=None, cell_size=100.0):
    codes = np.asarray(codes)
    if table is None:
        table = {1: FuelParams(60.0, 10.0, 2.0, "a"), 2: FuelParams(30.0, 5.0, 1.5, "b"),
                 3: FuelParams(90.0, 20.0, 3.0, "c")}
        table = {k: v for k, v in table.items() if k in set(codes.ravel().tolist())}
    return Landscape(codes, table, cell_size)


@pytest.fixture
def three_fuel():
    codes = np.ones((12, 12), dtype=int)
    codes[:, 4:8] = 2
    codes[:, 8:] = 3
    codes[6, 0:3] = 0
    land = small_landscape(codes)
    return land, steady_weather(12.0, 20.0, hours=3), IgnitionSpec(5, 5)
