from __future__ import annotations

import time

import pytest
from hypothesis import HealthCheck, settings

from robopainter import default_params
from robopainter.cli import bundled_room
from robopainter.mission import load_room

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def empty_room():
    return load_room(bundled_room("empty4x4"))


@pytest.fixture(scope="session")
def door_room():
    return load_room(bundled_room("door_window"))


@pytest.fixture(scope="session")
def nominal_mission():
    """The nominal dynamic mission (seed 0), shared by the rate and golden-trace checks.

    Returns the result and its wall-clock runtime."""
    from golden_trace import run_nominal

    t0 = time.perf_counter()
    result = run_nominal()
    return result, time.perf_counter() - t0
