import os
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from h3plateau.pipeline import RunConfig, solve

settings.register_profile(
    "ci", max_examples=60, deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

STRETCH = os.environ.get("H3P_STRETCH") == "1"

_SOLUTIONS: dict = {}
SOLVE_SECONDS: dict = {}


def solved(n: int):
    """Default-config disk for ``n``, shared across the whole session (wall time kept in ``SOLVE_SECONDS``)."""
    if n not in _SOLUTIONS:
        t0 = time.perf_counter()
        _SOLUTIONS[n] = solve(n, RunConfig())
        SOLVE_SECONDS[n] = time.perf_counter() - t0
    return _SOLUTIONS[n]


@pytest.fixture(scope="session")
def disk1():
    return solved(1)


@pytest.fixture(scope="session")
def disk2():
    return solved(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_collection_modifyitems(config, items):
    if STRETCH:
        return
    skip = pytest.mark.skip(reason="set H3P_STRETCH=1 to run the n=3 stretch target")
    for item in items:
        if "stretch" in item.keywords:
            item.add_marker(skip)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request, capsys):
    """Record one acceptance line: ``criterion(number, title, ok, detail, elapsed, budget)``."""

    def record(number, title, ok, detail, elapsed, budget):
        passed = bool(ok) and elapsed <= budget
        line = f"criterion {number} [{title}]: {'PASS' if passed else 'FAIL'} - {detail} ({elapsed:.1f}s, budget {budget:.0f}s)"
        request.config.stash.setdefault(ACCEPTANCE, {})[number] = line
        with capsys.disabled():
            print("\n" + line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines, key=lambda k: (len(str(k)), str(k))):
        terminalreporter.write_line(lines[key])
