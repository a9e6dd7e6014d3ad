import logging

import numpy as np
import pytest

from gridid import GridTopology, ieee14, ieee14_day_config, simulate_day


@pytest.fixture(autouse=True)
def _quiet(caplog):
    caplog.set_level(logging.WARNING)


@pytest.fixture(scope="session")
def grid14():
    return ieee14()


@pytest.fixture(scope="session")
def day14(grid14):
    return simulate_day(ieee14_day_config(seed=0), grid14)


@pytest.fixture
def triangle():
    return GridTopology(3, [(0, 1, 1.0, 100.0), (1, 2, 1.0, 100.0), (0, 2, 1.0, 100.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_connected(rng, n_buses, extra):
    """Random spanning tree plus ``extra`` chords, no parallel lines."""
    order = rng.permutation(n_buses)
    lines, pairs = [], set()
    for k in range(1, n_buses):
        a, b = int(order[k]), int(order[rng.integers(k)])
        pairs.add(frozenset((a, b)))
        lines.append((a, b, float(rng.uniform(0.05, 2.0)), 100.0))
    for _ in range(extra):
        a, b = (int(v) for v in rng.choice(n_buses, 2, replace=False))
        if frozenset((a, b)) in pairs:
            continue
        pairs.add(frozenset((a, b)))
        lines.append((a, b, float(rng.uniform(0.05, 2.0)), 100.0))
    return GridTopology(n_buses, lines, reference_bus=int(rng.integers(n_buses)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
