"""Shared fixtures.

The long runs and the oracle suites are session-scoped: the acceptance
criteria and several unit tests read from the same simulations instead of
re-integrating, which keeps the full suite within a desk-scale budget.
"""

from __future__ import annotations

import time
from dataclasses import replace

import pytest

from softboltz.distribution import maxwellian_on_grid
from softboltz.experiments import initial_field
from softboltz.oracles import SUITES
from softboltz.simulator import SimConfig, run_single

# the default production run: 48^2 grid, L = 6, gamma = -0.5, integrable
# angular law, 200 fixed Euler steps to t = 10, recording every 5 steps
DEFAULT_CONFIG = SimConfig(s_list=(3.5, 4.0), label="acceptance")


@pytest.fixture(scope="session")
def default_tab():
    return DEFAULT_CONFIG.make_tableau()


@pytest.fixture(scope="session")
def default_run(default_tab):
    """The default bimodal run, timed (wall seconds) for the budget check."""
    grid = DEFAULT_CONFIG.make_grid()
    f0 = initial_field(grid, "bimodal")
    t0 = time.perf_counter()
    series = run_single(DEFAULT_CONFIG, f0, tab=default_tab)
    wall = time.perf_counter() - t0
    return {"config": DEFAULT_CONFIG, "tab": default_tab, "f0": f0,
            "series": series, "wall": wall}


@pytest.fixture(scope="session")
def maxwellian_run(default_tab):
    """Short run started exactly at the discrete equilibrium."""
    config = replace(DEFAULT_CONFIG, t_end=1.0, label="equilibrium")
    f0 = maxwellian_on_grid(config.make_grid())
    series = run_single(config, f0, tab=default_tab)
    return {"config": config, "f0": f0, "series": series,
            "tab": default_tab}


@pytest.fixture(scope="session")
def oracle_results():
    """All registered inequality suites at their production sample sizes,
    with the total wall time (the suites share a 2-minute budget)."""
    reports = {}
    total = 0.0
    for name, fn in SUITES.items():
        t0 = time.perf_counter()
        reports[name] = fn(0)
        total += time.perf_counter() - t0
    return reports, total


@pytest.fixture(scope="session")
def small_tab():
    """A 24^2 tableau with the default kernel for unit-scale collision
    and weak-form tests."""
    return SimConfig(points_per_axis=24).make_tableau()
