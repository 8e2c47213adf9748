"""Experiment drivers: initial-datum families, the minimal tail radius,
rate fitting, and report plumbing.  Long-horizon behaviour of the drivers
is exercised by the acceptance tests; here the pieces are unit scale."""

import numpy as np
import pytest

from softboltz.distribution import VelocityGrid, moments, tail_energy
from softboltz.experiments import (ExperimentReport, OutOfRangeError,
                                   TailProfile, fit_rate, initial_field,
                                   run_theorem1, run_theorem5,
                                   solve_minimal_R)
from softboltz.simulator import SimConfig, run_single


@pytest.fixture(scope="module")
def grid():
    return VelocityGrid(dim=2, points_per_axis=32, extent=6.0)


@pytest.mark.parametrize("family,params", [
    ("bimodal", {}),
    ("anisotropic", {}),
    ("power_tail", {"delta": 2.25}),
    ("a_tail", {"kind": "log"}),
    ("a_tail", {"kind": "loglog"}),
    ("a_tail", {"kind": "power", "delta": 1.0}),
])
def test_initial_families_live_in_normalized_class(grid, family, params):
    f = initial_field(grid, family, **params)
    rep = moments(f)
    assert rep.mass == pytest.approx(1.0, abs=1e-11)
    assert np.allclose(rep.momentum, 0.0, atol=1e-11)
    assert rep.energy == pytest.approx(grid.dim, abs=1e-10)
    assert np.all(f.values >= 0.0)


def test_tail_families_are_heavier_than_core_alone(grid):
    f = initial_field(grid, "power_tail", delta=2.25, eps0=0.05)
    core_only = initial_field(grid, "power_tail", delta=2.25, eps0=0.0)
    r = 3.0
    assert tail_energy(f, r) > tail_energy(core_only, r)
    # support confined so post-collision outcomes stay on the grid
    assert tail_energy(f, 0.7 * grid.extent) == pytest.approx(0.0, abs=1e-13)


def test_initial_field_rejects_unknown(grid):
    with pytest.raises(ValueError):
        initial_field(grid, "uniform")
    with pytest.raises(ValueError):
        initial_field(grid, "a_tail", kind="exp")


def test_tail_profile_validation():
    TailProfile("power_tail", {"delta": 2.25}).validate(4.0, -0.5)
    with pytest.raises(ValueError, match="hypothesis violated"):
        TailProfile("power_tail", {"delta": 3.0}).validate(4.0, -0.5)
    with pytest.raises(ValueError, match="hypothesis violated"):
        TailProfile("power_tail", {"delta": 1.5}).validate(4.0, -0.5)
    with pytest.raises(ValueError):
        TailProfile("gaussian", {}).validate(4.0, -0.5)


def test_tail_profile_builds_field(grid):
    f = TailProfile("compact", {}).build(grid)
    assert moments(f).mass == pytest.approx(1.0, abs=1e-11)


def test_solve_minimal_R_closed_form():
    # T(R) = R^(beta-delta) crosses K(1+t)^2 at R = (K(1+t)^2)^(1/(beta-delta))
    beta, delta, K = 2.5, 2.25, 0.3
    for t in (0.0, 1.0, 3.0):
        r = solve_minimal_R(lambda x: x ** (beta - delta), K, s=4.0,
                            beta=beta, t=t)
        exact = (K * (1.0 + t) ** 2) ** (1.0 / (beta - delta))
        assert r == pytest.approx(exact, rel=1e-9)


def test_solve_minimal_R_returns_smallest_root():
    # piecewise tail functional with two crossings of the target 1.0
    def tail(r):
        return 2.0 - abs(r - 1.0)  # crosses 1.0 at r = 0 and r = 2

    r = solve_minimal_R(tail, K=1.0, s=4.0, beta=2.5, t=0.0,
                        r_min=0.5, r_max=10.0)
    assert r == pytest.approx(2.0, rel=1e-9)


def test_solve_minimal_R_out_of_range():
    with pytest.raises(OutOfRangeError):
        solve_minimal_R(lambda r: 0.0, K=1.0, s=4.0, beta=2.5, t=0.0)


def test_fit_rate_recovers_power_law():
    t = np.linspace(0.0, 10.0, 41)
    v = 3.0 * (1.0 + t) ** -1.5
    fit = fit_rate(t, v, target=1.5)
    assert fit is not None
    assert fit.lam_hat == pytest.approx(1.5, abs=1e-10)
    assert fit.band <= 1e-9
    assert "target 1.5" in fit.summary()


def test_fit_rate_needs_enough_points():
    t = np.array([0.0, 1.0, 2.0, 10.0])
    v = np.ones(4)
    assert fit_rate(t, v, target=0.0, window=(8.0, 10.0)) is None


def test_report_pass_logic():
    rep = ExperimentReport("demo", SimConfig())
    rep.add_check("a", True, "fine")
    assert rep.passed
    rep.add_check("b", False, "broken")
    assert not rep.passed
    text = rep.to_text()
    assert "[pass] a" in text and "[FAIL] b" in text
    rep.columns = ["t", "x"]
    rep.rows = [[0.0, 1.0]]
    assert rep.to_csv().splitlines()[0] == "t,x"


def test_theorem1_driver_accepts_precomputed_series(small_tab):
    config = SimConfig(points_per_axis=24, t_end=2.0, dt=0.05, stride=4,
                       s_list=(3.5, 4.0), label="t1")
    f0 = initial_field(small_tab.grid, "bimodal")
    series = run_single(config, f0, tab=small_tab)
    rep = run_theorem1(config, f0, s=4.0, series=series)
    assert rep.columns[0] == "t"
    assert len(rep.rows) == len(series.rows)
    labels = [label for label, _, _ in rep.checks]
    assert "s-moment grows at most linearly" in labels


def test_theorem5_driver_reports_oracle(small_tab):
    config = SimConfig(points_per_axis=24, t_end=0.4, dt=0.02, stride=2,
                       label="t5")
    f0 = initial_field(small_tab.grid, "power_tail", delta=2.25, eps0=0.05)
    series = run_single(config, f0, tab=small_tab)
    rep = run_theorem5(config, f0, series=series, tab=small_tab)
    assert rep.oracle is not None
    assert rep.passed, rep.to_text()
    assert any("alpha" in n for n in rep.notes)
