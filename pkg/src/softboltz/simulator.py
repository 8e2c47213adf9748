"""Time integration of df/dt = Q(f): explicit Euler (default) or Heun,
conservative projection after every update, truncation-sequence studies
B_n = min(B, n), the auxiliary g-flow, and diagnostics recording.

Diagnostics are always computed on projected fields; raw pre-projection
updates never leave the step function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .collision import (CollisionDiagnostics, CollisionTableau, apply_Q,
                        conservative_projection, dissipation_bundle,
                        loss_convolution)
from .distribution import (DensityField, VelocityGrid, distances,
                           entropy_functionals, l1s_norm, maxwellian_on_grid,
                           moments, t_star, tail_energy)
from .kernel import AngularLaw, KernelSpec, Truncation

LEAK_BUDGET = 1e-6   # run fails when excluded collision mass exceeds this
                     # fraction of the total collision mass


class SimulationAbort(RuntimeError):
    """Integration failed; carries the partial series recorded so far."""

    def __init__(self, message: str, partial: "TimeSeries") -> None:
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SimConfig:
    """One integration setup (grid, kernel, stepping, diagnostics)."""

    dim: int = 2
    points_per_axis: int = 48
    extent: float = 6.0
    gamma: float = -0.5
    angular: AngularLaw = AngularLaw()
    truncation: Optional[Truncation] = None
    bn_sequence: Optional[tuple[float, ...]] = None
    t_end: float = 10.0
    dt: float = 0.05
    dt_policy: str = "fixed"          # "fixed" | "cfl"
    cfl_safety: float = 0.5
    integrator: str = "euler"         # "euler" | "rk2"
    stride: int = 5
    s_list: tuple[float, ...] = (4.0,)
    R_list: tuple[float, ...] = ()
    n_theta: int = 16
    n_omega: int = 8
    prune_tol: float = 1e-14
    n_chunks: Optional[int] = None
    seed: int = 0
    label: str = "default"

    def __post_init__(self) -> None:
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.dt_policy not in ("fixed", "cfl"):
            raise ValueError("dt_policy must be 'fixed' or 'cfl'")
        if not (0.0 < self.cfl_safety < 1.0):
            raise ValueError("cfl_safety must lie in (0, 1)")
        if self.integrator not in ("euler", "rk2"):
            raise ValueError("integrator must be 'euler' or 'rk2'")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.bn_sequence is not None:
            caps = tuple(float(c) for c in self.bn_sequence)
            if any(c <= 0 for c in caps) or list(caps) != sorted(caps):
                raise ValueError("bn_sequence must be positive and increasing")
            object.__setattr__(self, "bn_sequence", caps)

    def make_grid(self) -> VelocityGrid:
        return VelocityGrid(self.dim, self.points_per_axis, self.extent)

    def kernel_spec(self, cap: Optional[float] = None) -> KernelSpec:
        trunc = Truncation("bn_cap", cap) if cap is not None else self.truncation
        return KernelSpec(dim=self.dim, gamma=self.gamma, angular=self.angular,
                          truncation=trunc)

    def make_tableau(self, cap: Optional[float] = None) -> CollisionTableau:
        return CollisionTableau(self.make_grid(), self.kernel_spec(cap),
                                n_theta=self.n_theta, n_omega=self.n_omega,
                                prune_tol=self.prune_tol,
                                n_chunks=self.n_chunks)


@dataclass
class TimeSeries:
    """Diagnostics rows plus the recorded snapshots they were computed on."""

    label: str
    cap: Optional[float]
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)
    snapshots: list[DensityField] = field(default_factory=list)

    def append(self, row: Sequence[float], snapshot: DensityField) -> None:
        if self.rows and row[0] <= self.rows[-1][0]:
            raise ValueError("recorded times must be strictly increasing")
        self.rows.append([float(x) for x in row])
        self.snapshots.append(snapshot)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[self.columns.index(name)] for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def csv_name(self) -> str:
        cap = "inf" if self.cap is None else f"{self.cap:g}"
        return f"run_{self.label}_n{cap}.csv"

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def step(tab: CollisionTableau, f: DensityField, dt: float,
         integrator: str = "euler",
         targets: Optional[np.ndarray] = None,
         max_retries: int = 10
         ) -> tuple[DensityField, float, CollisionDiagnostics]:
    """One projected time step; returns (f_next, dt_used, diagnostics).

    A candidate with negatives beyond the clip tolerance rejects the step;
    dt is halved and the step retried up to max_retries times.
    """
    for _ in range(max_retries + 1):
        q, diag = apply_Q(tab, f)
        if integrator == "euler":
            cand = f.values + dt * q
        else:
            mid_vals = f.values + dt * q
            floor = -1e-12 * max(f.values.max(), 1e-300)
            if mid_vals.min() < floor:
                dt *= 0.5
                continue
            mid = conservative_projection(
                f.with_values(np.maximum(mid_vals, 0.0)), targets)
            q2, diag2 = apply_Q(tab, mid)
            cand = f.values + 0.5 * dt * (q + q2)
            diag = diag2
        floor = -1e-12 * max(f.values.max(), 1e-300)
        if cand.min() >= floor:
            projected = conservative_projection(
                f.with_values(np.maximum(cand, 0.0)), targets)
            return projected, dt, diag
        dt *= 0.5
    raise RuntimeError(f"step rejected {max_retries} times "
                       "(positivity could not be restored)")


def _series_columns(config: SimConfig) -> list[str]:
    cols = ["t", "mass"]
    cols += [f"momentum_{d}" for d in range(config.dim)]
    cols += ["energy", "H", "H_rel", "D", "d_L1", "d_L12"]
    cols += [f"l1s_{s:g}" for s in config.s_list]
    cols += [f"tail_{R:g}" for R in config.R_list]
    cols += ["t_star", "leakage_fraction", "rho", "capped_nodes"]
    return cols


def _record(series: TimeSeries, config: SimConfig, tab: CollisionTableau,
            f: DensityField, t: float, m_field: DensityField,
            diag: Optional[CollisionDiagnostics]) -> None:
    rep = moments(f)
    H, H_rel, _ = entropy_functionals(f, m_field)
    diss = dissipation_bundle(tab, f)
    d1, d12 = distances(f, m_field)
    row = [t, rep.mass, *rep.momentum, rep.energy, H, H_rel, diss["D"],
           d1, d12]
    row += [l1s_norm(f, s) for s in config.s_list]
    row += [tail_energy(f, R) for R in config.R_list]
    row += [t_star(f),
            diag.leakage_fraction if diag is not None else 0.0,
            diag.rho if diag is not None else 1.0,
            float(diss["capped_nodes"])]
    series.append(row, f)


def run_single(config: SimConfig, f0: DensityField,
               cap: Optional[float] = None,
               tab: Optional[CollisionTableau] = None) -> TimeSeries:
    """Integrate one truncation level to t_end, recording every stride."""
    if tab is None:
        tab = config.make_tableau(cap)
    m_field = maxwellian_on_grid(tab.grid)
    rep0 = moments(f0)
    targets = np.array([rep0.mass, *rep0.momentum, rep0.energy])
    series = TimeSeries(label=config.label, cap=cap,
                        columns=_series_columns(config))
    f = f0
    t = 0.0
    _record(series, config, tab, f, t, m_field, None)
    steps_done = 0
    while t < config.t_end - 1e-12:
        if config.dt_policy == "cfl":
            lmax = float(loss_convolution(tab, f).values.max())
            dt = config.cfl_safety / lmax if lmax > 0 else config.dt
            dt = min(dt, config.t_end - t)
        else:
            dt = min(config.dt, config.t_end - t)
        try:
            f, dt_used, diag = step(tab, f, dt, config.integrator, targets)
        except RuntimeError as exc:
            raise SimulationAbort(str(exc), series) from exc
        t += dt_used
        steps_done += 1
        if diag.leakage_fraction > LEAK_BUDGET:
            raise SimulationAbort(
                f"leakage fraction {diag.leakage_fraction:.3e} exceeds "
                f"budget {LEAK_BUDGET:g} (grid extent too small for this "
                "state)", series)
        if steps_done % config.stride == 0 or t >= config.t_end - 1e-12:
            _record(series, config, tab, f, t, m_field, diag)
    return series


def run(config: SimConfig, f0: DensityField):
    """Integrate to t_end.  Returns one TimeSeries, or a list with one
    series per cap when bn_sequence is set (the kernel-truncation
    approximation study)."""
    if config.bn_sequence is None:
        return run_single(config, f0)
    return [run_single(config, f0, cap=c) for c in config.bn_sequence]


# ---------------------------------------------------------------------------
# the auxiliary g-flow
# ---------------------------------------------------------------------------

@dataclass
class GFlowSeries:
    """Diagnostics of g(t) = (1 - e^(-t-1)) f(t) + e^(-t-1) M."""

    k: float
    columns: list[str]
    rows: list[list[float]]
    snapshots: list[DensityField]

    def column(self, name: str) -> np.ndarray:
        return np.array([r[self.columns.index(name)] for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")


def g_field(f: DensityField, m_field: DensityField, t: float) -> DensityField:
    """g = (1 - e^(-t-1)) f + e^(-t-1) M: a convex combination with the
    pointwise Gaussian floor g >= e^(-t-1) M."""
    w = math.exp(-t - 1.0)
    return f.with_values((1.0 - w) * f.values + w * m_field.values)


def g_flow(tab: CollisionTableau, series: TimeSeries,
           k: float = 10.0) -> GFlowSeries:
    """Per recorded row: H(g|M), D(g), D_2(g), D_k(g), the entropic moment
    ||g log+ g||_{L1_k}, and the worst pointwise floor defect
    min(g - e^(-t-1) M) (nonnegative up to rounding)."""
    m_field = maxwellian_on_grid(tab.grid)
    cols = ["t", "H_rel", "D", "D2", "Dk", "ent_moment", "floor_defect",
            "capped_nodes"]
    rows = []
    snaps = []
    for t, f in zip(series.times, series.snapshots):
        g = g_field(f, m_field, float(t))
        diss = dissipation_bundle(tab, g, ks=(2.0, k))
        _, h_rel, ent = entropy_functionals(g, m_field, k=k)
        w = math.exp(-float(t) - 1.0)
        defect = float((g.values - w * m_field.values).min())
        rows.append([float(t), h_rel, diss["D"], diss["Dk"][2.0],
                     diss["Dk"][float(k)], ent, defect,
                     float(diss["capped_nodes"])])
        snaps.append(g)
    return GFlowSeries(k=float(k), columns=cols, rows=rows, snapshots=snaps)


def time_averaged(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Running trapezoid average (1/T) int_0^T values dt at each recorded T
    (first entry: the instantaneous value)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    integral = np.concatenate(
        [[0.0], np.cumsum(0.5 * np.diff(times) * (values[1:] + values[:-1]))])
    out = values.copy()
    pos = times > 0
    out[pos] = integral[pos] / times[pos]
    return out
