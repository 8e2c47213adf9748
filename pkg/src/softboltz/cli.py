"""Command-line entry point: configuration loading, run/verify/experiment
dispatch, CSV emission, and the exit-code policy (0 success, 1 failed
check, 2 configuration error)."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .kernel import AngularLaw, Truncation
from .oracles import CSV_HEADER, SUITES
from .simulator import SimConfig, SimulationAbort, run
from . import experiments as exp

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    """Configuration problem; maps to exit code 2."""


# dotted key -> (python type, default); lists are comma-separated floats
_SCHEMA: dict[str, tuple[type, object]] = {
    "grid.dim": (int, 2),
    "grid.points_per_axis": (int, 48),
    "grid.extent": (float, 6.0),
    "kernel.gamma": (float, -0.5),
    "kernel.b_kind": (str, "constant"),
    "kernel.b_const": (float, 1.0),
    "kernel.b_nu": (float, 0.0),
    "kernel.bn_cap": (float, 0.0),          # 0 means untruncated
    "time.t_end": (float, 10.0),
    "time.dt": (float, 0.05),
    "time.dt_policy": (str, "fixed"),
    "time.cfl_safety": (float, 0.5),
    "time.integrator": (str, "euler"),
    "time.stride": (int, 5),
    "initial.family": (str, "bimodal"),
    "initial.separation": (float, 1.5),
    "initial.width": (float, 1.2),
    "initial.eps0": (float, 0.05),
    "initial.delta": (float, 2.25),
    "initial.r0": (float, 1.0),
    "initial.kind": (str, "log"),
    "initial.core": (str, "maxwellian"),
    "diagnostics.s_list": (list, [4.0]),
    "diagnostics.R_list": (list, []),
    "diagnostics.n_theta": (int, 16),
    "diagnostics.n_omega": (int, 8),
    "experiment.s": (float, 4.0),
    "experiment.delta": (float, 2.25),
    "experiment.eps0": (float, 3.0),
    "experiment.r0": (float, 0.0),
    "experiment.kind": (str, "log"),
    "experiment.core": (str, "bimodal"),
    "experiment.k0": (float, 1e-3),
    "threads": (int, 0),
    "seed": (int, 0),
    "label": (str, "default"),
}


def _coerce(key: str, raw: str):
    typ, _ = _SCHEMA[key]
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is list:
            raw = raw.strip()
            return [float(x) for x in raw.split(",")] if raw else []
        return str(raw)
    except ValueError as exc:
        raise ConfigError(f"type mismatch for key {key!r}: {raw!r}") from exc


def load_config(path: str | None, overrides: list[str] | None = None
                ) -> dict[str, object]:
    """Plain-text config: one `dotted.key = value` per line, # comments.
    Unknown keys are rejected (named in the error), never ignored.
    Overrides (from --set) beat file values."""
    values = {k: v for k, (_, v) in _SCHEMA.items()}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{lineno}: expected 'key = value'")
                key, raw = (part.strip() for part in line.split("=", 1))
                if key not in _SCHEMA:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = _coerce(key, raw)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = (part.strip() for part in item.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def make_sim_config(values: dict[str, object]) -> SimConfig:
    cap = float(values["kernel.bn_cap"])
    try:
        config = SimConfig(
            dim=values["grid.dim"],
            points_per_axis=values["grid.points_per_axis"],
            extent=values["grid.extent"],
            gamma=values["kernel.gamma"],
            angular=AngularLaw(kind=values["kernel.b_kind"],
                               c=values["kernel.b_const"],
                               nu=values["kernel.b_nu"]),
            truncation=Truncation("bn_cap", cap) if cap > 0 else None,
            t_end=values["time.t_end"],
            dt=values["time.dt"],
            dt_policy=values["time.dt_policy"],
            cfl_safety=values["time.cfl_safety"],
            integrator=values["time.integrator"],
            stride=values["time.stride"],
            s_list=tuple(values["diagnostics.s_list"]),
            R_list=tuple(values["diagnostics.R_list"]),
            n_theta=values["diagnostics.n_theta"],
            n_omega=values["diagnostics.n_omega"],
            seed=values["seed"],
            label=values["label"],
        )
        config.make_grid()       # surface grid validation as a config error
        config.kernel_spec()
        return config
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, list):
        return ",".join(f"{x:.17g}" for x in v)
    return str(v)


def config_header(values: dict[str, object]) -> str:
    """Every effective value, echoed so the run is replayable."""
    return "\n".join(f"# {k} = {_format_value(values[k])}"
                     for k in sorted(values)) + "\n"


def _write_with_header(path: str, header: str, body: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        fh.write(body)


def _initial_from_config(values: dict[str, object], grid):
    family = str(values["initial.family"])
    params = {}
    if family == "bimodal":
        params = {"separation": values["initial.separation"],
                  "width": values["initial.width"]}
    elif family == "power_tail":
        params = {"eps0": values["initial.eps0"],
                  "delta": values["initial.delta"],
                  "r0": values["initial.r0"],
                  "core": values["initial.core"]}
    elif family == "a_tail":
        params = {"eps0": values["initial.eps0"],
                  "delta": values["initial.delta"],
                  "r0": values["initial.r0"],
                  "kind": values["initial.kind"],
                  "core": values["initial.core"]}
    elif family not in ("maxwellian", "anisotropic"):
        raise ConfigError(f"unknown initial.family {family!r}")
    try:
        return exp.initial_field(grid, family, **params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_simulate(values: dict[str, object], out_dir: str) -> int:
    config = make_sim_config(values)
    f0 = _initial_from_config(values, config.make_grid())
    header = config_header(values)
    try:
        result = run(config, f0)
    except SimulationAbort as exc:
        print(f"simulate: aborted: {exc}", file=sys.stderr)
        return EXIT_FAILED_CHECK
    series_list = result if isinstance(result, list) else [result]
    for series in series_list:
        body = ",".join(series.columns) + "\n"
        for row in series.rows:
            body += ",".join(f"{x:.17g}" for x in row) + "\n"
        path = os.path.join(out_dir, series.csv_name())
        _write_with_header(path, header, body)
        print(f"simulate: wrote {path} ({len(series.rows)} rows, "
              f"t_end = {series.times[-1]:g})")
    return EXIT_OK


def _cmd_verify(values: dict[str, object], out_dir: str, suite: str) -> int:
    if suite != "all" and suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; known: "
                          + ", ".join(sorted(SUITES)) + ", all")
    names = sorted(SUITES) if suite == "all" else [suite]
    seed = int(values["seed"])
    header = config_header(values)
    body = ",".join(CSV_HEADER) + "\n"
    all_ok = True
    for name in names:
        report = SUITES[name](seed)
        print(report.summary_line())
        body += ",".join(str(x) for x in report.csv_row()) + "\n"
        all_ok = all_ok and report.passed
    path = os.path.join(out_dir, "verify.csv")
    _write_with_header(path, header, body)
    print(f"verify: wrote {path}")
    return EXIT_OK if all_ok else EXIT_FAILED_CHECK


def _cmd_experiment(values: dict[str, object], out_dir: str,
                    which: str) -> int:
    config = make_sim_config(values)
    s = float(values["experiment.s"])
    if which == "theorem1":
        report = exp.run_theorem1(config, s=s)
    elif which == "theorem2":
        profile = exp.TailProfile("power_tail", {
            "delta": values["experiment.delta"],
            "eps0": values["experiment.eps0"],
            "r0": values["experiment.r0"],
            "core": values["experiment.core"]})
        try:
            report = exp.run_theorem2(config, profile,
                                      k0=float(values["experiment.k0"]), s=s)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    elif which == "theorem3":
        report = exp.run_theorem3(config, s=s)
    elif which == "theorem5":
        report = exp.run_theorem5(config)
    else:
        raise ConfigError(f"unknown experiment {which!r}")
    header = config_header(values)
    path = os.path.join(out_dir, f"experiment_{which}.csv")
    _write_with_header(path, header, report.to_csv())
    summary = report.to_text()
    spath = os.path.join(out_dir, f"experiment_{which}.txt")
    _write_with_header(spath, header, summary + "\n")
    print(summary)
    print(f"experiment: wrote {path} and {spath}")
    return EXIT_OK if report.passed else EXIT_FAILED_CHECK


def _cmd_report(out_dir: str) -> int:
    if not os.path.isdir(out_dir):
        raise ConfigError(f"output directory not found: {out_dir}")
    found = False
    for name in sorted(os.listdir(out_dir)):
        path = os.path.join(out_dir, name)
        if name.endswith(".txt"):
            found = True
            print(f"--- {name} ---")
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.startswith("#"):
                        print(line.rstrip("\n"))
        elif name.endswith(".csv"):
            found = True
            with open(path, encoding="utf-8") as fh:
                lines = [ln for ln in fh if not ln.startswith("#")]
            ncols = len(lines[0].split(",")) if lines else 0
            print(f"{name}: {max(len(lines) - 1, 0)} rows x {ncols} cols"
                  + (f", columns: {lines[0].strip()}" if lines else ""))
    if not found:
        print(f"report: no CSV or summary files in {out_dir}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softboltz",
        description="Deterministic solver and verification harness for the "
                    "spatially homogeneous Boltzmann equation with soft "
                    "potentials.")
    parser.add_argument("--config", metavar="PATH",
                        help="plain-text config, one dotted key per line")
    parser.add_argument("--set", dest="overrides", action="append",
                        metavar="KEY=VALUE", help="override a config key")
    parser.add_argument("--out", default="out", metavar="DIR",
                        help="output directory (default: out)")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="override the seed")
    parser.add_argument("--threads", type=int, metavar="K",
                        help="worker threads (0 = auto)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", help="integrate the configured run")
    pv = sub.add_parser("verify", help="run oracle suites")
    pv.add_argument("--suite", default="all",
                    help="suite id or 'all' (default)")
    pe = sub.add_parser("experiment", help="run a theorem-level experiment")
    pe.add_argument("which",
                    choices=["theorem1", "theorem2", "theorem3", "theorem5"])
    sub.add_parser("report", help="re-render summaries from existing output")
    return parser


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        values = load_config(args.config, args.overrides)
        if args.seed is not None:
            values["seed"] = int(args.seed)
        if args.threads is not None:
            values["threads"] = int(args.threads)
        threads = int(values["threads"])
        if threads < 0:
            raise ConfigError("threads must be >= 0")
        if threads > 0:
            import numba
            numba.set_num_threads(threads)
        if args.command == "simulate":
            return _cmd_simulate(values, args.out)
        if args.command == "verify":
            return _cmd_verify(values, args.out, args.suite)
        if args.command == "experiment":
            return _cmd_experiment(values, args.out, args.which)
        return _cmd_report(args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
