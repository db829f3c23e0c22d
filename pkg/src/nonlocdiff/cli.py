"""Command-line front end: ``nonlocdiff {solve,verify,trivial,weak-residual}``.

Exit codes: 0 success, 2 invalid config or spec, 3 solver failure,
4 a verification check failed, 5 weak-residual quadrature under-resolved.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    check_ball_confinement,
    check_contraction,
    check_dirichlet,
    check_linf_decay,
    check_positivity,
    check_smp,
    check_time_regularity,
    check_trace_continuity,
    stationarity_drift,
    trivial_residual,
    weak_pme_residual,
    weak_pme_target,
    VerificationReport,
)
from .config import RunConfig, load_config, matrix_configs
from .errors import (
    BadSpacing,
    ConfigError,
    InvalidParameter,
    InvalidSpec,
    NoConvergence,
    NonFiniteState,
    NonFiniteValue,
    PreconditionFailed,
    QuadratureUnderResolved,
    RatioViolation,
    UndefinedAt,
)
from .grid import Field, snapshot_path, write_snapshot, write_trace
from .solver import Trajectory, solve, with_options

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK, EXIT_QUADRATURE = 0, 2, 3, 4, 5
DEFAULT_OUT = "nonlocdiff_out"

CONFIG_ERRORS = (ConfigError, BadSpacing, InvalidParameter, InvalidSpec, UndefinedAt,
                 NonFiniteValue, PreconditionFailed)
SOLVER_ERRORS = (NoConvergence, RatioViolation, NonFiniteState)


def output_dir(args, config: RunConfig | None = None) -> Path:
    """``--out``, then ``$NONLOC_OUT``, then the config's ``output_dir``, then a default."""
    chosen = args.out or os.environ.get("NONLOC_OUT") or (config and config.output_dir) or DEFAULT_OUT
    path = Path(chosen)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(args) -> RunConfig:
    config = load_config(args.config, seed=args.seed)
    if args.threads is not None:
        config.solver = with_options(config.solver, threads=args.threads)
    elif "threads" not in (config.document.get("solver") or {}):
        config.solver = with_options(config.solver, threads=os.cpu_count() or 1)
    return config


def _run(config: RunConfig) -> Trajectory:
    return solve(config.initial_field(), config.conductivity, config.stencil,
                 config.t_final, config.solver)


# solve ---------------------------------------------------------------------


def cmd_solve(args) -> int:
    config = _load(args)
    out = output_dir(args, config)
    start = time.perf_counter()
    traj = _run(config)
    elapsed = time.perf_counter() - start

    write_trace(out / "trace.csv", traj.extrema_trace)
    wanted = {0.0, *config.snapshot_times}
    snapshots = {}
    for i, (t, f) in enumerate(zip(traj.times, traj.fields)):
        if t in wanted:
            path = snapshot_path(out, i)
            write_snapshot(path, f)
            snapshots[path.name] = t
    _write_json(out / "metadata.json", {
        "version": __version__,
        "config": config.effective(),
        "grid": {
            "n_interior": config.grid.n_interior,
            "n_collar": config.grid.n_collar,
            "horizon_cells": config.grid.M,
        },
        "kernel_l1": {"closed_form": config.kernel.l1_norm, "quadrature": config.stencil.weight_sum},
        "times": traj.times,
        "snapshots": snapshots,
        "windows": [w.summary() for w in traj.windows],
    })
    _write_json(out / "timings.json", {"solve_seconds": elapsed})
    print(f"solved {config.conductivity} to t={config.t_final:g} in {len(traj.windows)} windows; "
          f"u_inf {traj.extrema_trace[0].u_inf:.6g} -> {traj.extrema_trace[-1].u_inf:.6g}; "
          f"output in {out}")
    return EXIT_OK


# verify --------------------------------------------------------------------


def _mutate_collar(traj: Trajectory) -> None:
    """Seeded fault: nudge one collar value of the final field by one ulp."""
    f = traj.fields[-1]
    values = f.values.copy()
    i = f.grid.n_interior
    values[i] = np.nextafter(values[i], np.inf)
    traj.fields[-1] = Field(f.grid, values)


def _auto_checks(config: RunConfig, traj: Trajectory) -> list[str]:
    c = config.conductivity
    names = []
    if config.trivial is not None:
        names.append("stationarity")
    names.append("linf_decay")
    if c.satisfies_k3 and not np.any(traj.initial.values < 0):
        names.append("positivity")
    if c.satisfies_k3:
        names.append("smp")
    if len(traj) >= 3:
        names.append("trace_continuity")
    names += ["time_regularity", "dirichlet_invariance", "contraction", "ball_confinement"]
    return names


def _check(name: str, config: RunConfig, traj: Trajectory, psi) -> VerificationReport:
    c, st, v = config.conductivity, config.stencil, config.verify
    if name == "stationarity":
        if config.trivial is None:
            raise PreconditionFailed("PreconditionFailed: stationarity needs a trivial spec")
        residual = trivial_residual(traj.initial, c, st)
        if residual > 0:
            raise PreconditionFailed(f"PreconditionFailed: field is not trivial for {c}")
        tol = 1e-13 * (1 + abs(config.trivial.U))
        drift = stationarity_drift(traj)
        return VerificationReport("stationarity", drift <= tol, drift, tol)
    if name == "linf_decay":
        return check_linf_decay(traj, v.decay_tol)
    if name == "positivity":
        return check_positivity(traj, c, v.pos_tol)
    if name == "smp":
        return check_smp(traj, c, st, v.smp_tol)
    if name == "trace_continuity":
        return check_trace_continuity(traj, c, st, v.slack)
    if name == "time_regularity":
        return check_time_regularity(traj, c, st, v.slack)
    if name == "dirichlet_invariance":
        return check_dirichlet(traj, psi)
    if name == "contraction":
        return check_contraction(traj, config.solver.ratio_tolerance)
    return check_ball_confinement(traj)


def verify_config(config: RunConfig, timings: dict | None = None) -> dict:
    """Solve every matrix run and apply the configured checks; returns the report document."""
    runs, all_passed = [], True
    for run in matrix_configs(config):
        start = time.perf_counter()
        traj = _run(run)
        psi = traj.initial.collar_values.copy()
        if config.verify.inject_fault == "mutate_collar":
            _mutate_collar(traj)
        records = []
        for name in config.verify.checks or _auto_checks(run, traj):
            rep = _check(name, run, traj, psi)
            rec = rep.to_record()
            if rep.vacuous and not config.verify.vacuous_pass:
                rec["passed"] = False
            all_passed &= rec["passed"]
            records.append(rec)
        if timings is not None:
            timings[run.name] = time.perf_counter() - start
        runs.append({"name": run.name, "conductivity": str(run.conductivity), "checks": records})
    return {"passed": bool(all_passed), "runs": runs}


def cmd_verify(args) -> int:
    config = _load(args)
    out = output_dir(args, config)
    timings: dict = {}
    report = verify_config(config, timings)
    _write_json(out / "report.json", report)
    _write_json(out / "timings.json", timings)
    failed = [(r["name"], c) for r in report["runs"] for c in r["checks"] if not c["passed"]]
    for run, c in failed:
        print(f"FAIL {run}: {c['name']} max_violation={c['max_violation']:.6g} "
              f"tolerance={c['tolerance']:.6g}", file=sys.stderr)
    n = sum(len(r["checks"]) for r in report["runs"])
    print(f"{n - len(failed)}/{n} checks passed over {len(report['runs'])} runs; report in {out}")
    return EXIT_CHECK if failed else EXIT_OK


# trivial -------------------------------------------------------------------


def cmd_trivial(args) -> int:
    config = _load(args)
    if config.trivial is None:
        raise ConfigError("config has no 'trivial' section")
    out = output_dir(args, config)
    f = config.initial_field()
    residual = trivial_residual(f, config.conductivity, config.stencil)
    write_snapshot(out / "trivial.csv", f)
    _write_json(out / "trivial.json", {
        "kind": config.trivial.kind.value,
        "conductivity": str(config.conductivity),
        "values": sorted(set(f.values.tolist())),
        "residual": residual,
    })
    print(f"residual {residual:.17g}")
    return EXIT_OK


# weak-residual -------------------------------------------------------------


def cmd_weak_residual(args) -> int:
    value = weak_pme_residual(args.U, args.m, quad_n=args.quad_n) + 0.0
    target = weak_pme_target(args.U, args.m) + 0.0  # no negative zero in the output
    print(f"residual {value:.10g} target {target:.10g}")
    return EXIT_OK


# entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocdiff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log window progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON run config")
        p.add_argument("--out", help="output directory (default: $NONLOC_OUT, then config)")
        p.add_argument("--threads", type=int, help="threads for the RHS sweep (default: all cores)")
        p.add_argument("--seed", type=int, help="seed for random profiles (overrides config)")

    common(sub.add_parser("solve", help="integrate a run config"))
    common(sub.add_parser("verify", help="run the verification checks"))
    common(sub.add_parser("trivial", help="build a trivial field and its residual"))
    weak = sub.add_parser("weak-residual", help="classical weak-form residual of U sgn(x)")
    weak.add_argument("--U", type=float, default=1.0)
    weak.add_argument("--m", type=float, default=2.0)
    weak.add_argument("--quad-n", type=int, default=1024)
    return parser


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "trivial": cmd_trivial,
    "weak-residual": cmd_weak_residual,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except QuadratureUnderResolved as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE


if __name__ == "__main__":
    sys.exit(main())
