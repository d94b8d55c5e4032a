"""Command-line front end: simulate / sweep / optimize / compare / regime.

Exit codes: 0 success, 1 completed but flagged unreliable (holes, residuals,
unsaturated horizons), 2 configuration or usage errors.  All CSV output is
deterministic: fixed column order, 12 significant digits, newline-terminated
rows, written atomically; identical runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, IntegrationError, UnreliableResultError
from .merits import merit_report, probability_bookkeeping
from .model import RAD_NS_PER_MHZ, regime_report
from .runconfig import RunConfig, parse_config
from .solve import integrate_conditional, integrate_master
from .sweep import SweepSpec, compare_protocols, grid_sweep, optimize_inner


def _format_cell(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        if math.isnan(value):
            return "NA"
        return f"{value:.12g}"
    if isinstance(value, (np.floating,)):
        return _format_cell(float(value))
    return str(value)


def emit_csv(path: str | Path, header: list[str], rows) -> None:
    """Write rows atomically with deterministic formatting."""
    path = Path(path)
    text_lines = [",".join(header)]
    for row in rows:
        text_lines.append(",".join(_format_cell(v) for v in row))
    payload = "\n".join(text_lines) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve_config_path(name: str) -> Path:
    """A real path wins; otherwise fall back to a bundled config name."""
    path = Path(name)
    if path.exists():
        return path
    stem = name if name.endswith(".ini") else f"{name}.ini"
    bundled = resources.files("photongun").joinpath("configs", stem)
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config {name!r} not found (no such file or bundled config)")


def _load(args, command: str) -> RunConfig:
    path = _resolve_config_path(args.config)
    return parse_config(path.read_text(), command=command, source=str(path))


def _trajectory_rows(traj):
    labels = [s.label() for s in traj.basis.states]
    if traj.solver == "conditional":
        state_head = [f"re_a[{lab}]" for lab in labels] + [f"im_a[{lab}]" for lab in labels]
    else:
        state_head = [f"p[{lab}]" for lab in labels]
    header = ["t_ns"] + state_head + ["norm_sq"]
    modes = sorted(traj.emission)
    header += [f"P_{m}" for m in modes] + ["P_spont"]
    rows = []
    for k, t in enumerate(traj.times):
        if traj.solver == "conditional":
            state = traj.states[k]
            cells = [float(t)] + [float(v) for v in state.real] + [
                float(v) for v in state.imag
            ]
        else:
            cells = [float(t)] + [float(v) for v in np.diag(traj.states[k]).real]
        cells.append(float(traj.norm_sq[k]))
        cells += [float(traj.emission[m][k]) for m in modes]
        cells.append(float(traj.spontaneous[k]))
        rows.append(cells)
    return header, rows


def _cmd_simulate(args) -> int:
    run = _load(args, "simulate")
    solver = args.solver or run.task.get("solver", "conditional")
    integrate = integrate_conditional if solver == "conditional" else integrate_master
    traj = integrate(run.model, run.integration)
    if args.out:
        header, rows = _trajectory_rows(traj)
        emit_csv(args.out, header, rows)
    report = merit_report(traj)
    book = probability_bookkeeping(traj)
    print(f"solver: {solver}")
    print(f"model: {run.model.kind}, t_final = {_format_cell(traj.t_final)} ns")
    for name, value in (
        ("P_L", report.p_l),
        ("P_R", report.p_r),
        ("P_spont", report.p_spont),
        ("norm_sq", traj.final_norm_sq),
        ("bell_fidelity", report.bell_fidelity),
        ("success_rate", report.success_rate),
        ("emission_rate", report.emission_rate),
    ):
        if value is not None:
            print(f"{name} = {_format_cell(value)}")
    print(f"bookkeeping_residual = {_format_cell(book.residual)}")
    if report.flags:
        print(f"flags: {','.join(report.flags)}")
        return 1
    return 0


def _cmd_regime(args) -> int:
    run = _load(args, "regime")
    rep = regime_report(run.model)
    print(f"cooperativity C = {_format_cell(rep.cooperativity)}")
    print(f"critical atom number 1/C = {_format_cell(rep.critical_atom_number)}")
    print(f"bad-cavity margins: kappa/(g^2/kappa) = {_format_cell(rep.margin_cavity)}, "
          f"(g^2/kappa)/gamma = {_format_cell(rep.margin_emission)}")
    print(f"bad_cavity_ok = {rep.bad_cavity_ok}")
    if rep.omega_over_delta is not None:
        lo, hi = rep.raman_window
        print(f"Omega0/Delta = {_format_cell(rep.omega_over_delta)} with window "
              f"({_format_cell(lo)}, {_format_cell(hi)}): ok = {rep.raman_window_ok}")
    return 0


def _parse_grids(text: str, n_parameters: int):
    grids = [tuple(float(v) for v in part.split(",") if v.strip())
             for part in text.split(";") if part.strip()]
    if len(grids) != n_parameters:
        raise ConfigError(
            f"got {len(grids)} grids for {n_parameters} parameters; "
            f"separate per-parameter grids with ';'"
        )
    return tuple(grids)


def _cmd_sweep(args) -> int:
    run = _load(args, "sweep")
    parameters = run.task["parameters"]
    grids = _parse_grids(run.task["grids"], len(parameters))
    spec = SweepSpec(
        baseline=run.model,
        parameters=parameters,
        grids=grids,
        objective=run.task["objective"],
        compensate_stark=run.task["compensate_stark"],
    )
    result = grid_sweep(spec)
    header = list(parameters) + ["objective", "flag"]
    rows = [
        list(coord) + [value if math.isfinite(value) else None, diag]
        for coord, value, diag in zip(result.coordinates, result.values.tolist(),
                                      result.diagnostics)
    ]
    if args.out:
        emit_csv(args.out, header, rows)
    n_holes = len(result.holes)
    print(f"sweep: {len(rows)} points, {n_holes} holes")
    if n_holes:
        return 1
    return 0


def _cmd_optimize(args) -> int:
    run = _load(args, "optimize")
    free = run.task["free"]
    bounds = run.task["bounds"]
    result = optimize_inner(
        run.model,
        free,
        bounds,
        run.task["objective"],
        compensate_stark=run.task["compensate_stark"],
    )
    header = list(free) + ["objective", "evaluations", "cycles", "converged"]
    row = list(result.argmax) + [result.value, result.evaluations, result.cycles,
                                 str(result.converged).lower()]
    if args.out:
        emit_csv(args.out, header, [row])
    for name, value in zip(free, result.argmax):
        print(f"{name} = {_format_cell(value)}")
    print(f"objective = {_format_cell(result.value)}")
    print(f"converged = {result.converged} after {result.cycles} cycles "
          f"({result.evaluations} evaluations)")
    return 0 if result.converged else 1


def _cmd_compare(args) -> int:
    run = _load(args, "compare")
    objectives = run.task["objectives"]
    for objective in objectives:
        if objective not in ("success_rate", "emission_rate"):
            raise ConfigError(f"unknown objective {objective!r} in [task] objectives")
    rows_out = compare_protocols(
        run.model, run.task["kappa_over_gamma_grid"], objectives=tuple(objectives)
    )
    header = ["kappa_over_gamma", "objective", "constant", "adiabatic", "flag"]
    rows = [
        [r.kappa_over_gamma, r.objective,
         r.constant_value if math.isfinite(r.constant_value) else None,
         r.adiabatic_value if math.isfinite(r.adiabatic_value) else None,
         r.diagnostics]
        for r in rows_out
    ]
    if args.out:
        emit_csv(args.out, header, rows)
    bad = sum(1 for r in rows_out if r.diagnostics)
    print(f"compare: {len(rows_out)} rows, {bad} flagged")
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photongun",
        description="Cavity-QED atom-photon entanglement gun simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True,
                       help="path to a config file or the name of a bundled one")
        p.add_argument("--out", default=None, help="output CSV path")

    p_sim = sub.add_parser("simulate", help="integrate one trajectory")
    add_common(p_sim)
    p_sim.add_argument("--solver", choices=("conditional", "master"), default=None)
    p_sim.set_defaults(handler=_cmd_simulate)

    p_reg = sub.add_parser("regime", help="operating-regime diagnostics")
    add_common(p_reg)
    p_reg.set_defaults(handler=_cmd_regime)

    p_swp = sub.add_parser("sweep", help="evaluate an objective over a grid")
    add_common(p_swp)
    p_swp.set_defaults(handler=_cmd_sweep)

    p_opt = sub.add_parser("optimize", help="maximize an objective over 1-3 parameters")
    add_common(p_opt)
    p_opt.set_defaults(handler=_cmd_optimize)

    p_cmp = sub.add_parser("compare", help="constant vs adiabatic protocol table")
    add_common(p_cmp)
    p_cmp.set_defaults(handler=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, UnreliableResultError) as exc:
        print(f"unreliable result: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
