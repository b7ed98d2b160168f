"""Command-line entry point.

    ssns [--config FILE] [--out DIR] [--seed N] [--quiet] {simulate,cascade,verify,sweep,resume}

Exit codes: 0 success, 2 configuration error, 3 numerical abort, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import io as sio
from .cascade import CascadeState, SweepRow, gamma_sweep, initial_shells, integrate_cascade
from .diagnostics import DiagnosticsMonitor
from .solver import initial_vorticity, run
from .spectral import make_lp_bank
from .verification import run_verification, write_report

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _config(args) -> sio.RunConfig:
    if args.config:
        cfg = sio.load_config(args.config)
        cfg.mode = args.command if args.command != "resume" else "simulate"
    else:
        cfg = sio.parse_config({"mode": "simulate" if args.command == "resume" else args.command})
    if args.out:
        cfg.sections["output"]["dir"] = args.out
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.sections["init"]["seed"] = args.seed
    return cfg


def _simulate(cfg: sio.RunConfig, args, resume_from=None) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    solver_cfg = cfg.solver_config()
    spec = cfg.spec()
    bank = make_lp_bank(solver_cfg.grid)

    if resume_from is not None:
        ck = sio.read_checkpoint(resume_from)
        if ck.state.omega.grid != solver_cfg.grid:
            raise sio.ConfigError("grid.n: checkpoint grid does not match the configuration")
        if ck.gamma != spec.gamma or ck.d != spec.d:
            raise sio.ConfigError("dissipation.gamma: checkpoint was written with different dissipation parameters")
        initial, energy0 = ck.state, ck.energy0
        series_name = "timeseries_resumed.csv"
    else:
        init = cfg["init"]
        initial = initial_vorticity(solver_cfg.grid, init["family"], init["seed"], init["energy"],
                                    init["k_peak"], init["shell"], solver_cfg.dealias_fraction)
        energy0 = None
        series_name = "timeseries.csv"

    monitor = DiagnosticsMonitor(bank, spec, None if energy0 is None or math.isnan(energy0) else energy0,
                                 cfg["diagnostics"]["barrier_C"])
    ck_path = out / "checkpoint.ssns"

    def checkpoint(state):
        sio.write_checkpoint(ck_path, state, spec, monitor.E if monitor.E is not None else math.nan)

    report = run(solver_cfg, initial, [monitor], checkpoint)
    sio.write_timeseries(monitor.records, out / series_name)
    with open(out / "events.log", "a" if resume_from is not None else "w") as fh:
        for event in monitor.events:
            fh.write(event + "\n")
        fh.write(f"termination {report.cause} t = {report.state.t:.17g} steps = {report.state.step_count}\n")
        if report.message:
            fh.write(report.message + "\n")
    if not args.quiet:
        last = monitor.records[-1]
        print(f"{report.cause}: t = {report.state.t:.6g}, steps = {report.steps_taken}, "
              f"energy = {last.energy:.6e}, c = {last.c:.6e}, dissipated = {last.diss_cum:.6e}")
    return EXIT_OK if report.completed else EXIT_NUMERICAL


def _cascade(cfg: sio.RunConfig, args) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    params = cfg.cascade_params()
    c = cfg["cascade"]
    b0 = initial_shells(params, c["family"], cfg.seed, c["amplitude"], c["center"])
    traj = integrate_cascade(CascadeState(b0), params, c["t_end"], cfg.cascade_controller())
    header = ["t", "c", "budget"] + [f"b_{j}" for j in range(params.n)]
    rows = ([float(t), float(b.sum()), float(q)] + [float(v) for v in b] for t, b, q in zip(traj.t, traj.b, traj.budget))
    sio.write_table(rows, header, out / "cascade.csv")
    if not args.quiet:
        print(f"{traj.cause}: t = {traj.t[-1]:.6g}, sup c = {traj.c.max():.6e}, budget = {traj.budget[-1]:.6e}"
              + (f", offending shell {traj.offending_shell}" if traj.blowup_suspect else ""))
    return EXIT_NUMERICAL if traj.cause == "step_underflow" else EXIT_OK


def _sweep(cfg: sio.RunConfig, args) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    c = cfg["cascade"]
    template = cfg.cascade_params()

    def initial(params):
        return initial_shells(params, c["family"], cfg.seed, c["amplitude"], c["center"])

    rows = []
    for gamma in cfg["sweep"]["gammas"]:
        row = gamma_sweep(template, [gamma], initial, cfg["sweep"]["horizon"], cfg.cascade_controller())[0]
        rows.append(row)
        sio.write_table([[getattr(row, f) for f in SweepRow.FIELDS]], SweepRow.FIELDS,
                        out / f"sweep_gamma_{gamma:g}.csv")
    sio.write_table(([getattr(r, f) for f in SweepRow.FIELDS] for r in rows), SweepRow.FIELDS, out / "sweep.csv")
    if not args.quiet:
        for r in rows:
            print(f"gamma = {r.gamma:g}: sup c = {r.sup_c:.4e}, blowup = {r.blowup_flag}, "
                  f"dissipation = {r.total_dissipation:.4e}")
    return EXIT_OK


def _verify(cfg: sio.RunConfig, args) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    v = cfg["verify"]
    report = run_verification(v["n"], cfg.spec(), v["ensemble"], cfg.seed)
    write_report(report, out / "verification.json")
    if not args.quiet:
        for check in report["checks"]:
            print(f"{check['name']:32s} {check['fitted_constant']:.6e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssns", description="Slightly supercritical Navier-Stokes laboratory")
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, help="random seed (overrides seed and init.seed)")
    p.add_argument("--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in [("simulate", "integrate the 2D vorticity equation"),
                       ("cascade", "integrate the dyadic cascade model"),
                       ("verify", "fit constants of the shell estimates"),
                       ("sweep", "cascade runs over a list of gamma values")]:
        sub.add_parser(name, help=text)
    r = sub.add_parser("resume", help="continue a simulation from a checkpoint")
    r.add_argument("checkpoint", help="checkpoint file written by simulate")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s %(message)s")
    np.seterr(over="ignore", under="ignore")
    try:
        cfg = _config(args)
        if args.command == "simulate":
            return _simulate(cfg, args)
        if args.command == "resume":
            return _simulate(cfg, args, resume_from=args.checkpoint)
        if args.command == "cascade":
            return _cascade(cfg, args)
        if args.command == "sweep":
            return _sweep(cfg, args)
        return _verify(cfg, args)
    except (sio.ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sio.CheckpointError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
