"""Command-line entry point: ``shocktrack {run, convergence, verify}``.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import (
    ConvergenceStudyConfig,
    RunConfig,
    dump_config,
    load_config,
    with_output_dir,
)
from .errors import ConfigError, ShockTrackError, StageFailureError
from .laws import Euler
from .problems import PROBLEMS
from .timeloop import run as run_trajectory

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("shocktrack")


def fmt(v) -> str:
    """17 significant digits, enough for a lossless float round trip."""
    return format(float(v), ".17g")


def build_setup(cfg: RunConfig):
    setup = PROBLEMS[cfg.problem](
        n_elements=cfg.n_elements, p=cfg.p, q=cfg.q, scheme=cfg.scheme,
        n_steps=cfg.n_steps, t_final=cfg.t_final, eps1=cfg.eps1, eps2=cfg.eps2,
    )
    setup.sqp = replace(setup.sqp, lm_gamma=cfg.lm_gamma, mesh_policy=cfg.mesh_policy,
                        max_iters=cfg.max_iters)
    return setup


def component_names(law) -> list[str]:
    if isinstance(law, Euler):
        return ["rho", "rho_v", "rho_E"]
    return ["U"]


def write_snapshot(path: Path, dg, u, x) -> None:
    xs, U = dg.physical_values(u, x, dg.trial.nodes[:, 0])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element", "node", "x"] + component_names(dg.law))
        for e in range(U.shape[0]):
            for j in range(U.shape[1]):
                w.writerow([e, j, fmt(xs[e, j])] + [fmt(c) for c in U[e, j]])


def write_outputs(out: Path, rec, cfg) -> None:
    out.mkdir(parents=True, exist_ok=True)
    snap = out / "snapshots"
    snap.mkdir(exist_ok=True)
    with (snap / "index.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snapshot", "t", "file"])
        for k, (t, u, x) in enumerate(zip(rec.times, rec.states, rec.coords)):
            name = f"snapshot_{k:05d}.csv"
            write_snapshot(snap / name, rec.dg, u, x)
            w.writerow([k, fmt(t), name])
    with (out / "shock_track.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        ns = len(rec.shock_positions[0]) if rec.shock_positions else 0
        w.writerow(["t"] + ["shock_position" if ns == 1 else f"shock_position_{i}" for i in range(ns)])
        for t, s in zip(rec.times, rec.shock_positions):
            w.writerow([fmt(t)] + [fmt(v) for v in s])
    with (out / "sqp_reports.jsonl").open("w") as fh:
        for r in rec.reports:
            fh.write(r.to_json() + "\n")
    (out / "config.cfg").write_text(dump_config(cfg))


def reference_errors(cfg: RunConfig, rec) -> dict:
    """Final-time comparisons against the independent oracles."""
    from . import reference as ref
    from .problems import advection_beta, burgers_initial_left

    dg = rec.dg
    u, x, t = rec.states[-1], rec.coords[-1], rec.times[-1]
    xs = float(rec.shock_positions[-1][0])
    if cfg.problem == "advec1d":
        def initial(z):
            return np.where(z < 0.5, np.sin(np.pi * z), np.sin(np.pi * (z - 1.0)))

        oracle = ref.CharacteristicsReference(advection_beta, initial)
        return {
            "reference": "characteristics (RK4, 10000 steps)",
            "reference_shock_position": oracle.shock_location(t),
            **ref.error_metrics(dg, u, x, lambda q: oracle(q, t), xs, oracle.shock_location(t)),
        }
    if cfg.problem == "burgers1d":
        xref = ref.burgers_shock_oracle(t)
        du0 = lambda z: 4.0 * (z + 1.0)  # noqa: E731

        def exact(q):
            left = ref.burgers_left_state(burgers_initial_left, du0, q, t)
            return np.where(q < xref, left, 0.0)

        m0 = rec.dg.total_mass(rec.states[0])
        m1 = rec.dg.total_mass(u)
        return {
            "reference": "characteristics + Rankine-Hugoniot ODE (RK4, 10000 steps)",
            "reference_shock_position": xref,
            **ref.error_metrics(dg, u, x, exact, xs, xref),
            "mass_drift": float(np.max(np.abs(m1 - m0))),
        }
    if cfg.problem == "shuosher":
        fv = ref.shu_osher_fv_oracle(t_final=t)
        err = abs(xs - fv.shock_position)
        return {
            "reference": "first-order HLL finite volumes, 20000 cells",
            "reference_shock_position": fv.shock_position,
            "shock_location_error": err,
            "relative_to_position": err / abs(fv.shock_position),
            "relative_to_displacement": err / abs(fv.shock_position - (-4.0)),
        }
    return {}


def cmd_run(args) -> int:
    cfg = with_output_dir(load_config(args.config, args.override), args.output_dir)
    out = Path(cfg.output_dir)
    setup = build_setup(cfg)
    t0 = time.perf_counter()
    summary = {"problem": cfg.problem, "seed": cfg.seed}
    status = EXIT_OK
    try:
        rec = run_trajectory(setup, record_every=cfg.record_every)
        summary["completed"] = True
    except StageFailureError as exc:
        rec = getattr(exc, "record", None)
        summary["completed"] = False
        summary["failure"] = str(exc)
        status = EXIT_SOLVER
        print(f"solver failure: {exc}", file=sys.stderr)
    except ShockTrackError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        summary.update(completed=False, failure=str(exc))
        rec, status = None, EXIT_SOLVER
    summary["wall_time_s"] = time.perf_counter() - t0
    if rec is not None:
        write_outputs(out, rec, cfg)
        summary["final_time"] = rec.times[-1]
        summary["shock_positions"] = [float(v) for v in rec.shock_positions[-1]]
        summary["total_sqp_iterations"] = int(rec.iterations.sum())
        summary["stages"] = len(rec.reports)
        summary["all_stages_converged"] = bool(all(r.converged for r in rec.reports))
        if status == EXIT_OK and cfg.reference:
            summary.update(reference_errors(cfg, rec))
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return status


def observed_orders(errors) -> list:
    e = np.asarray(errors, dtype=float)
    return [None] + [float(np.log2(a / b)) for a, b in zip(e[:-1], e[1:])]


def convergence_rows(cfg: ConvergenceStudyConfig, log_progress=None) -> list[dict]:
    """One row per (scheme, n_steps) with observed orders between consecutive rows."""
    from . import reference as ref
    from .problems import advec1d, advection_beta

    def initial(z):
        return np.where(z < 0.5, np.sin(np.pi * z), np.sin(np.pi * (z - 1.0)))

    oracle = ref.CharacteristicsReference(advection_beta, initial, n_steps=cfg.oracle_steps)
    xs_ref = oracle.shock_location(cfg.t_final)
    rows = []
    for scheme in cfg.schemes:
        block = []
        for n in cfg.step_counts:
            setup = advec1d(cfg.n_elements, cfg.p, cfg.q, scheme, n, cfg.t_final, cfg.eps1, cfg.eps2)
            setup.sqp = replace(setup.sqp, lm_gamma=cfg.lm_gamma, mesh_policy=cfg.mesh_policy,
                                max_iters=cfg.max_iters)
            rec = run_trajectory(setup, record_every=n)
            m = ref.error_metrics(rec.dg, rec.states[-1], rec.coords[-1],
                                  lambda q: oracle(q, cfg.t_final),
                                  rec.shock_positions[-1][0], xs_ref)
            block.append(dict(scheme=scheme, n_steps=n, dt=cfg.t_final / n,
                              l1_error=m["l1_solution_error"], shock_error=m["shock_location_error"]))
            if log_progress:
                log_progress(block[-1])
        for r, o1, o2 in zip(block, observed_orders([b["l1_error"] for b in block]),
                             observed_orders([b["shock_error"] for b in block])):
            r["observed_order"] = o1
            r["shock_observed_order"] = o2
        rows.extend(block)
    return rows


def write_convergence_csv(path: Path, rows) -> None:
    cols = ["scheme", "n_steps", "dt", "l1_error", "shock_error", "observed_order", "shock_observed_order"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([
                r[c] if c in ("scheme", "n_steps") else ("" if r[c] is None else fmt(r[c]))
                for c in cols
            ])


def cmd_convergence(args) -> int:
    cfg = with_output_dir(load_config(args.config, args.override, study=True), args.output_dir)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows = convergence_rows(cfg, lambda r: log.info("%s N=%d L1=%.3e shock=%.3e", r["scheme"],
                                                        r["n_steps"], r["l1_error"], r["shock_error"]))
    except ShockTrackError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_convergence_csv(out / "convergence.csv", rows)
    (out / "config.cfg").write_text(dump_config(cfg))
    for r in rows:
        o = r["observed_order"]
        s = r["shock_observed_order"]
        print(f"{r['scheme']}\t{r['n_steps']}\t{r['l1_error']:.6e}\t{r['shock_error']:.6e}\t"
              f"{'' if o is None else f'{o:.3f}'}\t{'' if s is None else f'{s:.3f}'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suite

    checks = run_suite(args.suite, seed=args.seed)
    print("suite\tcheck\tvalue\ttolerance\tresult")
    for c in checks:
        print(c.row())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    from .verify import SUITES

    ap = argparse.ArgumentParser(prog="shocktrack", description="Implicit shock tracking with DIRK time stepping.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "integrate one problem"),
                           ("convergence", "temporal convergence study on advec1d")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--output-dir", default=None)
    p = sub.add_parser("verify", help="run a self-verification suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "convergence":
            return cmd_convergence(args)
        return cmd_verify(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
