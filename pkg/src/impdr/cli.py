"""Command-line front end: run scenarios, sweeps and benchmarks, emit artifacts.

Subcommands
-----------
run        one closed-loop scenario -> trace.csv, timings.csv, metrics.json,
           config.resolved.yaml, manifest.json
sweep      a grid of scenarios -> sweep.csv (one row per cell; cell failures
           are recorded in the status column and the sweep keeps going)
kop        orienteering benchmark at one or more travel budgets -> kop.csv
plotdata   reward-field heatmap frames and path polylines from a finished
           run directory
check-grad finite-difference audit of the planner's adjoint gradients

Exit codes: 0 success, 1 configuration error (bad flags, unreadable or
invalid config / instance files), 2 runtime failure (planner or solver blew
up mid-run, gradient audit failed).  The default output directory is the
current one, or $IMPDR_OUT_DIR when set; every command writes a manifest
listing the files it emitted with their hashes.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, load_scenario
from .harness import (
    KopScenario,
    PLANNERS,
    run_closed_loop,
    run_kop,
    scenario_library,
    scenario_names,
)
from .instances import InstanceFormatError
from .models import FleetLimits, FleetState, RewardVector, SensorParams, VehicleState
from .planner import CostConfig, OcpProblem, _OcpNlp
from .solver import check_gradient
from .tracefile import load_run_dir, write_manifest, write_plotdata, write_run_artifacts

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

OUT_DIR_ENV = "IMPDR_OUT_DIR"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Flag mistakes are configuration errors: report them via exit code 1."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _out_dir(explicit: str | None, default_name: str) -> Path:
    if explicit is not None:
        return Path(explicit)
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / default_name


def _float_list(text: str) -> list[float]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise _UsageError(f"empty list {text!r}")
    try:
        return [float(t) for t in items]
    except ValueError as exc:
        raise _UsageError(f"bad numeric list {text!r}: {exc}") from exc


def _int_list(text: str) -> list[int]:
    vals = _float_list(text)
    out = [int(round(v)) for v in vals]
    if any(abs(v - i) > 1e-9 for v, i in zip(vals, out)):
        raise _UsageError(f"expected integers, got {text!r}")
    return out


# ---------------------------------------------------------------------------
# run


def _load_run_config(args):
    if args.config is not None:
        cfg = load_scenario(args.config)
        source = str(args.config)
    else:
        cfg = scenario_library(args.scenario)
        source = f"scenario:{args.scenario}"
        if isinstance(cfg, KopScenario):
            raise ConfigError(
                f"{args.scenario!r} is an open-loop benchmark; use the kop command")
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.duration_steps is not None:
        kw["duration_steps"] = args.duration_steps
    if args.planner is not None:
        kw["planner"] = args.planner
    if args.multistart is not None:
        kw["multistart"] = args.multistart
    if args.wall_cap_ms is not None:
        kw["wall_cap_ms"] = args.wall_cap_ms
    if kw:
        try:
            cfg = replace(cfg, **kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if cfg.planner.startswith("grasp") and cfg.limits.d_min > 0.0:
        # the grid-walking baseline has no separation model
        cfg = replace(cfg, limits=replace(cfg.limits, d_min=0.0))
    return cfg, source


def cmd_run(args) -> int:
    cfg, source = _load_run_config(args)
    out = _out_dir(args.out, f"run-{cfg.name}-s{cfg.seed}")
    trace = run_closed_loop(cfg)
    files = write_run_artifacts(trace, out, command="run", config_source=source)
    m = trace.metrics
    print(f"scenario {cfg.name}: {trace.n_steps} steps, planner {cfg.planner}")
    print(f"  r_eq {m.r_eq:.3f}  r_max {m.r_max:.3f}  r_avg_peak {m.r_avg_peak:.3f}")
    if m.n_solves:
        print(f"  t_avg {m.t_avg * 1e3:.1f} ms  t_max {m.t_max * 1e3:.1f} ms "
              f"over {m.n_solves} solves")
    print(f"  wrote {len(files)} files to {out}")
    if trace.failure is not None:
        print(f"run failed: {trace.failure}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _sweep_cells(args) -> list[tuple[int, int, int]]:
    # -> (n_p, m, N_s) triples
    if args.kind == "targets":
        targets = args.targets if args.targets is not None else [25, 49, 100]
        fleets = args.fleets if args.fleets is not None else [1, 2, 3, 4, 5, 6]
        if args.horizons is not None:
            raise _UsageError("--horizons applies to the horizon sweep only")
        return [(n_p, m, 20) for n_p in targets for m in fleets]
    horizons = args.horizons if args.horizons is not None else [10, 15, 20, 25, 30]
    fleets = args.fleets if args.fleets is not None else [1, 3, 5]
    if args.targets is not None:
        raise _UsageError("--targets applies to the targets sweep only")
    return [(100, m, n_s) for m in fleets for n_s in horizons]


def cmd_sweep(args) -> int:
    cells = _sweep_cells(args)
    if not cells:
        raise ConfigError("empty sweep: no cells to run")
    out = _out_dir(args.out, f"sweep-{args.kind}")
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    rows = []
    for n_p, m, n_s in cells:
        name = (f"grid-sweep({n_p},{m})" if args.kind == "targets"
                else f"horizon-sweep({m},{n_s})")
        over = {"seed": seed}
        if args.duration_steps is not None:
            over["duration_steps"] = args.duration_steps
        try:
            trace = run_closed_loop(scenario_library(name, **over))
            met = trace.metrics
            status = "ok" if trace.failure is None else trace.failure
            row = (n_p, m, n_s, met.t_avg, met.t_max, met.r_eq, met.r_max, status)
        except Exception as exc:  # cell failure must not kill the sweep
            row = (n_p, m, n_s, math.nan, math.nan, math.nan, math.nan,
                   f"{type(exc).__name__}: {exc}")
        rows.append(row)
        print(f"  n_p={row[0]:<4d} m={row[1]:<2d} N_s={row[2]:<3d} "
              f"t_avg={row[3] * 1e3:8.1f} ms  t_max={row[4] * 1e3:8.1f} ms  "
              f"r_eq={row[5]:8.2f}  r_max={row[6]:8.2f}  {row[7]}", flush=True)
    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_p", "m", "N_s", "t_avg", "t_max", "r_eq", "r_max", "status"])
        for row in rows:
            w.writerow([str(row[0]), str(row[1]), str(row[2]),
                        repr(row[3]), repr(row[4]), repr(row[5]), repr(row[6]),
                        row[7]])
    write_manifest(out, f"sweep-{args.kind}", seed, [path])
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# kop


def cmd_kop(args) -> int:
    budgets = args.budgets
    refs = args.reference
    if refs is not None and len(refs) != len(budgets):
        raise ConfigError(
            f"--reference needs one value per budget ({len(budgets)}), got {len(refs)}")
    out = _out_dir(args.out, "kop")
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    multistart = args.multistart if args.multistart is not None else 10
    header = ["c_max", "score", "t_avg", "endpoint_dev", "starts", "status"]
    if refs is not None:
        header.insert(2, "ref_score")
    print("  ".join(f"{h:>12s}" for h in header))
    rows = []
    code = EXIT_OK
    for i, c_max in enumerate(budgets):
        res = run_kop(c_max, instance=args.instance, multistart=multistart,
                      seed=seed, dt=args.dt)
        t_avg = res.t_solve / max(res.n_starts_run, 1)
        row = [c_max, res.score, t_avg, res.endpoint_deviation,
               res.n_starts_run, res.solver_status]
        if refs is not None:
            row.insert(2, refs[i])
        rows.append(row)
        print("  ".join(f"{v:12.4g}" if isinstance(v, float) else f"{v:>12}"
                        for v in row))
    path = out / "kop.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else str(v) for v in row])
    write_manifest(out, "kop", seed, [path],
                   config_source=None if args.instance is None else str(args.instance))
    print(f"wrote {path} ({len(rows)} rows)")
    return code


# ---------------------------------------------------------------------------
# plotdata


def cmd_plotdata(args) -> int:
    loaded = load_run_dir(args.run_dir)
    out = Path(args.out) if args.out is not None else Path(args.run_dir) / "plots"
    times = args.times
    files = write_plotdata(loaded, out, times)
    files.append(write_manifest(out, "plotdata", loaded.config.seed, files,
                                config_source=str(args.run_dir)))
    n_frames = sum(1 for p in files if p.name.startswith("frame_"))
    print(f"wrote {n_frames} frames + paths to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check-grad


def _random_ocp(rng: np.random.Generator) -> OcpProblem:
    m = int(rng.integers(1, 3))
    n_p = int(rng.integers(1, 5))
    n_s = int(rng.integers(5, 11))
    pts = rng.uniform(-2.0, 2.0, size=(n_p, 2))
    traj = np.broadcast_to(pts[None], (n_s + 1, n_p, 2)).copy()
    vehicles = [VehicleState(rng.uniform(-2, 2, 2), rng.uniform(-0.5, 0.5, 2))
                for _ in range(m)]
    stage = "squared" if rng.random() < 0.5 else "linear"
    if rng.random() < 0.5:
        cost = CostConfig(stage=stage, terminal="stage")
    else:
        cost = CostConfig(stage=stage, terminal="endpoint",
                          endpoint=rng.uniform(-2, 2, (m, 2)))
    return OcpProblem(
        dt=0.2, horizon=n_s,
        fleet=FleetState(vehicles, FleetLimits(v_max=1.5, a_max=2.0, d_min=0.0)),
        rewards=RewardVector(rng.uniform(0.0, 5.0, n_p), 1.0),
        target_traj=traj,
        sensor=SensorParams(cutoff=float(rng.uniform(0.2, 0.6)),
                            degree=float(rng.choice([2.0, 4.0, 8.0]))),
        cost=cost)


def cmd_check_grad(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    worst = 0.0
    for t in range(args.trials):
        ocp = _random_ocp(rng)
        nlp = _OcpNlp(ocp, 2000.0, np.zeros((ocp.m, 2))).nlp()
        x = rng.uniform(-1.0, 1.0, nlp.dim)
        err = check_gradient(nlp, x, step=args.step)
        worst = max(worst, err)
        print(f"  trial {t}: m={ocp.m} n_p={ocp.n_p} N_s={ocp.horizon} "
              f"{ocp.cost.stage}/{ocp.cost.terminal}  rel err {err:.3e}")
    ok = worst < args.tol
    print(f"max relative error {worst:.3e} ({'OK' if ok else 'FAIL'}, tol {args.tol:g})")
    return EXIT_OK if ok else EXIT_RUNTIME


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    p = _Parser(prog="impdr", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one closed-loop scenario")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario config file (YAML)")
    src.add_argument("--scenario",
                     help=f"bundled scenario name: {', '.join(scenario_names())}")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--duration-steps", type=int)
    run.add_argument("--planner", choices=PLANNERS)
    run.add_argument("--multistart", type=int)
    run.add_argument("--wall-cap-ms", type=float,
                     help="per-solve wall clock cap in milliseconds")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run a grid of scenarios")
    sweep.add_argument("kind", choices=("targets", "horizon"),
                       help="targets: (n_p, m) grid; horizon: (m, N_s) grid")
    sweep.add_argument("--targets", type=_int_list,
                       help="comma list of target counts (default 25,49,100)")
    sweep.add_argument("--fleets", type=_int_list,
                       help="comma list of fleet sizes "
                            "(default 1..6 for targets, 1,3,5 for horizon)")
    sweep.add_argument("--horizons", type=_int_list,
                       help="comma list of N_s values (default 10,15,20,25,30)")
    sweep.add_argument("--duration-steps", type=int)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out", help="output directory")
    sweep.set_defaults(func=cmd_sweep)

    kop = sub.add_parser("kop", help="kinematic orienteering benchmark")
    kop.add_argument("--budgets", type=_float_list, required=True,
                     help="comma list of travel budgets C_max in seconds")
    kop.add_argument("--instance",
                     help="instance file path (default: bundled synthetic "
                          "instance, or $IMPDR_KOP_INSTANCE)")
    kop.add_argument("--multistart", type=int, help="starts per budget (default 10)")
    kop.add_argument("--reference", type=_float_list,
                     help="comma list of reference scores, one per budget")
    kop.add_argument("--seed", type=int)
    kop.add_argument("--dt", type=float, default=0.1)
    kop.add_argument("--out", help="output directory")
    kop.set_defaults(func=cmd_kop)

    plot = sub.add_parser("plotdata", help="plot-ready CSV from a run directory")
    plot.add_argument("run_dir", help="directory produced by the run command")
    plot.add_argument("--times", type=_float_list,
                      help="comma list of snapshot times in seconds "
                           "(default 10,15,20,25)")
    plot.add_argument("--out", help="output directory (default RUN_DIR/plots)")
    plot.set_defaults(func=cmd_plotdata)

    grad = sub.add_parser("check-grad",
                          help="audit adjoint gradients against finite differences")
    grad.add_argument("--trials", type=int, default=10)
    grad.add_argument("--seed", type=int)
    grad.add_argument("--step", type=float, default=1e-6)
    grad.add_argument("--tol", type=float, default=1e-5)
    grad.set_defaults(func=cmd_check_grad)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, InstanceFormatError) as exc:
        print(f"impdr {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"impdr {args.command}: missing file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"impdr {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - runtime failure boundary
        print(f"impdr {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
