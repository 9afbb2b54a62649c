"""Run artifacts: trace/timings CSVs, metrics JSON, manifests, plot data.

One run directory holds:

    trace.csv            step, time, per-vehicle q/v/a, per-target rewards
    timings.csv          per-step solver wall time (kept out of trace.csv so
                         equal seeds give byte-identical traces)
    metrics.json         MetricsSummary fields plus run provenance
    config.resolved.yaml the fully resolved scenario
    manifest.json        command, seed and sha256 of every emitted file

Floats in trace.csv are written with ``repr`` (shortest round-trip form), so
reading the file back reproduces the exact binary values.  All schemas carry
``schema_version`` = 1; the CSV header row is part of the schema.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import dump_scenario, load_scenario
from .harness import RunTrace, ScenarioConfig

__all__ = [
    "SCHEMA_VERSION",
    "trace_header",
    "write_trace_csv",
    "write_timings_csv",
    "write_metrics_json",
    "write_run_artifacts",
    "read_trace_csv",
    "write_manifest",
    "frame_times",
    "write_plotdata",
    "LoadedTrace",
    "load_run_dir",
]

SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return repr(float(x))


def trace_header(m: int, n_p: int) -> list[str]:
    cols = ["step", "time"]
    for v in range(m):
        cols += [f"q{v}x", f"q{v}y", f"v{v}x", f"v{v}y", f"a{v}x", f"a{v}y"]
    cols += [f"r_model_{i}" for i in range(n_p)]
    cols += [f"r_eval_{i}" for i in range(n_p)]
    return cols


def write_trace_csv(trace: RunTrace, path: Path) -> None:
    """Deterministic per-step record; controls of the final row are blank."""
    m = trace.positions.shape[1]
    n_p = trace.model_rewards.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace_header(m, n_p))
        for k in range(trace.times.shape[0]):
            row = [str(k), _fmt(trace.times[k])]
            has_u = k < trace.n_steps
            for v in range(m):
                row += [_fmt(trace.positions[k, v, 0]),
                        _fmt(trace.positions[k, v, 1]),
                        _fmt(trace.velocities[k, v, 0]),
                        _fmt(trace.velocities[k, v, 1])]
                row += ([_fmt(trace.controls[k, v, 0]),
                         _fmt(trace.controls[k, v, 1])] if has_u else ["", ""])
            row += [_fmt(x) for x in trace.model_rewards[k]]
            row += [_fmt(x) for x in trace.eval_rewards[k]]
            w.writerow(row)


def write_timings_csv(trace: RunTrace, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "solver_ms"])
        for k in range(trace.n_steps):
            ms = trace.solver_ms[k]
            w.writerow([str(k), "" if math.isnan(ms) else _fmt(ms)])


def write_metrics_json(trace: RunTrace, path: Path) -> None:
    met = trace.metrics
    payload = {
        "schema_version": SCHEMA_VERSION,
        "scenario": trace.config.name,
        "planner": trace.config.planner,
        "seed": trace.config.seed,
        "n_steps": trace.n_steps,
        "dt": trace.config.dt,
        "n_targets": int(trace.model_rewards.shape[1]),
        "failure": trace.failure,
        "r_eq": met.r_eq,
        "r_max": met.r_max,
        "r_avg_peak": met.r_avg_peak,
        "t_avg": met.t_avg,
        "t_max": met.t_max,
        "warmup_steps": met.warmup_steps,
        "n_solves": met.n_solves,
        "r_avg": [None if math.isnan(x) else x for x in met.r_avg],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, seed: int,
                   files: list[Path], config_source: str | None = None) -> Path:
    """Record what a command emitted; every file is listed with its hash."""
    out_dir = Path(out_dir)
    entries = [{"name": p.name, "sha256": sha256_file(p),
                "bytes": p.stat().st_size} for p in sorted(files)]
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "config": config_source,
        "files": entries,
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    return path


def write_run_artifacts(trace: RunTrace, out_dir: str | Path,
                        command: str = "run",
                        config_source: str | None = None) -> list[Path]:
    """Write the full artifact set for one run; returns the emitted paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    p = out_dir / "trace.csv"
    write_trace_csv(trace, p)
    files.append(p)
    p = out_dir / "timings.csv"
    write_timings_csv(trace, p)
    files.append(p)
    p = out_dir / "metrics.json"
    write_metrics_json(trace, p)
    files.append(p)
    p = out_dir / "config.resolved.yaml"
    p.write_text(dump_scenario(trace.config))
    files.append(p)
    files.append(write_manifest(out_dir, command, trace.config.seed, files,
                                config_source))
    return files


@dataclass
class LoadedTrace:
    """Arrays parsed back from a run directory (enough to plot or replay)."""

    config: ScenarioConfig
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    controls: np.ndarray
    model_rewards: np.ndarray
    eval_rewards: np.ndarray


def read_trace_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Columns of a trace.csv keyed by header name (empty cells -> NaN)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols = {name: np.empty(len(rows)) for name in header}
    for i, row in enumerate(rows):
        for name, cell in zip(header, row):
            cols[name][i] = float(cell) if cell else math.nan
    return cols


def load_run_dir(run_dir: str | Path) -> LoadedTrace:
    run_dir = Path(run_dir)
    cfg = load_scenario(run_dir / "config.resolved.yaml")
    cols = read_trace_csv(run_dir / "trace.csv")
    m = cfg.fleet_size
    n_rows = cols["step"].shape[0]
    n_p = sum(1 for k in cols if k.startswith("r_model_"))
    pos = np.empty((n_rows, m, 2))
    vel = np.empty((n_rows, m, 2))
    acc = np.empty((n_rows, m, 2))
    for v in range(m):
        pos[:, v, 0] = cols[f"q{v}x"]
        pos[:, v, 1] = cols[f"q{v}y"]
        vel[:, v, 0] = cols[f"v{v}x"]
        vel[:, v, 1] = cols[f"v{v}y"]
        acc[:, v, 0] = cols[f"a{v}x"]
        acc[:, v, 1] = cols[f"a{v}y"]
    model = np.stack([cols[f"r_model_{i}"] for i in range(n_p)], axis=1)
    ev = np.stack([cols[f"r_eval_{i}"] for i in range(n_p)], axis=1)
    return LoadedTrace(config=cfg, times=cols["time"], positions=pos,
                       velocities=vel, controls=acc[:-1],
                       model_rewards=model, eval_rewards=ev)


# ---------------------------------------------------------------------------
# plot-ready exports


def frame_times(duration: float, requested: list[float] | None = None
                ) -> list[float]:
    """Snapshot times for heatmap frames: the requested ones that fit the
    trace, defaulting to 10/15/20/25 s."""
    wanted = [10.0, 15.0, 20.0, 25.0] if requested is None else list(requested)
    return [t for t in wanted if t <= duration + 1e-9]


def write_plotdata(loaded: LoadedTrace, out_dir: str | Path,
                   times: list[float] | None = None) -> list[Path]:
    """Reward-field frames and path polylines as plain CSV.

    Each frame lists every target with its position at the snapshot time
    (drifting targets move between frames) and both reward readings.  An
    empty trace yields no frames.  Paths hold one polyline row per vehicle
    per step.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = loaded.config
    # trace columns cover scheduled injections too, in injection order
    births = [0.0] * cfg.targets.n_p
    all_targets = list(cfg.targets.targets)
    for inj in sorted(cfg.injections, key=lambda i: i.time):
        all_targets.append(inj.target)
        births.append(inj.time)
    duration = float(loaded.times[-1]) if loaded.times.size else -1.0
    files = []
    for t in frame_times(duration, times):
        k = int(round(t / cfg.dt))
        t_k = float(loaded.times[k])
        path = out_dir / f"frame_t{t:g}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["target", "x", "y", "r_model", "r_eval"])
            for i, tgt in enumerate(all_targets):
                if births[i] > t_k + 1e-9 or i >= loaded.model_rewards.shape[1]:
                    continue  # not yet injected at this snapshot
                p = tgt.position_at(t_k)
                w.writerow([str(i), _fmt(p[0]), _fmt(p[1]),
                            _fmt(loaded.model_rewards[k, i]),
                            _fmt(loaded.eval_rewards[k, i])])
        files.append(path)
    path = out_dir / "paths.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vehicle", "step", "time", "x", "y"])
        for v in range(loaded.positions.shape[1]):
            for k in range(loaded.times.shape[0]):
                w.writerow([str(v), str(k), _fmt(loaded.times[k]),
                            _fmt(loaded.positions[k, v, 0]),
                            _fmt(loaded.positions[k, v, 1])])
    files.append(path)
    return files
