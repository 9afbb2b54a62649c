"""Declarative scenario configs: YAML round-trip for ScenarioConfig.

A config file either references a bundled scenario,

    scenario: top-compare
    overrides: {duration_steps: 500, seed: 3}

or spells out the whole scenario with nested sections mirroring the
ScenarioConfig fields:

    name: my-run
    planner: impdr
    dt: 0.25
    horizon: 20
    duration_steps: 1200
    sensor: {cutoff: 0.25, degree: 8.0}
    limits: {v_max: 1.0, a_max: 2.0}        # d_min defaults to 2 * cutoff
    fleet: {m: 3}                            # or start_positions: [[x, y], ..]
    targets:
      grid: {width: 10, spacing: 1.0}        # or an explicit points list

Every omitted key falls back to the defaults the bundled grid sweeps use.
``dump_scenario`` writes the fully resolved form (explicit target points), so
a resolved file reloads to an identical scenario.
"""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import numpy as np
import yaml

from .harness import Injection, ScenarioConfig, scenario_library
from .models import (
    DriftParams,
    FleetLimits,
    SensorParams,
    Target,
    TargetSet,
    make_grid_targets,
)
from .solver import SolverConfig

__all__ = [
    "ConfigError",
    "config_to_dict",
    "config_from_dict",
    "load_scenario",
    "dump_scenario",
]


class ConfigError(ValueError):
    """A config file problem, carrying the offending field path."""


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in {where}; allowed: {sorted(allowed)}")


def _drift_to_dict(d: DriftParams) -> dict | None:
    if d == DriftParams():
        return None
    return {"velocity": d.velocity, "amplitude": d.amplitude,
            "angular_velocity": d.angular_velocity}


def _drift_from_dict(obj, where: str) -> DriftParams:
    if obj is None:
        return DriftParams()
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a mapping")
    _require_keys(obj, {"velocity", "amplitude", "angular_velocity"}, where)
    return DriftParams(
        velocity=float(obj.get("velocity", 0.0)),
        amplitude=float(obj.get("amplitude", 0.0)),
        angular_velocity=float(obj.get("angular_velocity", 0.0)))


def _targets_to_list(targets: TargetSet) -> list[dict]:
    out = []
    for t in targets.targets:
        entry: dict = {"x": float(t.base[0]), "y": float(t.base[1])}
        for axis, d in (("drift_x", t.drift_x), ("drift_y", t.drift_y)):
            dd = _drift_to_dict(d)
            if dd is not None:
                entry[axis] = dd
        out.append(entry)
    return out


def _targets_from_section(section, where: str = "targets") -> TargetSet:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping with 'grid' or 'points'")
    _require_keys(section, {"grid", "points"}, where)
    if ("grid" in section) == ("points" in section):
        raise ConfigError(f"{where} needs exactly one of 'grid' or 'points'")
    if "grid" in section:
        g = section["grid"]
        _require_keys(g, {"width", "height", "spacing", "origin",
                          "drift_x", "drift_y"}, f"{where}.grid")
        if "width" not in g:
            raise ConfigError(f"{where}.grid is missing 'width'")
        origin = g.get("origin", (0.0, 0.0))
        return make_grid_targets(
            int(g["width"]), float(g.get("spacing", 1.0)),
            origin=(float(origin[0]), float(origin[1])),
            height=int(g["height"]) if "height" in g else None,
            drift_x=_drift_from_dict(g.get("drift_x"), f"{where}.grid.drift_x"),
            drift_y=_drift_from_dict(g.get("drift_y"), f"{where}.grid.drift_y"))
    pts = section["points"]
    if not isinstance(pts, list) or not pts:
        raise ConfigError(f"{where}.points must be a non-empty list")
    targets = []
    for i, p in enumerate(pts):
        _require_keys(p, {"x", "y", "drift_x", "drift_y"}, f"{where}.points[{i}]")
        if "x" not in p or "y" not in p:
            raise ConfigError(f"{where}.points[{i}] needs 'x' and 'y'")
        targets.append(Target(
            (float(p["x"]), float(p["y"])),
            drift_x=_drift_from_dict(p.get("drift_x"), f"{where}.points[{i}].drift_x"),
            drift_y=_drift_from_dict(p.get("drift_y"), f"{where}.points[{i}].drift_y")))
    return TargetSet(targets)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Fully resolved, YAML-safe mirror of a scenario config."""
    solver = asdict(cfg.solver)
    out = {
        "name": cfg.name,
        "planner": cfg.planner,
        "seed": cfg.seed,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "duration_steps": cfg.duration_steps,
        "k_gain": cfg.k_gain,
        "r_init": cfg.r_init,
        "eval_radius": cfg.eval_radius,
        "warmup_frac": cfg.warmup_frac,
        "multistart": cfg.multistart,
        "control_hold_steps": cfg.control_hold_steps,
        "wall_cap_ms": cfg.wall_cap_ms,
        "sensor": {"cutoff": cfg.sensor.cutoff, "degree": cfg.sensor.degree},
        "route_sensor": (None if cfg.route_sensor is None else
                         {"cutoff": cfg.route_sensor.cutoff,
                          "degree": cfg.route_sensor.degree}),
        "limits": {"v_max": cfg.limits.v_max, "a_max": cfg.limits.a_max,
                   "d_min": cfg.limits.d_min},
        "fleet": {
            "m": cfg.fleet_size,
            "start_positions": (None if cfg.start_positions is None
                                else [[float(x), float(y)]
                                      for x, y in cfg.start_positions]),
        },
        "targets": {"points": _targets_to_list(cfg.targets)},
        "grasp": {"iterations": cfg.grasp_iterations, "alpha": cfg.grasp_alpha,
                  "horizon": cfg.grasp_horizon,
                  "replan_every": cfg.grasp_replan_every},
        "solver": solver,
        "injections": [
            {"time": inj.time, "r_init": inj.r_init,
             "x": float(inj.target.base[0]), "y": float(inj.target.base[1]),
             **({"drift_x": _drift_to_dict(inj.target.drift_x)}
                if _drift_to_dict(inj.target.drift_x) else {}),
             **({"drift_y": _drift_to_dict(inj.target.drift_y)}
                if _drift_to_dict(inj.target.drift_y) else {})}
            for inj in cfg.injections
        ],
    }
    return out


_TOP_KEYS = {
    "name", "planner", "seed", "dt", "horizon", "duration_steps", "k_gain",
    "r_init", "eval_radius", "warmup_frac", "multistart",
    "control_hold_steps", "wall_cap_ms", "sensor", "route_sensor", "limits",
    "fleet", "targets", "grasp", "solver", "injections",
}


def config_from_dict(obj: dict) -> ScenarioConfig:
    """Build a scenario from a parsed config mapping (inverse of the dump)."""
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a mapping")
    if "scenario" in obj:
        _require_keys(obj, {"scenario", "overrides"}, "config")
        overrides = obj.get("overrides") or {}
        if not isinstance(overrides, dict):
            raise ConfigError("overrides must be a mapping")
        allowed = (_TOP_KEYS | {"m"}) - {"sensor", "limits", "fleet",
                                         "targets", "grasp", "solver",
                                         "injections"}
        _require_keys(overrides, allowed, "overrides")
        try:
            cfg = scenario_library(str(obj["scenario"]), **overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(cfg, ScenarioConfig):
            raise ConfigError(
                "the kop(...) scenario is a benchmark, not a closed-loop run; "
                "use the kop command instead")
        return cfg
    _require_keys(obj, _TOP_KEYS, "config")
    if "targets" not in obj:
        raise ConfigError("config is missing the 'targets' section")
    targets = _targets_from_section(obj["targets"])

    sensor_d = obj.get("sensor", {})
    _require_keys(sensor_d, {"cutoff", "degree"}, "sensor")
    sensor = SensorParams(float(sensor_d.get("cutoff", 0.25)),
                          float(sensor_d.get("degree", 8.0)))

    route_d = obj.get("route_sensor")
    route_sensor = None
    if route_d is not None:
        _require_keys(route_d, {"cutoff", "degree"}, "route_sensor")
        if "cutoff" not in route_d or "degree" not in route_d:
            raise ConfigError("route_sensor needs both cutoff and degree")
        route_sensor = SensorParams(float(route_d["cutoff"]),
                                    float(route_d["degree"]))

    limits_d = obj.get("limits", {})
    _require_keys(limits_d, {"v_max", "a_max", "d_min"}, "limits")
    limits = FleetLimits(
        v_max=float(limits_d.get("v_max", 1.0)),
        a_max=float(limits_d.get("a_max", 2.0)),
        # the planner's pairwise clearance defaults to one sensor diameter
        d_min=float(limits_d["d_min"]) if "d_min" in limits_d
        else 2.0 * sensor.cutoff)

    fleet_d = obj.get("fleet", {})
    _require_keys(fleet_d, {"m", "start_positions"}, "fleet")
    starts = fleet_d.get("start_positions")
    if starts is not None:
        starts = np.asarray(starts, dtype=float).reshape(-1, 2)

    grasp_d = obj.get("grasp", {})
    _require_keys(grasp_d, {"iterations", "alpha", "horizon", "replan_every"},
                  "grasp")

    solver_d = dict(obj.get("solver", {}))
    allowed = {f.name for f in SolverConfig.__dataclass_fields__.values()}
    _require_keys(solver_d, allowed, "solver")
    solver_defaults = {
        "convergence_tol": 1e-4, "max_inner_iters": 60,
        "max_outer_iters": 2, "progress_rtol": 1e-6}
    solver = SolverConfig(**{**solver_defaults, **solver_d})

    injections = []
    for i, inj in enumerate(obj.get("injections") or []):
        _require_keys(inj, {"time", "r_init", "x", "y", "drift_x", "drift_y"},
                      f"injections[{i}]")
        for key in ("time", "x", "y"):
            if key not in inj:
                raise ConfigError(f"injections[{i}] needs '{key}'")
        injections.append(Injection(
            time=float(inj["time"]),
            target=Target(
                (float(inj["x"]), float(inj["y"])),
                drift_x=_drift_from_dict(inj.get("drift_x"),
                                         f"injections[{i}].drift_x"),
                drift_y=_drift_from_dict(inj.get("drift_y"),
                                         f"injections[{i}].drift_y")),
            r_init=float(inj.get("r_init", 0.0))))

    try:
        return ScenarioConfig(
            targets=targets,
            sensor=sensor,
            limits=limits,
            name=str(obj.get("name", "custom")),
            k_gain=float(obj.get("k_gain", 1.0)),
            r_init=float(obj.get("r_init", 10.0)),
            eval_radius=(None if obj.get("eval_radius") is None
                         else float(obj["eval_radius"])),
            dt=float(obj.get("dt", 0.25)),
            horizon=int(obj.get("horizon", 20)),
            duration_steps=int(obj.get("duration_steps", 1200)),
            planner=str(obj.get("planner", "impdr")),
            start_positions=starts,
            m=int(fleet_d.get("m", 3)),
            multistart=int(obj.get("multistart", 1)),
            seed=int(obj.get("seed", 0)),
            control_hold_steps=int(obj.get("control_hold_steps", 1)),
            warmup_frac=float(obj.get("warmup_frac", 0.1)),
            solver=solver,
            wall_cap_ms=(None if obj.get("wall_cap_ms") is None
                         else float(obj["wall_cap_ms"])),
            route_sensor=route_sensor,
            grasp_iterations=int(grasp_d.get("iterations", 5)),
            grasp_alpha=float(grasp_d.get("alpha", 0.3)),
            grasp_horizon=(None if grasp_d.get("horizon") is None
                           else float(grasp_d["horizon"])),
            grasp_replan_every=(None if grasp_d.get("replan_every") is None
                                else float(grasp_d["replan_every"])),
            injections=tuple(injections),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Parse a YAML scenario file; errors carry the file path and field."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    try:
        return config_from_dict(obj)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_scenario(cfg: ScenarioConfig) -> str:
    """Resolved YAML text for a scenario (stable key order)."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True,
                          default_flow_style=False)
