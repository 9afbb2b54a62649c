"""Receding-horizon optimal control of the monitoring fleet.

Each planning step transcribes the horizon problem into a nonlinear program
over the acceleration sequence only (single shooting): states are recovered
by rolling the dynamics forward, and the gradient of the horizon cost comes
from one adjoint sweep (see :mod:`impdr.kernels`).  The NLP is

    min_u  sum_k f_l(x_k) + f_m(x_N) + k_R * sum_k ||u_k - u_{k-1}||^2
    s.t.   |u| <= a_max            (box, satisfied exactly by projection)
           ||v_k|| <= v_max        (one smooth inequality per vehicle/step)
           ||q_i - q_j|| >= d_min  (one per vehicle pair/step)

with f_l = sum_i r_i^2 for monitoring or sum_i r_i for the orienteering
mode, and f_m either repeating the stage term or a soft endpoint penalty.
The planner's reward rollout replaces the hard coverage saturation
min(1, c) with a C^1 soft version so the whole cost is differentiable; the
simulator keeps the hard form.

``plan_step`` supports warm starting (shift the previous plan one interval,
repeat the last control) and multistart: extra starts perturb the initial
rewards with truncated Gaussian noise, optionally from caller-supplied seed
trajectories, and the feasible candidate with the lowest cost under the
*hard* saturation wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .models import (FleetState, RewardVector, SensorParams, VehicleState,
                     pairwise_min_distance)
from .solver import NlpProblem, SolverConfig, SolverReport, minimize

__all__ = [
    "CostConfig",
    "OcpProblem",
    "ControlPlan",
    "PlannerConfig",
    "rollout",
    "ocp_cost",
    "cost_and_gradient",
    "shift_warm_start",
    "chase_seed_controls",
    "plan_step",
    "configure_kop",
    "kop_seed_controls",
    "collected_node_score",
]

STAGE_MODES = {"squared": 0, "linear": 1}
TERMINAL_MODES = {"stage": 0, "endpoint": 1}


@dataclass(frozen=True)
class CostConfig:
    stage: str = "squared"
    terminal: str = "stage"
    endpoint: np.ndarray | None = None  # (m, 2) goals when terminal == "endpoint"
    endpoint_weight: float = 1e3
    input_change_weight: float = 1e-3  # k_R

    def __post_init__(self):
        if self.stage not in STAGE_MODES:
            raise ValueError(f"unknown stage cost {self.stage!r}")
        if self.terminal not in TERMINAL_MODES:
            raise ValueError(f"unknown terminal cost {self.terminal!r}")
        if self.terminal == "endpoint" and self.endpoint is None:
            raise ValueError("endpoint terminal requires endpoint positions")


@dataclass
class OcpProblem:
    """One horizon problem, fully specified by data (no solver state)."""

    dt: float
    horizon: int  # N_s
    fleet: FleetState
    rewards: RewardVector
    target_traj: np.ndarray  # (N_s + 1, n_p, 2)
    sensor: SensorParams
    cost: CostConfig = field(default_factory=CostConfig)

    def __post_init__(self):
        self.target_traj = np.asarray(self.target_traj, dtype=float)
        expect = (self.horizon + 1, self.rewards.values.size, 2)
        if self.target_traj.shape != expect:
            raise ValueError(
                f"target trajectory shape {self.target_traj.shape}, expected {expect}")
        if self.dt <= 0 or self.horizon < 1:
            raise ValueError("need dt > 0 and horizon >= 1")

    @property
    def m(self) -> int:
        return self.fleet.m

    @property
    def n_p(self) -> int:
        return self.rewards.values.size

    def control_shape(self) -> tuple[int, int, int]:
        return (self.horizon, self.m, 2)


@dataclass
class ControlPlan:
    accelerations: np.ndarray  # (N_s, m, 2)
    positions: np.ndarray  # (N_s + 1, m, 2)
    velocities: np.ndarray  # (N_s + 1, m, 2)
    rewards: np.ndarray  # (N_s + 1, n_p), soft-saturation prediction
    cost: float  # horizon cost under the hard saturation

    def first_control(self) -> np.ndarray:
        return self.accelerations[0]


@dataclass
class PlannerConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    multistart: int = 1
    reward_noise_sigma: float = 0.1  # truncated at zero for extra starts
    seed: int = 0
    saturation_sharpness: float = 2000.0
    # first solve at a gentle sharpness, then polish at the configured one;
    # the stiff saturation wall otherwise stalls quasi-Newton line searches
    continuation_sharpness: float = 50.0
    # optional heavy-tailed surrogate sensor for a routing pre-solve on each
    # start.  Sharp sensors (high degree, small cutoff) have numerically zero
    # gradient beyond a couple of cutoffs, so plans park at whatever target
    # they start near; the surrogate restores global pull and the final solve
    # plus every reported cost still use the true sensor.
    route_sensor: SensorParams | None = None
    velocity_repair: bool = True  # nudge returned controls inside the speed cap


def _vehicle_pairs(m: int) -> np.ndarray:
    pairs = [(i, j) for i in range(m - 1) for j in range(i + 1, m)]
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def rollout(ocp: OcpProblem, controls: np.ndarray, sharpness: float = 2000.0):
    """Forward-simulate the horizon; sharpness <= 0 uses the hard saturation."""
    u = np.asarray(controls, dtype=float).reshape(ocp.control_shape())
    return kernels.rollout_forward(
        ocp.fleet.positions(), ocp.fleet.velocities(), ocp.rewards.values, u,
        ocp.target_traj, ocp.dt, ocp.rewards.gain_rate,
        ocp.sensor.cutoff, ocp.sensor.degree, sharpness)


def ocp_cost(ocp: OcpProblem, rewards: np.ndarray, positions: np.ndarray,
             controls: np.ndarray, u_prev: np.ndarray | None = None) -> float:
    """Horizon cost of already-rolled-out trajectories."""
    r = rewards
    c = ocp.cost
    if c.stage == "squared":
        total = float((r[:-1] ** 2).sum())
    else:
        total = float(r[:-1].sum())
    if c.terminal == "stage":
        total += float((r[-1] ** 2).sum() if c.stage == "squared" else r[-1].sum())
    else:
        d = positions[-1] - np.asarray(c.endpoint, dtype=float).reshape(ocp.m, 2)
        total += c.endpoint_weight * float((d * d).sum())
    if c.input_change_weight > 0.0:
        up = np.zeros((ocp.m, 2)) if u_prev is None else u_prev
        du = np.diff(np.concatenate([up[None], controls], axis=0), axis=0)
        total += c.input_change_weight * float((du * du).sum())
    return total


def cost_and_gradient(ocp: OcpProblem, controls: np.ndarray,
                      u_prev: np.ndarray | None = None,
                      sharpness: float = 2000.0):
    """Smooth horizon cost and its exact gradient wrt the controls."""
    u = np.asarray(controls, dtype=float).reshape(ocp.control_shape())
    up = np.zeros((ocp.m, 2)) if u_prev is None else np.asarray(u_prev, float).reshape(ocp.m, 2)
    q, v, r, cov, sat = rollout(ocp, u, sharpness)
    val = ocp_cost(ocp, r, q, u, up)
    c = ocp.cost
    endpoint = (np.zeros((ocp.m, 2)) if c.endpoint is None
                else np.asarray(c.endpoint, float).reshape(ocp.m, 2))
    zero_wv = np.zeros((ocp.horizon + 1, ocp.m))
    zero_wd = np.zeros((ocp.horizon + 1, 0))
    no_pairs = np.zeros((0, 2), dtype=np.int64)
    grad = kernels.rollout_backward(
        q, v, r, cov, sat, u, ocp.target_traj, ocp.dt, ocp.rewards.gain_rate,
        ocp.sensor.cutoff, ocp.sensor.degree, sharpness,
        True, STAGE_MODES[c.stage], TERMINAL_MODES[c.terminal],
        endpoint, c.endpoint_weight, c.input_change_weight, up,
        zero_wv, 0.0, zero_wd, no_pairs, 1.0)
    return val, grad


class _OcpNlp:
    """NlpProblem wiring for one horizon problem, with rollout caching."""

    def __init__(self, ocp: OcpProblem, sharpness: float, u_prev: np.ndarray):
        self.ocp = ocp
        self.sharpness = sharpness
        self.u_prev = u_prev
        self.q0 = ocp.fleet.positions()
        self.v0 = ocp.fleet.velocities()
        self.pairs = _vehicle_pairs(ocp.m) if ocp.fleet.limits.d_min > 0 else \
            np.zeros((0, 2), dtype=np.int64)
        self.endpoint = (np.zeros((ocp.m, 2)) if ocp.cost.endpoint is None
                         else np.asarray(ocp.cost.endpoint, float).reshape(ocp.m, 2))
        self.stage_mode = STAGE_MODES[ocp.cost.stage]
        self.terminal_mode = TERMINAL_MODES[ocp.cost.terminal]
        self._key = None
        self._fwd = None

    def _forward(self, x: np.ndarray):
        key = x.tobytes()
        if key != self._key:
            u = x.reshape(self.ocp.control_shape())
            self._fwd = kernels.rollout_forward(
                self.q0, self.v0,
                self.ocp.rewards.values, u, self.ocp.target_traj, self.ocp.dt,
                self.ocp.rewards.gain_rate, self.ocp.sensor.cutoff,
                self.ocp.sensor.degree, self.sharpness)
            self._key = key
        return self._fwd

    def _backward(self, x, include_cost, w_vel, w_dist):
        ocp = self.ocp
        q, v, r, cov, sat = self._forward(x)
        u = x.reshape(ocp.control_shape())
        return kernels.rollout_backward(
            q, v, r, cov, sat, u, ocp.target_traj, ocp.dt,
            ocp.rewards.gain_rate, ocp.sensor.cutoff, ocp.sensor.degree,
            self.sharpness, include_cost, STAGE_MODES[ocp.cost.stage],
            TERMINAL_MODES[ocp.cost.terminal], self.endpoint,
            ocp.cost.endpoint_weight, ocp.cost.input_change_weight,
            self.u_prev, w_vel, ocp.fleet.limits.v_max,
            w_dist, self.pairs, max(ocp.fleet.limits.d_min, 1.0e-30))

    def objective_value(self, x):
        q, v, r, cov, sat = self._forward(x)
        u = x.reshape(self.ocp.control_shape())
        return kernels.horizon_cost(
            r, q, u, self.u_prev, self.stage_mode, self.terminal_mode,
            self.endpoint, self.ocp.cost.endpoint_weight,
            self.ocp.cost.input_change_weight)

    def objective(self, x):
        val = self.objective_value(x)
        n1 = self.ocp.horizon + 1
        grad = self._backward(x, True,
                              np.zeros((n1, self.ocp.m)),
                              np.zeros((n1, self.pairs.shape[0])))
        return val, grad.ravel()

    # constraint block API -------------------------------------------------
    def values(self, x):
        ocp = self.ocp
        q, v, r, cov, sat = self._forward(x)
        v_max = ocp.fleet.limits.v_max
        sp2 = (v[1:] ** 2).sum(axis=2)  # (N, m), step 0 is fixed
        vel = ((sp2 - v_max * v_max) / (2.0 * v_max)).ravel()
        if self.pairs.shape[0]:
            d_min = ocp.fleet.limits.d_min
            qi = q[1:, self.pairs[:, 0], :]
            qj = q[1:, self.pairs[:, 1], :]
            d2 = ((qi - qj) ** 2).sum(axis=2)
            dist = ((d_min * d_min - d2) / (2.0 * d_min)).ravel()
            return np.concatenate([vel, dist])
        return vel

    def _split_weights(self, w):
        n, m = self.ocp.horizon, self.ocp.m
        n_pairs = self.pairs.shape[0]
        w_vel = np.zeros((n + 1, m))
        w_vel[1:] = w[: n * m].reshape(n, m)
        w_dist = np.zeros((n + 1, n_pairs))
        if n_pairs:
            w_dist[1:] = w[n * m:].reshape(n, n_pairs)
        return w_vel, w_dist

    def weighted_grad(self, x, w):
        w_vel, w_dist = self._split_weights(w)
        return self._backward(x, False, w_vel, w_dist).ravel()

    def fused_grad(self, x, weights):
        # one adjoint sweep for objective plus weighted constraints
        w_vel, w_dist = self._split_weights(weights[0])
        return self._backward(x, True, w_vel, w_dist).ravel()

    def nlp(self) -> NlpProblem:
        dim = int(np.prod(self.ocp.control_shape()))
        a_max = self.ocp.fleet.limits.a_max
        return NlpProblem(
            dim=dim,
            objective=self.objective,
            lower=np.full(dim, -a_max),
            upper=np.full(dim, a_max),
            ineq_constraints=(self,),
            objective_value=self.objective_value,
            fused_grad=self.fused_grad,
        )


def shift_warm_start(plan: ControlPlan) -> np.ndarray:
    """Previous plan advanced one interval: drop step 0, repeat the last."""
    u = plan.accelerations
    return np.concatenate([u[1:], u[-1:]], axis=0)


def chase_seed_controls(ocp: OcpProblem, cruise_frac: float = 0.95) -> np.ndarray:
    """Exploratory start that runs each vehicle at the most valuable target.

    Value is the stage-cost weight of a target over the time to reach it, so
    a far target with twice the reward of a near one still wins under the
    squared stage cost.  Vehicles claim targets greedily (no two chase the
    same one while others remain), pass through at cruise speed and retarget
    on arrival.  The output is a box-feasible control array meant as a
    multistart candidate: warm-started descent cannot leave the basin it is
    in, and sharp sensors leave no gradient toward far-off neglected
    targets, so this seed plants a candidate plan that goes and gets them.
    """
    n, m = ocp.horizon, ocp.m
    dt = ocp.dt
    lim = ocp.fleet.limits
    cruise = cruise_frac * lim.v_max
    pts = ocp.target_traj[0]
    w = ocp.rewards.values.astype(float).copy()
    if ocp.cost.stage == "squared":
        w = w * w
    q = ocp.fleet.positions().copy()
    v = ocp.fleet.velocities().copy()
    claimed = np.zeros(pts.shape[0], dtype=bool)
    goal = np.full(m, -1, dtype=int)
    switch = max(ocp.sensor.cutoff, cruise * dt)
    u = np.zeros((n, m, 2))

    def _pick(j: int) -> int:
        pool = ~claimed if (~claimed).any() else np.ones(pts.shape[0], bool)
        d = np.hypot(pts[:, 0] - q[j, 0], pts[:, 1] - q[j, 1])
        t_go = np.array([max(_leg_time(di, lim.v_max, lim.a_max), dt) for di in d])
        rate = np.where(pool, w / t_go, -1.0)
        return int(np.argmax(rate))

    for k in range(n):
        for j in range(m):
            if goal[j] >= 0 and \
                    float(np.hypot(*(pts[goal[j]] - q[j]))) <= switch:
                w[goal[j]] = 0.0  # consumed within this imagined plan
                goal[j] = -1
            if goal[j] < 0:
                goal[j] = _pick(j)
                claimed[goal[j]] = True
            dvec = pts[goal[j]] - q[j]
            dist = float(np.hypot(dvec[0], dvec[1]))
            vdes = dvec / dist * cruise if dist > 1e-9 else np.zeros(2)
            u[k, j] = np.clip((vdes - v[j]) / dt, -lim.a_max, lim.a_max)
        q = q + v * dt + 0.5 * u[k] * dt * dt
        v = v + u[k] * dt
    return u


def _repair_velocity(ocp: OcpProblem, u: np.ndarray) -> np.ndarray:
    """Scale accelerations forward in time so no step exceeds the speed cap.

    Converged plans already satisfy the cap to solver tolerance; this guards
    iteration-capped ones so the executed control never violates it.
    """
    v_max = ocp.fleet.limits.v_max
    dt = ocp.dt
    out = u.copy()
    v = ocp.fleet.velocities().copy()
    for k in range(u.shape[0]):
        for j in range(ocp.m):
            a = out[k, j]
            vn = v[j] + a * dt
            n2 = float(vn @ vn)
            if n2 > v_max * v_max:
                c2 = float((a * dt) @ (a * dt))
                c1 = 2.0 * float(v[j] @ (a * dt))
                c0 = float(v[j] @ v[j]) - v_max * v_max
                if c2 > 0.0 and c0 <= 0.0:
                    beta = (-c1 + math.sqrt(max(0.0, c1 * c1 - 4.0 * c2 * c0))) / (2.0 * c2)
                    beta = min(1.0, max(0.0, beta))
                elif c2 > 0.0:
                    beta = min(1.0, max(0.0, -c1 / (2.0 * c2)))
                else:
                    beta = 0.0
                out[k, j] = a * beta
            v[j] = v[j] + out[k, j] * dt
    return out


def _finish_plan(ocp: OcpProblem, u: np.ndarray, u_prev: np.ndarray,
                 sharpness: float) -> ControlPlan:
    q, v, r, cov, sat = rollout(ocp, u, sharpness)
    _, _, r_hard, _, _ = rollout(ocp, u, -1.0)
    true_cost = ocp_cost(ocp, r_hard, q, u, u_prev)
    return ControlPlan(accelerations=u, positions=q, velocities=v,
                       rewards=r, cost=true_cost)


def _first_step_ok(ocp: OcpProblem, plan: ControlPlan) -> bool:
    """Whether applying the first control keeps the fleet within its limits.

    Only step 1 matters for the executed trajectory; later steps get
    re-planned before they are applied.
    """
    lim = ocp.fleet.limits
    v1 = plan.velocities[1]
    if float(np.max(np.hypot(v1[:, 0], v1[:, 1]))) > lim.v_max + 1e-9:
        return False
    if lim.d_min > 0.0 and ocp.m >= 2:
        d, _ = pairwise_min_distance(plan.positions[1])
        if d < lim.d_min:
            return False
    return True


def plan_step(ocp: OcpProblem, config: PlannerConfig | None = None,
              warm: ControlPlan | None = None,
              u_prev: np.ndarray | None = None,
              starts: list[np.ndarray] | None = None
              ) -> tuple[ControlPlan, SolverReport]:
    """Solve one receding-horizon step.

    ``warm`` supplies last step's plan (shifted for the initial guess);
    ``u_prev`` is the control actually applied on the previous interval and
    anchors the first input-change penalty term.  ``starts`` optionally
    overrides the initial guess per multistart; remaining starts reuse the
    base guess.  Returns the best feasible candidate by hard-saturation cost
    together with its solver report.
    """
    cfg = config or PlannerConfig()
    shape = ocp.control_shape()
    up = np.zeros((ocp.m, 2)) if u_prev is None else \
        np.asarray(u_prev, dtype=float).reshape(ocp.m, 2)
    base = shift_warm_start(warm) if warm is not None else np.zeros(shape)
    n_starts = max(1, cfg.multistart)

    best = None  # (feasible_rank, cost, order) -> (plan, report)
    rng = np.random.default_rng(cfg.seed)
    for s in range(n_starts):
        noise = rng.normal(0.0, cfg.reward_noise_sigma, size=ocp.n_p)
        if s == 0:
            ocp_s = ocp
        else:
            perturbed = RewardVector(
                np.maximum(0.0, ocp.rewards.values + noise),
                ocp.rewards.gain_rate)
            ocp_s = replace(ocp, rewards=perturbed)
        x0 = np.asarray(starts[s] if starts is not None and s < len(starts) else base,
                        dtype=float).ravel()
        pre_ocp = ocp_s if cfg.route_sensor is None else \
            replace(ocp_s, sensor=cfg.route_sensor)
        # a shifted previous plan already sits near the stiff optimum, so
        # the loose-sharpness pre-solve only helps cold or perturbed starts
        if warm is None and cfg.continuation_sharpness > 0 and \
                cfg.continuation_sharpness < cfg.saturation_sharpness:
            pre = _OcpNlp(pre_ocp, cfg.continuation_sharpness, up)
            x0 = minimize(pre.nlp(), x0, cfg.solver).x
        if cfg.route_sensor is not None:
            pre = _OcpNlp(pre_ocp, cfg.saturation_sharpness, up)
            x0 = minimize(pre.nlp(), x0, cfg.solver).x
        wiring = _OcpNlp(ocp_s, cfg.saturation_sharpness, up)
        report = minimize(wiring.nlp(), x0, cfg.solver)
        u = report.x.reshape(shape)
        if cfg.velocity_repair:
            u = _repair_velocity(ocp, u)
        plan = _finish_plan(ocp, u, up, cfg.saturation_sharpness)
        feasible = report.max_violation <= cfg.solver.feasibility_tol
        key = (0 if feasible else 1,
               plan.cost if feasible else report.max_violation, s)
        if best is None or key < best[0]:
            best = (key, plan, report)

    plan, report = best[1], best[2]
    if not _first_step_ok(ocp, plan):
        # rare under tight iteration budgets: the step about to be applied
        # breaks a fleet limit, so buy this one solve a bigger budget
        strong = replace(cfg.solver,
                         max_outer_iters=max(8, cfg.solver.max_outer_iters),
                         max_inner_iters=max(200, cfg.solver.max_inner_iters))
        wiring = _OcpNlp(ocp, cfg.saturation_sharpness, up)
        retry = minimize(wiring.nlp(), plan.accelerations.ravel(), strong)
        u = retry.x.reshape(shape)
        if cfg.velocity_repair:
            u = _repair_velocity(ocp, u)
        replanned = _finish_plan(ocp, u, up, cfg.saturation_sharpness)
        if _first_step_ok(ocp, replanned) or \
                retry.max_violation < report.max_violation:
            plan, report = replanned, retry
    return plan, report


# ---------------------------------------------------------------------------
# kinematic orienteering mode


def configure_kop(instance, c_max: float, dt: float = 0.1,
                  cutoff: float = 0.05, degree: float = 2.0,
                  v_max: float = 3.0, a_max: float = 1.5,
                  endpoint_weight: float = 1e3) -> OcpProblem:
    """Open-loop orienteering problem over a full budget horizon.

    Node scores become static rewards (no growth), the stage cost turns
    linear so the run minimises the integral of uncollected score, and the
    terminal cost softly pins the single vehicle to the instance end point.
    The horizon is round(c_max / dt) steps, so the executed trajectory lasts
    at most c_max by construction.
    """
    from .models import FleetLimits  # local import to keep module load light

    n_steps = int(round(c_max / dt))
    if n_steps < 1:
        raise ValueError("budget shorter than one control interval")
    points = np.asarray(instance.points, dtype=float)
    scores = np.asarray(instance.scores, dtype=float)
    fleet = FleetState(
        vehicles=[VehicleState(points[0], np.zeros(2))],
        limits=FleetLimits(v_max=v_max, a_max=a_max, d_min=0.0))
    traj = np.broadcast_to(points[None], (n_steps + 1,) + points.shape).copy()
    cost = CostConfig(stage="linear", terminal="endpoint",
                      endpoint=points[1].reshape(1, 2),
                      endpoint_weight=endpoint_weight)
    return OcpProblem(dt=dt, horizon=n_steps, fleet=fleet,
                      rewards=RewardVector(scores, 0.0),
                      target_traj=traj, sensor=SensorParams(cutoff, degree),
                      cost=cost)


def _leg_time(d: float, v_max: float, a_max: float) -> float:
    # through-pass estimate: speed a vehicle can sustain over a leg of this
    # length while still being able to turn at its ends
    if d <= 0.0:
        return 0.0
    v_eff = min(v_max, math.sqrt(a_max * d))
    return d / max(v_eff, 1e-9)


def _tour_length(start, end, points, order: list[int]) -> float:
    pts = [start] + [points[i] for i in order] + [end]
    return sum(float(np.hypot(*(pts[j + 1] - pts[j])))
               for j in range(len(pts) - 1))


def _two_opt(start, end, points, order: list[int]) -> list[int]:
    """Classic segment-reversal descent on the waypoint order."""
    order = list(order)
    improved = True
    while improved:
        improved = False
        for i in range(len(order) - 1):
            for j in range(i + 1, len(order)):
                trial = order[:i] + order[i:j + 1][::-1] + order[j + 1:]
                if _tour_length(start, end, points, trial) < \
                        _tour_length(start, end, points, order) - 1e-9:
                    order = trial
                    improved = True
    return order


def kop_seed_controls(instance, c_max: float, dt: float, v_max: float,
                      a_max: float, count: int, seed: int = 0) -> list[np.ndarray]:
    """Kinematically plausible initial guesses for the orienteering NLP.

    Each seed greedily packs nodes by score over estimated leg time under a
    budget margin that varies across seeds (a small randomised candidate
    list adds variety after the first, purely greedy seed), shortens the
    tour with a 2-opt pass and then chases the waypoints with a saturating
    PD rule that only brakes for the final endpoint.  The outputs are
    box-feasible control arrays; the NLP refines them.
    """
    points = np.asarray(instance.points, dtype=float)
    scores = np.asarray(instance.scores, dtype=float)
    n_steps = int(round(c_max / dt))
    start, end = points[0], points[1]
    rng = np.random.default_rng(seed)
    cruise = 0.95 * v_max
    seeds = []
    for s in range(count):
        margin = 0.80 + 0.05 * (s % 5)
        pos = start.copy()
        elapsed = 0.0
        remaining = set(range(points.shape[0]))
        remaining.discard(0)
        remaining.discard(1)
        order = []
        while True:
            cands = []
            for i in remaining:
                d = float(np.hypot(*(points[i] - pos)))
                t_go = _leg_time(d, v_max, a_max)
                t_back = _leg_time(float(np.hypot(*(points[i] - end))),
                                   v_max, a_max)
                if elapsed + t_go + t_back <= c_max * margin and scores[i] > 0:
                    cands.append((scores[i] / max(t_go, 1e-6), t_go, i))
            if not cands:
                break
            cands.sort(key=lambda c: (-c[0], c[2]))
            pick = 0 if s == 0 else int(rng.integers(0, min(3, len(cands))))
            ratio, t_go, i = cands[pick]
            order.append(i)
            elapsed += t_go
            pos = points[i].copy()
            remaining.discard(i)
        order = _two_opt(start, end, points, order)
        waypoints = [points[i] for i in order] + [end]
        u = np.zeros((n_steps, 1, 2))
        q = start.copy()
        v = np.zeros(2)
        wp = 0
        for k in range(n_steps):
            tgt = waypoints[wp]
            dvec = tgt - q
            dist = float(np.hypot(dvec[0], dvec[1]))
            if dist < 0.15 and wp + 1 < len(waypoints):
                wp += 1
                tgt = waypoints[wp]
                dvec = tgt - q
                dist = float(np.hypot(dvec[0], dvec[1]))
            brake = 1.6 if wp == len(waypoints) - 1 else 3.2
            speed = min(cruise, math.sqrt(brake * a_max * max(dist, 0.0)))
            vdes = dvec / dist * speed if dist > 1e-9 else np.zeros(2)
            a = np.clip((vdes - v) / dt, -a_max, a_max)
            u[k, 0] = a
            q = q + v * dt + 0.5 * a * dt * dt
            v = v + a * dt
        seeds.append(u)
    return seeds


def collected_node_score(positions: np.ndarray, points: np.ndarray,
                         scores: np.ndarray, visit_radius: float = 0.02):
    """Score of nodes the trajectory passes within ``visit_radius`` of.

    ``positions`` is (N+1, 2) or (N+1, m, 2); a node counts once no matter
    how many samples or vehicles touch it.
    """
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 2:
        pos = pos[:, None, :]
    pts = np.asarray(points, dtype=float)
    d = np.linalg.norm(pos[:, :, None, :] - pts[None, None, :, :], axis=3)
    visited = (d <= visit_radius).any(axis=(0, 1))
    return float(np.asarray(scores, float)[visited].sum()), visited
