"""Core continuous models for multi-vehicle surface monitoring.

The world consists of n_p point targets carrying a scalar reward each and m
vehicles moving as double integrators in the plane.  A vehicle "sees" a target
through a Butterworth-style proximity response

    f_b(x)      = 1 / (1 + (x / c_b)^n_b)
    f_b2(dx,dy) = f_b(sqrt(dx^2 + dy^2))

which is 1 on top of the target, 0.5 exactly at the cutoff distance c_b and
falls off with degree n_b.  Rewards grow linearly at ``k_gain`` per second and
are drained by coverage:

    r[k+1] = (r[k] + T_s * k_gain) * (1 - min(1, sum_j f_b2(p_i - q_j)))

A separate, stricter evaluation reward is used for scoring runs: it resets to
zero only when some vehicle is within the evaluation radius n_e and grows at
the same rate otherwise.

Targets may drift; the offset of a drifting coordinate at time t is

    offset(t) = t * v_d + A_p * sin(t * omega_p)

so v_d is a constant drift velocity and (A_p, omega_p) a sinusoidal sway.

Everything in this module is plain NumPy and operates on small arrays; the
batched horizon rollouts used by the planner live in :mod:`impdr.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SensorParams",
    "DriftParams",
    "Target",
    "TargetSet",
    "VehicleState",
    "FleetLimits",
    "FleetState",
    "RewardVector",
    "butterworth_1d",
    "butterworth_2d",
    "coverage",
    "reward_step",
    "eval_reward_step",
    "vehicle_step",
    "motion_constraint_violations",
    "pairwise_min_distance",
    "drift_offset",
    "make_grid_targets",
]


@dataclass(frozen=True)
class SensorParams:
    """Butterworth proximity response: cutoff distance c_b and degree n_b."""

    cutoff: float
    degree: float

    def __post_init__(self):
        if not (self.cutoff > 0.0):
            raise ValueError(f"sensor cutoff must be positive, got {self.cutoff}")
        if not (self.degree > 0.0):
            raise ValueError(f"sensor degree must be positive, got {self.degree}")


@dataclass(frozen=True)
class DriftParams:
    """Drift of one coordinate: constant velocity plus a sinusoidal sway."""

    velocity: float = 0.0  # v_d
    amplitude: float = 0.0  # A_p
    angular_velocity: float = 0.0  # omega_p


_NO_DRIFT = DriftParams()


@dataclass(frozen=True)
class Target:
    """A point target: base position plus optional per-axis drift."""

    base: tuple[float, float]
    drift_x: DriftParams = _NO_DRIFT
    drift_y: DriftParams = _NO_DRIFT

    def position_at(self, t: float) -> np.ndarray:
        x = self.base[0] + drift_offset(t, self.drift_x)
        y = self.base[1] + drift_offset(t, self.drift_y)
        return np.array([x, y])


@dataclass
class TargetSet:
    """Ordered collection of targets; row i of every position array is target i."""

    targets: list[Target] = field(default_factory=list)

    @property
    def n_p(self) -> int:
        return len(self.targets)

    def __len__(self) -> int:
        return len(self.targets)

    def base_positions(self) -> np.ndarray:
        return np.array([t.base for t in self.targets], dtype=float).reshape(-1, 2)

    def positions_at(self, t: float) -> np.ndarray:
        if not self.targets:
            return np.zeros((0, 2))
        return np.stack([tg.position_at(t) for tg in self.targets])

    def add(self, target: Target) -> None:
        self.targets.append(target)


@dataclass
class VehicleState:
    """Planar double-integrator state."""

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(2)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(2)


@dataclass(frozen=True)
class FleetLimits:
    """Motion limits: speed cap, per-axis acceleration box, pairwise clearance."""

    v_max: float
    a_max: float
    d_min: float = 0.0

    def __post_init__(self):
        if self.v_max <= 0 or self.a_max <= 0:
            raise ValueError("v_max and a_max must be positive")
        if self.d_min < 0:
            raise ValueError("d_min must be non-negative")


@dataclass
class FleetState:
    vehicles: list[VehicleState]
    limits: FleetLimits

    @property
    def m(self) -> int:
        return len(self.vehicles)

    def positions(self) -> np.ndarray:
        return np.stack([v.position for v in self.vehicles])

    def velocities(self) -> np.ndarray:
        return np.stack([v.velocity for v in self.vehicles])


@dataclass
class RewardVector:
    """Per-target rewards together with their common growth rate (1/s)."""

    values: np.ndarray
    gain_rate: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if np.any(self.values < 0):
            raise ValueError("rewards must be non-negative")

    def copy(self) -> "RewardVector":
        return RewardVector(self.values.copy(), self.gain_rate)


def butterworth_1d(x, params: SensorParams):
    """f_b(x) = 1 / (1 + (x / c_b)^n_b); accepts scalars or arrays, x >= 0."""
    x = np.asarray(x, dtype=float)
    out = 1.0 / (1.0 + (x / params.cutoff) ** params.degree)
    return float(out) if out.ndim == 0 else out


def butterworth_2d(dx, dy, params: SensorParams):
    """Radial form f_b2(dx, dy) = f_b(||(dx, dy)||)."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    return butterworth_1d(np.sqrt(dx * dx + dy * dy), params)


def coverage(target_positions: np.ndarray, vehicle_positions: np.ndarray,
             sensor: SensorParams) -> np.ndarray:
    """Per-target summed sensor response of the whole fleet, before saturation."""
    tp = np.asarray(target_positions, dtype=float).reshape(-1, 2)
    vp = np.asarray(vehicle_positions, dtype=float).reshape(-1, 2)
    if tp.shape[0] == 0:
        return np.zeros(0)
    if vp.shape[0] == 0:
        return np.zeros(tp.shape[0])
    diff = tp[:, None, :] - vp[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    return butterworth_1d(dist, sensor).sum(axis=1)


def reward_step(rewards: RewardVector, target_positions: np.ndarray,
                vehicle_positions: np.ndarray, sensor: SensorParams,
                dt: float) -> RewardVector:
    """One reward update: grow by dt * gain, then drain by saturated coverage.

    Coverage is evaluated at the *current* positions, i.e. the returned vector
    is the reward at the next sample instant.  The coverage sum saturates at 1
    so overlapping vehicles cannot push a reward negative.
    """
    cov = np.minimum(1.0, coverage(target_positions, vehicle_positions, sensor))
    grown = rewards.values + dt * rewards.gain_rate
    return RewardVector(grown * (1.0 - cov), rewards.gain_rate)


def eval_reward_step(rewards: RewardVector, target_positions: np.ndarray,
                     vehicle_positions: np.ndarray, eval_radius: float,
                     dt: float) -> RewardVector:
    """Strict scoring update: zero within eval_radius of any vehicle, else grow.

    The distance test is inclusive (d <= n_e nullifies).
    """
    tp = np.asarray(target_positions, dtype=float).reshape(-1, 2)
    vp = np.asarray(vehicle_positions, dtype=float).reshape(-1, 2)
    grown = rewards.values + dt * rewards.gain_rate
    if tp.shape[0] and vp.shape[0]:
        diff = tp[:, None, :] - vp[None, :, :]
        dmin = np.sqrt(np.sum(diff * diff, axis=2)).min(axis=1)
        grown = np.where(dmin <= eval_radius, 0.0, grown)
    return RewardVector(grown, rewards.gain_rate)


def vehicle_step(state: VehicleState, accel: np.ndarray, dt: float) -> VehicleState:
    """Exact zero-order-hold double integrator update over one interval."""
    a = np.asarray(accel, dtype=float).reshape(2)
    q = state.position + state.velocity * dt + 0.5 * a * dt * dt
    v = state.velocity + a * dt
    return VehicleState(q, v)


def motion_constraint_violations(state: VehicleState, accel: np.ndarray,
                                 limits: FleetLimits) -> list[tuple[str, float]]:
    """Positive-magnitude violations of the speed and acceleration limits.

    Returns (constraint id, amount) pairs; empty list when feasible.
    """
    out = []
    speed = float(np.hypot(state.velocity[0], state.velocity[1]))
    if speed > limits.v_max:
        out.append(("v_max", speed - limits.v_max))
    a = np.asarray(accel, dtype=float).reshape(2)
    for axis, name in ((0, "a_max_x"), (1, "a_max_y")):
        if abs(a[axis]) > limits.a_max:
            out.append((name, abs(a[axis]) - limits.a_max))
    return out


def pairwise_min_distance(positions: np.ndarray):
    """Smallest inter-vehicle distance and the realising index pair.

    A single vehicle (or none) has no pair; returns (inf, None).
    """
    p = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = p.shape[0]
    if n < 2:
        return math.inf, None
    best = math.inf
    pair = None
    for i in range(n - 1):
        d = np.hypot(p[i + 1:, 0] - p[i, 0], p[i + 1:, 1] - p[i, 1])
        j = int(np.argmin(d))
        if d[j] < best:
            best = float(d[j])
            pair = (i, i + 1 + j)
    return best, pair


def drift_offset(t, params: DriftParams):
    """offset(t) = t * v_d + A_p * sin(t * omega_p)."""
    t = np.asarray(t, dtype=float)
    out = t * params.velocity + params.amplitude * np.sin(t * params.angular_velocity)
    return float(out) if out.ndim == 0 else out


def make_grid_targets(width: int, spacing: float, origin=(0.0, 0.0),
                      drift_x: DriftParams = _NO_DRIFT,
                      drift_y: DriftParams = _NO_DRIFT,
                      height: int | None = None) -> TargetSet:
    """Row-major rectangular grid of targets, ``width`` columns by ``height`` rows.

    Target index i sits at column i % width, row i // width; row-major order
    matches the target indexing used in traces.  ``height`` defaults to width
    (square grid).
    """
    if width < 1 or (height is not None and height < 1):
        raise ValueError("grid dimensions must be at least 1")
    if spacing <= 0:
        raise ValueError("grid spacing must be positive")
    rows = width if height is None else height
    ox, oy = origin
    targets = [
        Target((ox + c * spacing, oy + r * spacing), drift_x, drift_y)
        for r in range(rows)
        for c in range(width)
    ]
    return TargetSet(targets)
