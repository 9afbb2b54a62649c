"""Grid-based team-orienteering baseline planner.

The comparison baseline routes vehicles over the target grid itself:
nodes are target cells, motion is 4-neighborhood (no diagonals), and a
travel model prices each edge either optimistically (LB: constant cruise
through nodes) or pessimistically (UB: rest-to-rest trapezoidal profile
per edge).  Plans are built with a greedy randomized construction over a
restricted candidate list ranked by reward-per-travel-time, then improved
by local search (waypoint removal, insertion, and intra-route 2-exchange)
until no move helps.  The plan objective integrates the squared reward
field along the plan: rewards grow linearly and are zeroed at node
arrival events, matching the monitoring cost the MPC planner minimises.

The baseline deliberately plans against a frozen reward snapshot; it gets
no model of how the field evolves between replans.  That asymmetry is the
point of the comparison.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .models import RewardVector

__all__ = [
    "TravelModel",
    "GridGraph",
    "TeamPlan",
    "edge_travel_time",
    "edge_progress",
    "team_objective",
    "construct_plan",
    "local_search",
    "grasp_plan",
    "execute_team_plan",
]


@dataclass(frozen=True)
class TravelModel:
    """Edge timing model: "lb" cruises through nodes, "ub" stops at each."""

    mode: str = "lb"
    cruise: float = 1.0  # m/s
    accel: float = 2.0  # m/s^2, UB only

    def __post_init__(self):
        if self.mode not in ("lb", "ub"):
            raise ValueError(f"unknown travel model {self.mode!r}")
        if self.cruise <= 0 or self.accel <= 0:
            raise ValueError("cruise and accel must be positive")


def edge_travel_time(spacing: float, model: TravelModel) -> float:
    """Seconds to traverse one edge of the given length."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if model.mode == "lb":
        return spacing / model.cruise
    v, a = model.cruise, model.accel
    if spacing >= v * v / a:
        return spacing / v + v / a  # trapezoidal profile
    return 2.0 * math.sqrt(spacing / a)  # triangular, never reaches cruise


def edge_progress(spacing: float, model: TravelModel, tau: float) -> float:
    """Distance covered along an edge after tau seconds."""
    total = edge_travel_time(spacing, model)
    tau = min(max(tau, 0.0), total)
    if model.mode == "lb":
        return model.cruise * tau
    v, a = model.cruise, model.accel
    if spacing >= v * v / a:
        t_acc = v / a
        if tau <= t_acc:
            return 0.5 * a * tau * tau
        if tau >= total - t_acc:
            return spacing - 0.5 * a * (total - tau) ** 2
        return 0.5 * v * t_acc + v * (tau - t_acc)
    t_half = math.sqrt(spacing / a)
    if tau <= t_half:
        return 0.5 * a * tau * tau
    return spacing - 0.5 * a * (2.0 * t_half - tau) ** 2


class GridGraph:
    """Axis-aligned lattice over target positions with 4-neighborhood edges."""

    def __init__(self, coords: np.ndarray, spacing: float):
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        if coords.shape[0] == 0:
            raise ValueError("graph needs at least one node")
        if spacing <= 0:
            raise ValueError("spacing must be positive")
        self.coords = coords
        self.spacing = float(spacing)
        origin = coords.min(axis=0)
        cells = np.rint((coords - origin) / spacing).astype(int)
        snapped = origin + cells * spacing
        if not np.allclose(snapped, coords, atol=1e-6 * spacing):
            raise ValueError("positions do not sit on a uniform lattice")
        self._cell_of = {(int(cx), int(cy)): i
                         for i, (cx, cy) in enumerate(cells)}
        if len(self._cell_of) != coords.shape[0]:
            raise ValueError("duplicate lattice cells")
        self.cells = cells
        self._adj: list[list[int]] = [[] for _ in range(coords.shape[0])]
        for i, (cx, cy) in enumerate(cells):
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                j = self._cell_of.get((int(cx) + dx, int(cy) + dy))
                if j is not None:
                    self._adj[i].append(j)
        self._walk_cache: dict[tuple[int, int], list[int]] = {}

    @classmethod
    def from_positions(cls, positions: np.ndarray,
                       spacing: float | None = None) -> "GridGraph":
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        if spacing is None:
            if positions.shape[0] < 2:
                raise ValueError("cannot infer spacing from fewer than 2 nodes")
            diff = positions[None] - positions[:, None]
            d = np.hypot(diff[..., 0], diff[..., 1])
            pos = d[d > 1e-12]
            spacing = float(pos.min())
        return cls(positions, spacing)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self._adj) // 2

    def neighbors(self, i: int) -> list[int]:
        return list(self._adj[i])

    def nearest_node(self, point) -> int:
        p = np.asarray(point, dtype=float).reshape(2)
        d = np.hypot(self.coords[:, 0] - p[0], self.coords[:, 1] - p[1])
        return int(np.argmin(d))  # ties resolve to the lowest index

    def manhattan_steps(self, i: int, j: int) -> int:
        ci, cj = self.cells[i], self.cells[j]
        return abs(int(cj[0]) - int(ci[0])) + abs(int(cj[1]) - int(ci[1]))

    def walk(self, i: int, j: int) -> list[int]:
        """Node walk from i to j inclusive: x moves first, then y.

        Falls back to breadth-first search when the straight lattice walk
        leaves the node set (possible on non-rectangular layouts).
        """
        key = (int(i), int(j))
        got = self._walk_cache.get(key)
        if got is not None:
            return got
        ci, cj = self.cells[i], self.cells[j]
        path = [int(i)]
        cx, cy = int(ci[0]), int(ci[1])
        ok = True
        for _ in range(abs(int(cj[0]) - cx)):
            cx += 1 if cj[0] > cx else -1
            nxt = self._cell_of.get((cx, cy))
            if nxt is None:
                ok = False
                break
            path.append(nxt)
        if ok:
            for _ in range(abs(int(cj[1]) - cy)):
                cy += 1 if cj[1] > cy else -1
                nxt = self._cell_of.get((cx, cy))
                if nxt is None:
                    ok = False
                    break
                path.append(nxt)
        if not ok:
            path = self._bfs(i, j)
        self._walk_cache[key] = path
        return path

    def _bfs(self, i: int, j: int) -> list[int]:
        prev = {i: -1}
        queue = deque([i])
        while queue:
            cur = queue.popleft()
            if cur == j:
                out = [j]
                while prev[out[-1]] != -1:
                    out.append(prev[out[-1]])
                return out[::-1]
            for nb in self._adj[cur]:
                if nb not in prev:
                    prev[nb] = cur
                    queue.append(nb)
        raise ValueError(f"no lattice path between nodes {i} and {j}")


def _approach_time(dist: float, model: TravelModel) -> float:
    # off-grid leg from a continuous position to the first node
    if dist <= 0.0:
        return 0.0
    if model.mode == "lb":
        return dist / model.cruise
    return edge_travel_time(dist, model)


def _expand_route(graph: GridGraph, model: TravelModel, start_pos,
                  wps: list[int]) -> tuple[list[int], list[float]]:
    """One vehicle's waypoint list to (node walk, arrival times)."""
    edge_t = edge_travel_time(graph.spacing, model)
    start = graph.nearest_node(start_pos)
    t0 = _approach_time(
        float(np.hypot(*(graph.coords[start] - np.asarray(start_pos)))),
        model)
    route = [start]
    times = [t0]
    for w in wps:
        leg = graph.walk(route[-1], int(w))
        for node in leg[1:]:
            route.append(node)
            times.append(times[-1] + edge_t)
    return route, times


@dataclass
class TeamPlan:
    """Per-vehicle node walks with arrival times under one travel model."""

    graph: GridGraph
    model: TravelModel
    start_positions: np.ndarray  # (m, 2) continuous positions at plan time
    waypoints: list[list[int]]  # chosen visit targets per vehicle
    routes: list[list[int]] = field(default_factory=list)  # expanded walks
    arrivals: list[list[float]] = field(default_factory=list)

    def __post_init__(self):
        self.start_positions = np.asarray(self.start_positions,
                                          dtype=float).reshape(-1, 2)
        self.routes = []
        self.arrivals = []
        for v in range(self.start_positions.shape[0]):
            route, times = _expand_route(self.graph, self.model,
                                         self.start_positions[v],
                                         self.waypoints[v])
            self.routes.append(route)
            self.arrivals.append(times)

    @property
    def m(self) -> int:
        return self.start_positions.shape[0]

    def duration(self, v: int) -> float:
        return self.arrivals[v][-1] if self.arrivals[v] else 0.0

    def events(self) -> list[tuple[float, int]]:
        """All (arrival time, node) visit events, time-sorted."""
        ev = [(t, node)
              for route, times in zip(self.routes, self.arrivals)
              for node, t in zip(route, times)]
        ev.sort()
        return ev

    def position_at(self, v: int, tau: float) -> np.ndarray:
        """Vehicle v position tau seconds after the plan started."""
        g, model = self.graph, self.model
        route, times = self.routes[v], self.arrivals[v]
        p0 = self.start_positions[v]
        if not route:
            return p0.copy()
        t_first = times[0]
        if tau <= t_first:
            # straight approach leg toward the first node
            target = g.coords[route[0]]
            dist = float(np.hypot(*(target - p0)))
            if dist <= 1e-12 or t_first <= 0.0:
                return target.copy()
            s = edge_progress(dist, model, tau)
            return p0 + (target - p0) * (s / dist)
        if tau >= times[-1]:
            return g.coords[route[-1]].copy()
        k = int(np.searchsorted(times, tau, side="right")) - 1
        a, b = g.coords[route[k]], g.coords[route[k + 1]]
        seg = float(np.hypot(*(b - a)))
        s = edge_progress(seg, model, tau - times[k])
        return a + (b - a) * (s / seg)


def _piecewise_integral(r0: float, k_gain: float, visit_times, horizon: float
                        ) -> float:
    # integral of (r + k t)^2 with r reset to 0 at each visit
    total = 0.0
    t_prev, r = 0.0, float(r0)
    for t in visit_times:
        span = t - t_prev
        total += (r * r * span + r * k_gain * span * span
                  + k_gain * k_gain * span ** 3 / 3.0)
        t_prev, r = t, 0.0
    span = horizon - t_prev
    total += (r * r * span + r * k_gain * span * span
              + k_gain * k_gain * span ** 3 / 3.0)
    return total


def team_objective(plan: TeamPlan, rewards: RewardVector,
                   horizon: float) -> float:
    """Integral over the horizon of the summed squared reward field.

    Rewards grow at the vector's gain rate and drop to zero at each node
    arrival event; the integral of (r + k t)^2 over each piece is closed
    form, so the value is exact for the event-level reward model.
    """
    k_gain = rewards.gain_rate
    visits: dict[int, list[float]] = {}
    for t, node in plan.events():
        if t <= horizon:
            visits.setdefault(node, []).append(t)
    total = 0.0
    for i, r0 in enumerate(rewards.values):
        total += _piecewise_integral(r0, k_gain, visits.get(i, ()), horizon)
    return total


class _TeamEvaluator:
    """Incremental objective for waypoint edits touching one vehicle.

    Keeps each vehicle's expanded route separately; a trial objective
    merges per-vehicle visit events and corrects the no-visit baseline
    only on targets that actually get visited.
    """

    def __init__(self, graph: GridGraph, model: TravelModel, starts,
                 rewards: RewardVector, horizon: float):
        self.graph = graph
        self.model = model
        self.starts = np.asarray(starts, dtype=float).reshape(-1, 2)
        self.values = np.asarray(rewards.values, dtype=float)
        self.k_gain = rewards.gain_rate
        self.horizon = horizon
        h = horizon
        base_each = (self.values ** 2 * h + self.values * self.k_gain * h * h
                     + self.k_gain ** 2 * h ** 3 / 3.0)
        self._base_each = base_each
        self._base_total = float(base_each.sum())

    def expand(self, start_pos, wps):
        return _expand_route(self.graph, self.model, start_pos, wps)

    def route_duration(self, expanded) -> float:
        times = expanded[1]
        return times[-1] if times else 0.0

    def objective(self, expanded_routes) -> float:
        visits: dict[int, list[float]] = {}
        for route, times in expanded_routes:
            for node, t in zip(route, times):
                if t <= self.horizon:
                    visits.setdefault(node, []).append(t)
        total = self._base_total
        for node, ts in visits.items():
            ts.sort()
            total += _piecewise_integral(self.values[node], self.k_gain, ts,
                                         self.horizon) \
                - self._base_each[node]
        return total


def construct_plan(graph: GridGraph, rewards: RewardVector,
                   start_positions: np.ndarray, horizon: float,
                   model: TravelModel, rng: np.random.Generator,
                   alpha: float = 0.3) -> TeamPlan:
    """Greedy randomized construction.

    Vehicles extend their routes in order of least committed time; each
    extension draws uniformly from the best ceil(alpha * |candidates|)
    unclaimed nodes ranked by reward per unit travel time.  Nodes passed
    through on the way count as claimed.
    """
    start_positions = np.asarray(start_positions, dtype=float).reshape(-1, 2)
    m = start_positions.shape[0]
    edge_t = edge_travel_time(graph.spacing, model)
    values = np.asarray(rewards.values, dtype=float)

    waypoints: list[list[int]] = [[] for _ in range(m)]
    expanded = [_expand_route(graph, model, start_positions[v], [])
                for v in range(m)]
    # vehicles whose approach leg alone exceeds the horizon stay parked
    active = [v for v in range(m) if expanded[v][1][-1] <= horizon]
    claimed: set[int] = set()
    for v in active:
        claimed.update(expanded[v][0])
    clocks = {v: expanded[v][1][-1] for v in active}
    heads = {v: expanded[v][0][-1] for v in active}

    while active:
        v = min(active, key=lambda k: (clocks[k], k))
        cand: list[tuple[float, int, float]] = []  # (-ratio, node, time)
        for node in range(graph.n):
            if node in claimed or values[node] <= 0.0:
                continue
            tt = graph.manhattan_steps(heads[v], node) * edge_t
            if tt <= 0.0 or clocks[v] + tt > horizon:
                continue
            cand.append((-values[node] / tt, node, tt))
        if not cand:
            active.remove(v)
            continue
        cand.sort()
        take = max(1, math.ceil(alpha * len(cand)))
        _, node, tt = cand[int(rng.integers(take))]
        claimed.update(graph.walk(heads[v], node))
        waypoints[v].append(node)
        clocks[v] += tt
        heads[v] = node
    return TeamPlan(graph, model, start_positions, waypoints)


def local_search(plan: TeamPlan, rewards: RewardVector, horizon: float
                 ) -> TeamPlan:
    """Best-improvement local search over waypoint lists.

    Moves: drop one waypoint, insert an unvisited rewarded node at any
    position, and 2-exchange (reverse a waypoint segment) within a route.
    Repeats until no move improves the plan objective.
    """
    graph, model = plan.graph, plan.model
    starts = plan.start_positions
    ev = _TeamEvaluator(graph, model, starts, rewards, horizon)

    waypoints = [list(w) for w in plan.waypoints]
    expanded = [ev.expand(starts[v], waypoints[v])
                for v in range(plan.m)]
    best_obj = ev.objective(expanded)

    def try_move(v, trial_wps):
        """Objective if vehicle v's waypoints became trial_wps, or None."""
        exp_v = ev.expand(starts[v], trial_wps)
        if ev.route_duration(exp_v) > horizon + 1e-9:
            return None
        obj = ev.objective(
            [exp_v if u == v else expanded[u] for u in range(plan.m)])
        return obj, exp_v

    improved = True
    rounds = 0
    while improved and rounds < 60:
        improved = False
        rounds += 1
        visited: set[int] = set()
        for route, _times in expanded:
            visited.update(route)
        pool = [n for n in range(graph.n)
                if n not in visited and ev.values[n] > 0.0]
        for v in range(plan.m):
            wps = waypoints[v]
            best_move = None  # (obj, trial_wps, exp_v)
            for k in range(len(wps)):
                out = try_move(v, wps[:k] + wps[k + 1:])
                if out and out[0] < best_obj - 1e-12 and \
                        (best_move is None or out[0] < best_move[0]):
                    best_move = (out[0], wps[:k] + wps[k + 1:], out[1])
            for node in pool:
                for k in range(len(wps) + 1):
                    trial = wps[:k] + [node] + wps[k:]
                    out = try_move(v, trial)
                    if out and out[0] < best_obj - 1e-12 and \
                            (best_move is None or out[0] < best_move[0]):
                        best_move = (out[0], trial, out[1])
            for a in range(len(wps) - 1):
                for b in range(a + 1, len(wps)):
                    trial = wps[:a] + wps[a:b + 1][::-1] + wps[b + 1:]
                    out = try_move(v, trial)
                    if out and out[0] < best_obj - 1e-12 and \
                            (best_move is None or out[0] < best_move[0]):
                        best_move = (out[0], trial, out[1])
            if best_move is not None:
                best_obj, waypoints[v], expanded[v] = best_move
                improved = True
    return TeamPlan(graph, model, starts, waypoints)


def grasp_plan(graph: GridGraph, rewards: RewardVector,
               start_positions: np.ndarray, horizon: float,
               model: TravelModel, iterations: int = 5,
               alpha: float = 0.3, seed: int = 0) -> TeamPlan:
    """Best of `iterations` construct-then-improve rounds (deterministic)."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    best_key = None
    for it in range(iterations):
        built = construct_plan(graph, rewards, start_positions, horizon,
                               model, rng, alpha)
        polished = local_search(built, rewards, horizon)
        key = (team_objective(polished, rewards, horizon), it)
        if best_key is None or key < best_key:
            best, best_key = polished, key
    return best


def execute_team_plan(plan: TeamPlan, dt: float,
                      n_steps: int | None = None) -> np.ndarray:
    """Sampled fleet positions every dt seconds, shape (n_steps+1, m, 2).

    Vehicles hold their final node once their route is exhausted.
    """
    if n_steps is None:
        longest = max((plan.duration(v) for v in range(plan.m)), default=0.0)
        n_steps = int(math.ceil(longest / dt + 1e-9))
    out = np.empty((n_steps + 1, plan.m, 2))
    for v in range(plan.m):
        for k in range(n_steps + 1):
            out[k, v] = plan.position_at(v, k * dt)
    return out
