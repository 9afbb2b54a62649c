"""Grid team-orienteering baseline tests with closed-form timing oracles."""

import math

import numpy as np
import pytest

from impdr.baselines import (
    GridGraph,
    TeamPlan,
    TravelModel,
    construct_plan,
    edge_progress,
    edge_travel_time,
    execute_team_plan,
    grasp_plan,
    local_search,
    team_objective,
)
from impdr.models import RewardVector


def _grid3(spacing=1.0):
    coords = np.array([[(k % 3) * spacing, (k // 3) * spacing]
                       for k in range(9)])
    return GridGraph(coords, spacing)


def test_edge_travel_time_values():
    lb = TravelModel("lb", cruise=2.0)
    assert edge_travel_time(3.0, lb) == pytest.approx(1.5)
    ub = TravelModel("ub", cruise=1.0, accel=2.0)
    # long edge: trapezoid  s/v + v/a
    assert edge_travel_time(2.0, ub) == pytest.approx(2.0 + 0.5)
    # short edge: triangular  2 sqrt(s/a), never reaches cruise
    assert edge_travel_time(0.2, ub) == pytest.approx(2.0 * math.sqrt(0.1))
    with pytest.raises(ValueError):
        edge_travel_time(0.0, lb)
    with pytest.raises(ValueError):
        TravelModel("teleport")


def test_ub_never_faster_than_lb():
    lb = TravelModel("lb", cruise=1.3)
    ub = TravelModel("ub", cruise=1.3, accel=1.7)
    for s in np.linspace(0.05, 8.0, 40):
        assert edge_travel_time(float(s), ub) >= edge_travel_time(float(s), lb)


def test_edge_progress_endpoints_and_monotone():
    for model in (TravelModel("lb", cruise=1.1),
                  TravelModel("ub", cruise=1.1, accel=2.3)):
        for s in (0.3, 1.0, 4.0):
            total = edge_travel_time(s, model)
            assert edge_progress(s, model, 0.0) == pytest.approx(0.0)
            assert edge_progress(s, model, total) == pytest.approx(s)
            taus = np.linspace(0.0, total, 50)
            prog = [edge_progress(s, model, float(t)) for t in taus]
            assert np.all(np.diff(prog) >= -1e-12)


def test_grid_graph_structure():
    g = _grid3(spacing=2.0)
    assert g.n == 9 and g.n_edges == 12
    assert sorted(g.neighbors(4)) == [1, 3, 5, 7]  # center touches 4 nodes
    assert g.nearest_node([2.2, 0.3]) == 1
    assert g.nearest_node([3.1, 0.2]) == 2
    assert g.manhattan_steps(0, 8) == 4
    # straight lattice walk moves x first, then y
    assert g.walk(0, 8) == [0, 1, 2, 5, 8]


def test_grid_graph_validation_and_bfs_fallback():
    with pytest.raises(ValueError):
        GridGraph(np.array([[0.0, 0.0], [0.4, 0.9]]), 1.0)  # off lattice
    with pytest.raises(ValueError):
        GridGraph(np.array([[0.0, 0.0], [0.0, 0.0]]), 1.0)  # duplicate cell
    # L-shape: the x-first walk from 0 to the far corner leaves the node
    # set, so the walk must come from breadth-first search instead
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 2.0],
                       [1.0, 2.0]])
    g = GridGraph(coords, 1.0)
    path = g.walk(1, 4)
    assert path[0] == 1 and path[-1] == 4
    for a, b in zip(path, path[1:]):
        assert b in g.neighbors(a)


def test_from_positions_infers_spacing():
    coords = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]])
    g = GridGraph.from_positions(coords)
    assert g.spacing == pytest.approx(0.5)


def test_team_objective_no_visit_closed_form():
    g = _grid3()
    rewards = RewardVector(np.full(9, 2.0), 0.3)
    # park the vehicle far beyond the horizon so nothing gets visited
    plan = TeamPlan(g, TravelModel("lb", cruise=0.01), np.array([[50.0, 50.0]]),
                    [[]])
    h = 4.0
    per = 2.0 ** 2 * h + 2.0 * 0.3 * h * h + 0.3 ** 2 * h ** 3 / 3.0
    assert team_objective(plan, rewards, h) == pytest.approx(9 * per, rel=1e-12)


def test_team_objective_matches_numeric_integral():
    g = _grid3()
    values = np.linspace(1.0, 3.0, 9)
    rewards = RewardVector(values, 0.25)
    model = TravelModel("lb", cruise=1.0)
    plan = TeamPlan(g, model, np.array([[0.0, 0.0]]), [[2, 8]])
    h = 6.0
    got = team_objective(plan, rewards, h)

    # independent fine-grained quadrature over the event-level reward model
    dt = 1e-4
    ts = np.arange(0.0, h + dt / 2, dt)
    r = np.tile(values, (ts.size, 1)) + 0.25 * ts[:, None]
    for t, node in plan.events():
        if t <= h:
            k = int(np.searchsorted(ts, t))
            r[k:, node] = 0.25 * (ts[k:] - t)
    expect = float(np.trapezoid(np.sum(r * r, axis=1), ts))
    assert got == pytest.approx(expect, rel=1e-3)


def test_construct_and_grasp_deterministic():
    g = _grid3()
    rewards = RewardVector(np.linspace(0.5, 2.5, 9), 0.2)
    starts = np.array([[0.0, 0.0], [2.0, 2.0]])
    rng_a = np.random.default_rng(5)
    rng_b = np.random.default_rng(5)
    a = construct_plan(g, rewards, starts, 6.0, TravelModel("lb"), rng_a)
    b = construct_plan(g, rewards, starts, 6.0, TravelModel("lb"), rng_b)
    assert a.waypoints == b.waypoints
    pa = grasp_plan(g, rewards, starts, 6.0, TravelModel("lb"), seed=9)
    pb = grasp_plan(g, rewards, starts, 6.0, TravelModel("lb"), seed=9)
    assert pa.waypoints == pb.waypoints


def test_local_search_never_worsens():
    g = _grid3()
    rewards = RewardVector(np.linspace(0.5, 2.5, 9), 0.2)
    starts = np.array([[0.0, 0.0]])
    h = 7.0
    rng = np.random.default_rng(1)
    for model in (TravelModel("lb"), TravelModel("ub", cruise=1.0, accel=2.0)):
        built = construct_plan(g, rewards, starts, h, model, rng)
        polished = local_search(built, rewards, h)
        assert team_objective(polished, rewards, h) <= \
            team_objective(built, rewards, h) + 1e-9


def test_plans_respect_horizon_budget():
    g = _grid3()
    rewards = RewardVector(np.linspace(1.0, 2.0, 9), 0.3)
    starts = np.array([[0.0, 0.0], [1.0, 2.0]])
    h = 3.5
    for model in (TravelModel("lb"), TravelModel("ub", cruise=1.0, accel=2.0)):
        plan = grasp_plan(g, rewards, starts, h, model, iterations=3, seed=2)
        for v in range(plan.m):
            assert plan.duration(v) <= h + 1e-9


def test_execute_team_plan_samples_and_speed():
    g = _grid3()
    rewards = RewardVector(np.linspace(1.0, 2.0, 9), 0.3)
    starts = np.array([[0.2, 0.0]])
    plan = grasp_plan(g, rewards, starts, 6.0, TravelModel("lb", cruise=1.0),
                      iterations=2, seed=0)
    dt = 0.05
    pos = execute_team_plan(plan, dt)
    assert pos.ndim == 3 and pos.shape[1:] == (1, 2)
    np.testing.assert_allclose(pos[0, 0], starts[0])
    # vehicles hold the final node once the route is done
    np.testing.assert_allclose(pos[-1, 0], g.coords[plan.routes[0][-1]])
    steps = np.linalg.norm(np.diff(pos[:, 0], axis=0), axis=1)
    assert float(steps.max()) <= 1.0 * dt + 1e-9


def test_position_at_midpoint_linear_lb():
    g = _grid3()
    plan = TeamPlan(g, TravelModel("lb", cruise=1.0), np.array([[0.0, 0.0]]),
                    [[2]])
    # route 0 -> 1 -> 2 along y = 0 at 1 m/s, no approach leg
    np.testing.assert_allclose(plan.position_at(0, 0.5), [0.5, 0.0])
    np.testing.assert_allclose(plan.position_at(0, 1.5), [1.5, 0.0])
    np.testing.assert_allclose(plan.position_at(0, 99.0), [2.0, 0.0])
