"""Model-layer unit tests: sensor response, reward recurrences, kinematics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impdr.models import (
    DriftParams,
    FleetLimits,
    RewardVector,
    SensorParams,
    Target,
    VehicleState,
    butterworth_1d,
    butterworth_2d,
    coverage,
    drift_offset,
    eval_reward_step,
    make_grid_targets,
    motion_constraint_violations,
    pairwise_min_distance,
    reward_step,
    vehicle_step,
)


# ---------------------------------------------------------------------------
# sensor response


@pytest.mark.parametrize("cutoff,degree", [(0.25, 8.0), (0.5, 4.0), (0.05, 2.0)])
def test_butterworth_is_half_at_cutoff(cutoff, degree):
    assert butterworth_1d(cutoff, SensorParams(cutoff, degree)) == pytest.approx(0.5)


def test_butterworth_limits():
    p = SensorParams(0.3, 6.0)
    assert butterworth_1d(0.0, p) == 1.0
    assert butterworth_1d(100.0, p) < 1e-12
    xs = np.linspace(0.0, 2.0, 50)
    ys = butterworth_1d(xs, p)
    assert np.all(np.diff(ys) < 0)  # strictly decreasing on x >= 0


def test_butterworth_2d_is_radial():
    p = SensorParams(0.4, 8.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        dx, dy = rng.normal(size=2)
        r = math.hypot(dx, dy)
        assert butterworth_2d(dx, dy, p) == pytest.approx(butterworth_1d(r, p), rel=1e-14)


def test_sharp_sensor_has_dead_tail():
    # degree 8 at cutoff 0.25: essentially no response one grid spacing out
    p = SensorParams(0.25, 8.0)
    assert butterworth_1d(1.0, p) < 2e-5
    # degree 2 keeps a usable tail at the same distance
    assert butterworth_1d(1.0, SensorParams(0.25, 2.0)) > 0.05


def test_sensor_params_validation():
    with pytest.raises(ValueError):
        SensorParams(0.0, 4.0)
    with pytest.raises(ValueError):
        SensorParams(0.3, -1.0)


def test_coverage_sums_fleet_responses():
    p = SensorParams(0.5, 4.0)
    targets = np.array([[0.0, 0.0], [2.0, 0.0]])
    vehicles = np.array([[0.0, 0.0], [0.3, 0.4]])
    cov = coverage(targets, vehicles, p)
    want0 = butterworth_1d(0.0, p) + butterworth_1d(0.5, p)
    assert cov[0] == pytest.approx(want0, rel=1e-14)
    assert cov.shape == (2,)
    assert coverage(np.zeros((0, 2)), vehicles, p).shape == (0,)


# ---------------------------------------------------------------------------
# reward recurrences


def _scalar_reward_oracle(r0, k_gain, dt, dists, cutoff, degree):
    # independent per-target recurrence, plain floats only
    r = r0
    out = [r]
    for step_d in dists:
        s = sum(1.0 / (1.0 + (d / cutoff) ** degree) for d in step_d)
        r = (r + dt * k_gain) * (1.0 - min(1.0, s))
        out.append(r)
    return out


def test_reward_step_matches_scalar_recurrence():
    rng = np.random.default_rng(11)
    sensor = SensorParams(0.35, 6.0)
    dt = 0.2
    n_p, m, steps = 4, 2, 1000
    tpos = rng.uniform(-2, 2, size=(n_p, 2))
    traj = rng.uniform(-2, 2, size=(steps, m, 2))

    rv = RewardVector(rng.uniform(0, 5, size=n_p), gain_rate=1.0)
    got = [rv.values.copy()]
    cur = rv
    for k in range(steps):
        cur = reward_step(cur, tpos, traj[k], sensor, dt)
        got.append(cur.values.copy())
        assert np.all(cur.values >= 0.0)
    got = np.asarray(got)

    for i in range(n_p):
        dists = [[math.hypot(*(tpos[i] - traj[k, j])) for j in range(m)]
                 for k in range(steps)]
        want = _scalar_reward_oracle(float(rv.values[i]), 1.0, dt, dists,
                                     sensor.cutoff, sensor.degree)
        np.testing.assert_allclose(got[:, i], want, rtol=1e-12, atol=1e-12)


def test_reward_step_zeroes_on_direct_hit():
    sensor = SensorParams(0.25, 8.0)
    rv = RewardVector(np.array([7.0]), gain_rate=1.0)
    out = reward_step(rv, np.array([[1.0, 1.0]]), np.array([[1.0, 1.0]]),
                      sensor, 0.25)
    assert out.values[0] == 0.0


def test_reward_step_saturates_overlapping_coverage():
    # two vehicles on top of the target: sum is 2 but the drain caps at 1
    sensor = SensorParams(0.25, 8.0)
    rv = RewardVector(np.array([3.0]), gain_rate=0.0)
    out = reward_step(rv, np.array([[0.0, 0.0]]),
                      np.array([[0.0, 0.0], [0.0, 0.0]]), sensor, 0.1)
    assert out.values[0] == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_reward_step_never_negative(seed):
    rng = np.random.default_rng(seed)
    n_p = int(rng.integers(1, 5))
    m = int(rng.integers(1, 4))
    sensor = SensorParams(float(rng.uniform(0.05, 1.0)),
                          float(rng.choice([2.0, 4.0, 8.0])))
    rv = RewardVector(rng.uniform(0, 10, n_p), gain_rate=float(rng.uniform(0, 2)))
    out = reward_step(rv, rng.uniform(-1, 1, (n_p, 2)),
                      rng.uniform(-1, 1, (m, 2)), sensor, 0.25)
    assert np.all(out.values >= 0.0)


def test_eval_reward_boundary_is_inclusive():
    n_e = 0.5
    rv = RewardVector(np.array([4.0]), gain_rate=1.0)
    tpos = np.array([[0.0, 0.0]])

    inside = eval_reward_step(rv, tpos, np.array([[0.999 * n_e, 0.0]]), n_e, 0.25)
    assert inside.values[0] == 0.0
    exact = eval_reward_step(rv, tpos, np.array([[n_e, 0.0]]), n_e, 0.25)
    assert exact.values[0] == 0.0
    outside = eval_reward_step(rv, tpos, np.array([[1.001 * n_e, 0.0]]), n_e, 0.25)
    assert outside.values[0] == pytest.approx(4.25)


def test_eval_reward_grows_without_fleet():
    rv = RewardVector(np.array([1.0, 2.0]), gain_rate=2.0)
    out = eval_reward_step(rv, np.zeros((2, 2)), np.zeros((0, 2)), 0.5, 0.5)
    np.testing.assert_allclose(out.values, [2.0, 3.0])


def test_reward_vector_rejects_negative():
    with pytest.raises(ValueError):
        RewardVector(np.array([1.0, -0.5]))


# ---------------------------------------------------------------------------
# kinematics


def test_vehicle_step_exact_zoh():
    v0 = VehicleState([1.0, -2.0], [0.5, 0.25])
    a = np.array([0.3, -0.1])
    dt = 0.25
    s1 = vehicle_step(v0, a, dt)
    np.testing.assert_allclose(
        s1.position, v0.position + v0.velocity * dt + 0.5 * a * dt * dt)
    np.testing.assert_allclose(s1.velocity, v0.velocity + a * dt)

    # two half steps equal one full step for constant acceleration
    h1 = vehicle_step(vehicle_step(v0, a, dt / 2), a, dt / 2)
    s2 = vehicle_step(v0, a, dt)
    np.testing.assert_allclose(h1.position, s2.position, rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(h1.velocity, s2.velocity, rtol=1e-15, atol=1e-15)


def test_motion_constraint_violations():
    lim = FleetLimits(v_max=1.0, a_max=2.0, d_min=0.5)
    ok = motion_constraint_violations(
        VehicleState([0, 0], [0.6, 0.6]), np.array([1.0, -2.0]), lim)
    assert ok == []
    bad = motion_constraint_violations(
        VehicleState([0, 0], [1.0, 1.0]), np.array([2.5, 0.0]), lim)
    names = [n for n, _ in bad]
    assert "v_max" in names and "a_max_x" in names
    amount = dict(bad)["v_max"]
    assert amount == pytest.approx(math.sqrt(2.0) - 1.0)


def test_pairwise_min_distance():
    d, pair = pairwise_min_distance(np.array([[0, 0], [3, 4], [0, 1.0]]))
    assert d == pytest.approx(1.0)
    assert pair == (0, 2)
    d1, p1 = pairwise_min_distance(np.array([[2.0, 2.0]]))
    assert math.isinf(d1) and p1 is None


def test_fleet_limits_validation():
    with pytest.raises(ValueError):
        FleetLimits(v_max=0.0, a_max=1.0)
    with pytest.raises(ValueError):
        FleetLimits(v_max=1.0, a_max=1.0, d_min=-0.1)


# ---------------------------------------------------------------------------
# drift and grids


def test_drift_offset_formula():
    p = DriftParams(velocity=0.2, amplitude=0.5, angular_velocity=math.pi / 10)
    assert drift_offset(0.0, p) == 0.0
    t = 3.7
    want = t * 0.2 + 0.5 * math.sin(t * math.pi / 10)
    assert drift_offset(t, p) == pytest.approx(want, rel=1e-15)
    # pure sway has period 2 pi / omega
    sway = DriftParams(amplitude=1.0, angular_velocity=math.pi / 10)
    assert drift_offset(20.0, sway) == pytest.approx(0.0, abs=1e-12)


def test_target_position_combines_axes():
    tgt = Target((1.0, 2.0), drift_x=DriftParams(velocity=1.0),
                 drift_y=DriftParams(amplitude=2.0, angular_velocity=0.5))
    p = tgt.position_at(2.0)
    assert p[0] == pytest.approx(3.0)
    assert p[1] == pytest.approx(2.0 + 2.0 * math.sin(1.0))


def test_make_grid_targets_row_major():
    ts = make_grid_targets(3, 0.5, origin=(1.0, -1.0), height=2)
    assert ts.n_p == 6
    pos = ts.base_positions()
    # index i sits at column i % width, row i // width
    np.testing.assert_allclose(pos[0], [1.0, -1.0])
    np.testing.assert_allclose(pos[2], [2.0, -1.0])
    np.testing.assert_allclose(pos[3], [1.0, -0.5])
    square = make_grid_targets(4, 1.0)
    assert square.n_p == 16


def test_make_grid_targets_validation():
    with pytest.raises(ValueError):
        make_grid_targets(0, 1.0)
    with pytest.raises(ValueError):
        make_grid_targets(3, 0.0)


def test_drifting_grid_moves_together():
    sway = DriftParams(velocity=0.1)
    ts = make_grid_targets(2, 1.0, drift_x=sway)
    p0 = ts.positions_at(0.0)
    p5 = ts.positions_at(5.0)
    np.testing.assert_allclose(p5[:, 0] - p0[:, 0], 0.5)
    np.testing.assert_allclose(p5[:, 1], p0[:, 1])
