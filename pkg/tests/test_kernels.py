"""Kernel backends: numba and numpy must agree, gradients must be exact."""

import os
import subprocess
import sys

import numpy as np
import pytest

import impdr.kernels as kernels
from impdr.kernels import reference

try:
    from impdr.kernels import jit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    jit = None
    HAVE_NUMBA = False

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")


def _random_problem(seed, n=8, m=2, n_p=3):
    rng = np.random.default_rng(seed)
    q0 = rng.uniform(-1, 1, (m, 2))
    v0 = rng.uniform(-0.5, 0.5, (m, 2))
    r0 = rng.uniform(0, 5, n_p)
    u = rng.uniform(-2, 2, (n, m, 2))
    tpos = rng.uniform(-1, 1, (n + 1, n_p, 2))
    return q0, v0, r0, u, tpos


def _backward_args(fwd, u, tpos, m, n_p, seed=0, stage_mode=0, terminal_mode=0):
    rng = np.random.default_rng(seed + 100)
    q, v, r, cov, sat = fwd
    n1 = q.shape[0]
    endpoint = rng.uniform(-1, 1, (m, 2))
    u_prev = rng.uniform(-1, 1, (m, 2))
    w_vel = rng.uniform(0, 1, (n1, m))
    pairs = np.array([[0, 1]], dtype=np.int64) if m >= 2 else \
        np.zeros((0, 2), dtype=np.int64)
    w_dist = rng.uniform(0, 1, (n1, pairs.shape[0]))
    return (q, v, r, cov, sat, u, tpos, 0.25, 1.0, 0.3, 8.0, 2000.0,
            True, stage_mode, terminal_mode, endpoint, 1e3, 1e-3, u_prev,
            w_vel, 1.5, w_dist, pairs, 0.4)


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_forward_backends_agree(seed):
    q0, v0, r0, u, tpos = _random_problem(seed)
    for sharp in (2000.0, 50.0, -1.0):  # -1 selects the hard saturation
        ref = reference.rollout_forward(q0, v0, r0, u, tpos, 0.25, 1.0,
                                        0.3, 8.0, sharp)
        jt = jit.rollout_forward(q0, v0, r0, u, tpos, 0.25, 1.0,
                                 0.3, 8.0, sharp)
        for a, b in zip(ref, jt):
            np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


@needs_numba
@pytest.mark.parametrize("seed,stage_mode,terminal_mode",
                         [(0, 0, 0), (1, 0, 1), (2, 1, 0), (3, 1, 1)])
def test_backward_backends_agree(seed, stage_mode, terminal_mode):
    q0, v0, r0, u, tpos = _random_problem(seed)
    fwd = reference.rollout_forward(q0, v0, r0, u, tpos, 0.25, 1.0, 0.3, 8.0,
                                    2000.0)
    args = _backward_args(fwd, u, tpos, 2, 3, seed, stage_mode, terminal_mode)
    g_ref = reference.rollout_backward(*args)
    g_jit = jit.rollout_backward(*args)
    np.testing.assert_allclose(g_ref, g_jit, rtol=1e-12, atol=1e-12)


@needs_numba
def test_horizon_cost_backends_agree():
    q0, v0, r0, u, tpos = _random_problem(7)
    q, v, r, cov, sat = reference.rollout_forward(q0, v0, r0, u, tpos, 0.25,
                                                  1.0, 0.3, 8.0, 2000.0)
    rng = np.random.default_rng(7)
    endpoint = rng.uniform(-1, 1, (2, 2))
    u_prev = rng.uniform(-1, 1, (2, 2))
    for sm in (0, 1):
        for tm in (0, 1):
            a = reference.horizon_cost(r, q, u, u_prev, sm, tm, endpoint, 1e3, 1e-3)
            b = jit.horizon_cost(r, q, u, u_prev, sm, tm, endpoint, 1e3, 1e-3)
            assert a == pytest.approx(b, rel=1e-14)


def test_forward_rollout_matches_model_recurrence():
    # the batched kernel must reproduce the plain per-step model updates
    from impdr.models import RewardVector, SensorParams, VehicleState
    from impdr.models import reward_step, vehicle_step

    q0, v0, r0, u, tpos = _random_problem(13)
    dt, gain = 0.25, 1.0
    sensor = SensorParams(0.3, 8.0)
    q, v, r, cov, sat = kernels.rollout_forward(q0, v0, r0, u, tpos, dt, gain,
                                                sensor.cutoff, sensor.degree,
                                                -1.0)
    states = [VehicleState(q0[j], v0[j]) for j in range(2)]
    rv = RewardVector(r0, gain)
    for k in range(u.shape[0]):
        rv = reward_step(rv, tpos[k], np.stack([s.position for s in states]),
                         sensor, dt)
        states = [vehicle_step(s, u[k, j], dt) for j, s in enumerate(states)]
        np.testing.assert_allclose(r[k + 1], rv.values, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(
            q[k + 1], np.stack([s.position for s in states]), rtol=1e-12)


def test_backward_matches_finite_differences():
    # adjoint gradient of the smooth horizon cost wrt every control entry
    q0, v0, r0, u, tpos = _random_problem(21, n=6, m=2, n_p=2)
    dt, gain, cutoff, degree, sharp = 0.25, 1.0, 0.3, 4.0, 2000.0
    rng = np.random.default_rng(21)
    endpoint = rng.uniform(-1, 1, (2, 2))
    u_prev = rng.uniform(-1, 1, (2, 2))
    n1 = u.shape[0] + 1
    zero_wv = np.zeros((n1, 2))
    no_pairs = np.zeros((0, 2), dtype=np.int64)
    zero_wd = np.zeros((n1, 0))

    def cost(uu):
        q, v, r, cov, sat = kernels.rollout_forward(
            q0, v0, r0, uu, tpos, dt, gain, cutoff, degree, sharp)
        return kernels.horizon_cost(r, q, uu, u_prev, 0, 1, endpoint, 1e3, 1e-3)

    fwd = kernels.rollout_forward(q0, v0, r0, u, tpos, dt, gain, cutoff,
                                  degree, sharp)
    grad = kernels.rollout_backward(
        *fwd, u, tpos, dt, gain, cutoff, degree, sharp, True, 0, 1,
        endpoint, 1e3, 1e-3, u_prev, zero_wv, 1.5, zero_wd, no_pairs, 0.4)

    h = 1e-6
    for idx in np.ndindex(u.shape):
        up, um = u.copy(), u.copy()
        up[idx] += h
        um[idx] -= h
        fd = (cost(up) - cost(um)) / (2 * h)
        assert grad[idx] == pytest.approx(fd, rel=2e-5, abs=1e-7)


def test_kernels_deterministic():
    q0, v0, r0, u, tpos = _random_problem(5)
    a = kernels.rollout_forward(q0, v0, r0, u, tpos, 0.25, 1.0, 0.3, 8.0, 2000.0)
    b = kernels.rollout_forward(q0, v0, r0, u, tpos, 0.25, 1.0, 0.3, 8.0, 2000.0)
    for x, y in zip(a, b):
        assert x.tobytes() == y.tobytes()


@pytest.mark.parametrize("flag,want", [("numpy", "numpy"), ("numba", "numba")])
def test_backend_env_flag(flag, want):
    if flag == "numba" and not HAVE_NUMBA:
        pytest.skip("numba unavailable")
    code = ("import impdr.kernels as k; print(k.backend_name())")
    env = dict(os.environ, IMPDR_BACKEND=flag)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == want


def test_backend_env_flag_rejects_garbage():
    code = "import impdr.kernels"
    env = dict(os.environ, IMPDR_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True)
    assert out.returncode != 0
    assert "IMPDR_BACKEND" in out.stderr
