"""Pure NumPy horizon-rollout kernels.

These are the fallback implementations of the planner's hot loops: the forward
rollout of fleet + reward dynamics over a horizon, and the reverse
(adjoint) sweep that accumulates the gradient of the horizon cost and of
weighted motion constraints with respect to the acceleration sequence.

The numba backend in :mod:`impdr.kernels.jit` implements the same signatures;
:mod:`impdr.kernels` picks one at import time.

State layout (N = horizon steps, m = vehicles, n = targets):

    q, v : (N+1, m, 2)   positions / velocities, row k = sample instant k
    r    : (N+1, n)      rewards
    u    : (N,   m, 2)   accelerations, u[k] acts on interval [k, k+1]
    tpos : (N+1, n, 2)   target positions per sample instant

Reward transition (coverage evaluated at instant k):

    cov[k, i] = sum_j f_b2(tpos[k, i] - q[k, j])
    sat[k, i] = soft(min(1, cov)) with sharpness beta; hard min when beta <= 0
    r[k+1, i] = (r[k, i] + dt * k_gain) * (1 - sat[k, i])

The soft saturation is 1 - softplus(beta * (1 - c)) / beta, which is C^1 and
deviates from min(1, c) by less than 1e-6 outside a 0.01-wide band around
c = 1 for beta >= 2000.
"""

from __future__ import annotations

import numpy as np


def _upow(z: np.ndarray, degree: float) -> np.ndarray:
    # (s^2 / c^2)^(degree/2) without a sqrt when the half-degree is integral
    half = 0.5 * degree
    ihalf = int(half)
    if half == ihalf:
        out = np.ones_like(z)
        base = z.copy()
        e = ihalf
        while e > 0:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out
    return z ** half


def _saturate(c: np.ndarray, sharpness: float) -> np.ndarray:
    if sharpness <= 0.0:
        return np.minimum(1.0, c)
    y = sharpness * (1.0 - c)
    softplus = np.maximum(y, 0.0) + np.log1p(np.exp(-np.abs(y)))
    return 1.0 - softplus / sharpness


def _saturate_slope(c: np.ndarray, sharpness: float) -> np.ndarray:
    if sharpness <= 0.0:
        return (c < 1.0).astype(float)
    y = sharpness * (1.0 - c)
    # logistic, written to avoid overflow for large |y|
    out = np.empty_like(c)
    pos = y >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-y[pos]))
    e = np.exp(y[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def rollout_forward(q0, v0, r0, u, tpos, dt, k_gain, cutoff, degree, sharpness):
    """Roll the fleet and reward dynamics over the horizon.

    Returns (q, v, r, cov, sat) with the layout documented in the module
    docstring.
    """
    n_steps = u.shape[0]
    m = q0.shape[0]
    n = r0.shape[0]
    q = np.empty((n_steps + 1, m, 2))
    v = np.empty((n_steps + 1, m, 2))
    r = np.empty((n_steps + 1, n))
    cov = np.empty((n_steps, n))
    sat = np.empty((n_steps, n))
    q[0] = q0
    v[0] = v0
    r[0] = r0
    inv_c2 = 1.0 / (cutoff * cutoff)
    for k in range(n_steps):
        diff = tpos[k][:, None, :] - q[k][None, :, :]
        s2 = diff[..., 0] ** 2 + diff[..., 1] ** 2
        f = 1.0 / (1.0 + _upow(s2 * inv_c2, degree))
        cov[k] = f.sum(axis=1)
        sat[k] = _saturate(cov[k], sharpness)
        r[k + 1] = (r[k] + dt * k_gain) * (1.0 - sat[k])
        q[k + 1] = q[k] + v[k] * dt + (0.5 * dt * dt) * u[k]
        v[k + 1] = v[k] + dt * u[k]
    return q, v, r, cov, sat


def horizon_cost(r, q, u, u_prev, stage_mode, terminal_mode, endpoint,
                 endpoint_weight, k_r):
    """Scalar horizon cost of rolled-out trajectories (see rollout_backward)."""
    if stage_mode == 0:
        total = float((r[:-1] ** 2).sum())
    else:
        total = float(r[:-1].sum())
    if terminal_mode == 0:
        total += float((r[-1] ** 2).sum()) if stage_mode == 0 else float(r[-1].sum())
    else:
        d = q[-1] - endpoint
        total += endpoint_weight * float((d * d).sum())
    if k_r > 0.0:
        du0 = u[0] - u_prev
        total += k_r * float((du0 * du0).sum())
        if u.shape[0] > 1:
            du = u[1:] - u[:-1]
            total += k_r * float((du * du).sum())
    return total


def _add_distance_seeds(lam_q, qk, w_row, pairs, d_min):
    # c_pair = (d_min^2 - ||q_i - q_j||^2) / (2 d_min); seeds w * dc/dq
    for p in range(pairs.shape[0]):
        w = w_row[p]
        if w == 0.0:
            continue
        i = pairs[p, 0]
        j = pairs[p, 1]
        d = (qk[i] - qk[j]) / d_min
        lam_q[i] -= w * d
        lam_q[j] += w * d


def rollout_backward(q, v, r, cov, sat, u, tpos, dt, k_gain, cutoff, degree,
                     sharpness, include_cost, stage_mode, terminal_mode,
                     endpoint, endpoint_weight, k_r, u_prev,
                     w_vel, v_max, w_dist, pairs, d_min):
    """Adjoint sweep: gradient of cost and weighted constraints wrt ``u``.

    The returned gradient is that of

        include_cost * [ sum_k f_l(r_k) + f_m(x_N) + k_r * sum_k ||u_k - u_{k-1}||^2 ]
        + sum_{k,j} w_vel[k, j] * (||v_{k,j}||^2 - v_max^2) / (2 v_max)
        + sum_{k,p} w_dist[k, p] * (d_min^2 - ||q_i - q_j||^2) / (2 d_min)

    with f_l = sum_i r_i^2 (stage_mode 0) or sum_i r_i (stage_mode 1) and the
    terminal either repeating the stage form (terminal_mode 0) or a soft
    endpoint penalty endpoint_weight * sum_j ||q_N,j - endpoint_j||^2
    (terminal_mode 1).  u_{-1} is ``u_prev``.  Constraint weight rows at k = 0
    touch only the fixed initial state and therefore contribute nothing.
    """
    n_steps = u.shape[0]
    n = r.shape[1]
    grad = np.zeros_like(u)
    lam_r = np.zeros(n)
    lam_q = np.zeros_like(q[0])
    lam_v = np.zeros_like(v[0])

    if include_cost:
        if terminal_mode == 0:
            lam_r[:] = 2.0 * r[n_steps] if stage_mode == 0 else 1.0
        else:
            lam_q += (2.0 * endpoint_weight) * (q[n_steps] - endpoint)
    if v_max > 0.0:
        lam_v += (w_vel[n_steps][:, None] / v_max) * v[n_steps]
    if pairs.shape[0]:
        _add_distance_seeds(lam_q, q[n_steps], w_dist[n_steps], pairs, d_min)

    inv_c2 = 1.0 / (cutoff * cutoff)
    for k in range(n_steps - 1, -1, -1):
        grad[k] = (0.5 * dt * dt) * lam_q + dt * lam_v

        diff = tpos[k][:, None, :] - q[k][None, :, :]
        s2 = diff[..., 0] ** 2 + diff[..., 1] ** 2
        up = _upow(s2 * inv_c2, degree)
        f = 1.0 / (1.0 + up)
        with np.errstate(divide="ignore", invalid="ignore"):
            gfac = np.where(s2 > 0.0, degree * up * f * f / s2, 0.0)
        grown = r[k] + dt * k_gain
        coef = lam_r * grown * _saturate_slope(cov[k], sharpness)

        new_lam_q = lam_q - (coef[:, None, None] * gfac[:, :, None] * diff).sum(axis=0)
        new_lam_v = lam_v + dt * lam_q
        new_lam_r = lam_r * (1.0 - sat[k])
        if include_cost:
            if stage_mode == 0:
                new_lam_r += 2.0 * r[k]
            else:
                new_lam_r += 1.0
        if v_max > 0.0:
            new_lam_v += (w_vel[k][:, None] / v_max) * v[k]
        if pairs.shape[0]:
            _add_distance_seeds(new_lam_q, q[k], w_dist[k], pairs, d_min)
        lam_q, lam_v, lam_r = new_lam_q, new_lam_v, new_lam_r

    if include_cost and k_r > 0.0:
        du = np.empty_like(u)
        du[0] = u[0] - u_prev
        du[1:] = u[1:] - u[:-1]
        grad += (2.0 * k_r) * du
        grad[:-1] -= (2.0 * k_r) * du[1:]
    return grad
