"""Numba-compiled horizon-rollout kernels.

Same contracts as :mod:`impdr.kernels.reference`; see that module for the
layout and math.  These are scalar-loop versions that numba turns into tight
machine code.  fastmath stays off so results track the reference backend to
rounding error and runs are reproducible.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _upow(z, degree):
    half = 0.5 * degree
    ihalf = int(half)
    if half == ihalf:
        out = 1.0
        base = z
        e = ihalf
        while e > 0:
            if e & 1:
                out *= base
            base *= base
            e >>= 1
        return out
    return z ** half


@njit(cache=True)
def _saturate(c, sharpness):
    if sharpness <= 0.0:
        return min(1.0, c)
    y = sharpness * (1.0 - c)
    softplus = max(y, 0.0) + math.log1p(math.exp(-abs(y)))
    return 1.0 - softplus / sharpness


@njit(cache=True)
def _saturate_slope(c, sharpness):
    if sharpness <= 0.0:
        return 1.0 if c < 1.0 else 0.0
    y = sharpness * (1.0 - c)
    if y >= 0.0:
        return 1.0 / (1.0 + math.exp(-y))
    e = math.exp(y)
    return e / (1.0 + e)


@njit(cache=True)
def rollout_forward(q0, v0, r0, u, tpos, dt, k_gain, cutoff, degree, sharpness):
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
    half_dt2 = 0.5 * dt * dt
    for k in range(n_steps):
        for i in range(n):
            px = tpos[k, i, 0]
            py = tpos[k, i, 1]
            c = 0.0
            for j in range(m):
                dx = px - q[k, j, 0]
                dy = py - q[k, j, 1]
                c += 1.0 / (1.0 + _upow((dx * dx + dy * dy) * inv_c2, degree))
            cov[k, i] = c
            s = _saturate(c, sharpness)
            sat[k, i] = s
            r[k + 1, i] = (r[k, i] + dt * k_gain) * (1.0 - s)
        for j in range(m):
            for ax in range(2):
                q[k + 1, j, ax] = q[k, j, ax] + v[k, j, ax] * dt + half_dt2 * u[k, j, ax]
                v[k + 1, j, ax] = v[k, j, ax] + dt * u[k, j, ax]
    return q, v, r, cov, sat


@njit(cache=True)
def horizon_cost(r, q, u, u_prev, stage_mode, terminal_mode, endpoint,
                 endpoint_weight, k_r):
    n_steps = u.shape[0]
    m = u.shape[1]
    n = r.shape[1]
    total = 0.0
    if stage_mode == 0:
        for k in range(n_steps):
            for i in range(n):
                total += r[k, i] * r[k, i]
    else:
        for k in range(n_steps):
            for i in range(n):
                total += r[k, i]
    if terminal_mode == 0:
        for i in range(n):
            total += r[n_steps, i] * r[n_steps, i] if stage_mode == 0 else r[n_steps, i]
    else:
        for j in range(m):
            dx = q[n_steps, j, 0] - endpoint[j, 0]
            dy = q[n_steps, j, 1] - endpoint[j, 1]
            total += endpoint_weight * (dx * dx + dy * dy)
    if k_r > 0.0:
        for k in range(n_steps):
            for j in range(m):
                for ax in range(2):
                    prev = u_prev[j, ax] if k == 0 else u[k - 1, j, ax]
                    d = u[k, j, ax] - prev
                    total += k_r * d * d
    return total


@njit(cache=True)
def rollout_backward(q, v, r, cov, sat, u, tpos, dt, k_gain, cutoff, degree,
                     sharpness, include_cost, stage_mode, terminal_mode,
                     endpoint, endpoint_weight, k_r, u_prev,
                     w_vel, v_max, w_dist, pairs, d_min):
    n_steps = u.shape[0]
    m = q.shape[1]
    n = r.shape[1]
    n_pairs = pairs.shape[0]
    grad = np.zeros((n_steps, m, 2))
    lam_r = np.zeros(n)
    lam_q = np.zeros((m, 2))
    lam_v = np.zeros((m, 2))

    if include_cost:
        if terminal_mode == 0:
            for i in range(n):
                lam_r[i] = 2.0 * r[n_steps, i] if stage_mode == 0 else 1.0
        else:
            for j in range(m):
                lam_q[j, 0] += 2.0 * endpoint_weight * (q[n_steps, j, 0] - endpoint[j, 0])
                lam_q[j, 1] += 2.0 * endpoint_weight * (q[n_steps, j, 1] - endpoint[j, 1])
    if v_max > 0.0:
        for j in range(m):
            wj = w_vel[n_steps, j] / v_max
            lam_v[j, 0] += wj * v[n_steps, j, 0]
            lam_v[j, 1] += wj * v[n_steps, j, 1]
    for p in range(n_pairs):
        w = w_dist[n_steps, p]
        if w != 0.0:
            i = pairs[p, 0]
            j = pairs[p, 1]
            dx = (q[n_steps, i, 0] - q[n_steps, j, 0]) / d_min
            dy = (q[n_steps, i, 1] - q[n_steps, j, 1]) / d_min
            lam_q[i, 0] -= w * dx
            lam_q[i, 1] -= w * dy
            lam_q[j, 0] += w * dx
            lam_q[j, 1] += w * dy

    inv_c2 = 1.0 / (cutoff * cutoff)
    half_dt2 = 0.5 * dt * dt
    for k in range(n_steps - 1, -1, -1):
        for j in range(m):
            grad[k, j, 0] = half_dt2 * lam_q[j, 0] + dt * lam_v[j, 0]
            grad[k, j, 1] = half_dt2 * lam_q[j, 1] + dt * lam_v[j, 1]

        # velocity chain uses lam_q before the coverage terms of step k land in it
        for j in range(m):
            lam_v[j, 0] += dt * lam_q[j, 0]
            lam_v[j, 1] += dt * lam_q[j, 1]
            if v_max > 0.0:
                wj = w_vel[k, j] / v_max
                lam_v[j, 0] += wj * v[k, j, 0]
                lam_v[j, 1] += wj * v[k, j, 1]

        for i in range(n):
            coef = lam_r[i] * (r[k, i] + dt * k_gain) * _saturate_slope(cov[k, i], sharpness)
            if coef != 0.0:
                px = tpos[k, i, 0]
                py = tpos[k, i, 1]
                for j in range(m):
                    dx = px - q[k, j, 0]
                    dy = py - q[k, j, 1]
                    s2 = dx * dx + dy * dy
                    if s2 > 0.0:
                        up = _upow(s2 * inv_c2, degree)
                        f = 1.0 / (1.0 + up)
                        gfac = degree * up * f * f / s2
                        lam_q[j, 0] -= coef * gfac * dx
                        lam_q[j, 1] -= coef * gfac * dy
            lam_r[i] = lam_r[i] * (1.0 - sat[k, i])
            if include_cost:
                lam_r[i] += 2.0 * r[k, i] if stage_mode == 0 else 1.0

        for p in range(n_pairs):
            w = w_dist[k, p]
            if w != 0.0:
                i = pairs[p, 0]
                j = pairs[p, 1]
                dx = (q[k, i, 0] - q[k, j, 0]) / d_min
                dy = (q[k, i, 1] - q[k, j, 1]) / d_min
                lam_q[i, 0] -= w * dx
                lam_q[i, 1] -= w * dy
                lam_q[j, 0] += w * dx
                lam_q[j, 1] += w * dy

    if include_cost and k_r > 0.0:
        two_kr = 2.0 * k_r
        for k in range(n_steps):
            for j in range(m):
                for ax in range(2):
                    prev = u_prev[j, ax] if k == 0 else u[k - 1, j, ax]
                    grad[k, j, ax] += two_kr * (u[k, j, ax] - prev)
                    if k + 1 < n_steps:
                        grad[k, j, ax] -= two_kr * (u[k + 1, j, ax] - u[k, j, ax])
    return grad
