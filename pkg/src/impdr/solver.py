"""Box-constrained nonlinear programming with inequality constraints.

The solver is an augmented Lagrangian method: inequality constraints
c(x) <= 0 enter through the Powell-Hestenes-Rockafellar penalty

    psi(c; lam, mu) = (max(0, lam + mu c)^2 - lam^2) / (2 mu)

and each outer iteration minimises  f(x) + sum psi(c_j)  over the variable
box with a limited-memory BFGS method using projected backtracking line
searches (quadratic interpolation, warm-started step sizes).  Multipliers
update as lam <- max(0, lam + mu c); the penalty mu grows tenfold whenever
the worst violation fails to shrink by 4x.

There is no randomness anywhere, so repeated calls with the same inputs
return bitwise-identical reports.  An optional wall-clock cap makes the
solver return its best iterate so far instead of blocking a control loop.

Constraints can be given two ways:

* a plain callable  x -> (value, gradient)  for a scalar constraint;
* an object with ``values(x) -> array`` and ``weighted_grad(x, w) -> array``
  (the vector form lets a caller bundle many constraints whose combined
  weighted gradient is cheap, e.g. one adjoint sweep for a whole horizon).

Problems may optionally supply ``objective_value`` returning the bare cost;
line-search trials then skip the gradient work entirely.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SolverInputError",
    "SolverConfig",
    "SolverReport",
    "NlpProblem",
    "minimize",
    "check_gradient",
]


class SolverInputError(ValueError):
    """Raised when a problem is malformed or non-finite at the start point."""


@dataclass
class SolverConfig:
    convergence_tol: float = 1e-8  # projected-gradient infinity norm
    feasibility_tol: float = 1e-6  # max inequality violation
    max_outer_iters: int = 25
    max_inner_iters: int = 400  # per outer iteration
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_cap: float = 1e8
    lbfgs_memory: int = 10
    nonmonotone_window: int = 8  # Armijo reference over recent merit values
    wall_clock_cap: float | None = None  # seconds; None disables
    # feasible iterates whose merit improves by less than this relative
    # amount (sustained) count as converged even above convergence_tol;
    # 0 keeps only the float-rounding floor
    progress_rtol: float = 0.0


@dataclass
class SolverReport:
    x: np.ndarray
    fun: float
    status: str  # converged | iteration-capped | wall-clock-capped | degraded
    max_violation: float
    grad_norm: float  # projected gradient, infinity norm
    outer_iters: int
    inner_iters: int
    wall_time: float

    @property
    def converged(self) -> bool:
        return self.status == "converged"


class _CallableBlock:
    """Adapts a list of scalar (value, gradient) callbacks to the block API."""

    def __init__(self, callbacks):
        self.callbacks = list(callbacks)

    def values(self, x):
        return np.array([cb(x)[0] for cb in self.callbacks], dtype=float)

    def weighted_grad(self, x, w):
        out = np.zeros_like(x)
        for wi, cb in zip(w, self.callbacks):
            if wi != 0.0:
                out += wi * np.asarray(cb(x)[1], dtype=float)
        return out


@dataclass
class NlpProblem:
    dim: int
    objective: Callable[[np.ndarray], tuple[float, np.ndarray]]
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    ineq_constraints: Sequence = field(default_factory=tuple)
    objective_value: Callable[[np.ndarray], float] | None = None
    # optional fused gradient of objective + sum_j w_j c_j (one list of
    # weights per constraint block); saves an adjoint sweep per iteration
    fused_grad: Callable | None = None

    def bounds(self):
        lo = np.full(self.dim, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        hi = np.full(self.dim, np.inf) if self.upper is None else np.asarray(self.upper, float)
        if lo.shape != (self.dim,) or hi.shape != (self.dim,):
            raise SolverInputError("bound shapes must match problem dimension")
        if np.any(lo > hi):
            raise SolverInputError("lower bound exceeds upper bound")
        return lo, hi

    def constraint_blocks(self):
        blocks = []
        plain = []
        for c in self.ineq_constraints:
            if hasattr(c, "values") and hasattr(c, "weighted_grad"):
                blocks.append(c)
            else:
                plain.append(c)
        if plain:
            blocks.append(_CallableBlock(plain))
        return blocks


def _two_loop(g, mem_s, mem_y, mem_rho):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(mem_s), reversed(mem_y), reversed(mem_rho)):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if mem_s:
        s, y = mem_s[-1], mem_y[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(zip(mem_s, mem_y, mem_rho), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def minimize(problem: NlpProblem, x0, config: SolverConfig | None = None) -> SolverReport:
    """Solve the boxed, inequality-constrained problem starting from x0."""
    cfg = config or SolverConfig()
    t_start = time.perf_counter()
    lo, hi = problem.bounds()
    x = np.clip(np.asarray(x0, dtype=float).reshape(-1), lo, hi)
    if x.shape != (problem.dim,):
        raise SolverInputError(f"x0 has {x.size} entries, problem.dim is {problem.dim}")

    blocks = problem.constraint_blocks()
    lams = [None] * len(blocks)
    mu = cfg.penalty_init

    def raw_value(xc):
        if problem.objective_value is not None:
            return float(problem.objective_value(xc))
        return float(problem.objective(xc)[0])

    def penalty(cvals):
        total = 0.0
        for lam, c in zip(lams, cvals):
            w = np.maximum(0.0, lam + mu * c)
            total += float(((w * w - lam * lam) / (2.0 * mu)).sum())
        return total

    def merit_value(xc):
        cvals = []
        for idx, b in enumerate(blocks):
            c = np.asarray(b.values(xc), dtype=float)
            if lams[idx] is None:
                lams[idx] = np.zeros(c.size)
            cvals.append(c)
        return raw_value(xc) + penalty(cvals), cvals

    def merit_grad(xc, cvals):
        weights = [np.maximum(0.0, lam + mu * c)
                   for lam, c in zip(lams, cvals)]
        if problem.fused_grad is not None:
            return np.asarray(problem.fused_grad(xc, weights), dtype=float)
        grad = np.asarray(problem.objective(xc)[1], dtype=float).copy()
        for b, w in zip(blocks, weights):
            if np.any(w != 0.0):
                grad += b.weighted_grad(xc, w)
        return grad

    def violation(cvals):
        worst = 0.0
        for c in cvals:
            if c.size:
                worst = max(worst, float(np.max(c)))
        return max(0.0, worst)

    def proj_grad_norm(xc, gc):
        return float(np.max(np.abs(xc - np.clip(xc - gc, lo, hi)))) if xc.size else 0.0

    f, cvals = merit_value(x)
    g = merit_grad(x, cvals)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise SolverInputError("objective or gradient not finite at start point")

    def iter_key(viol, raw):
        # among tolerably feasible iterates the objective decides; the
        # violation only ranks the infeasible ones (an interior point must
        # not outrank a boundary optimum over a 1e-12 constraint residual)
        if viol <= cfg.feasibility_tol:
            return (0, raw, viol)
        return (1, viol, raw)

    best_x = x.copy()
    best_raw = raw_value(x)
    best_viol = violation(cvals)
    best_key = iter_key(best_viol, best_raw)
    status = "iteration-capped"
    inner_total = 0
    outer_done = 0
    inner_tol0 = max(cfg.convergence_tol, 1e-2 * (1.0 + proj_grad_norm(x, g)))
    prev_viol = np.inf
    capped = False
    degraded = False
    accepted_any = False
    stall_rtol = max(1e-13, cfg.progress_rtol)

    for outer in range(cfg.max_outer_iters):
        outer_done = outer + 1
        inner_tol = max(cfg.convergence_tol, inner_tol0 * (0.2 ** outer))
        mem_s, mem_y, mem_rho = [], [], []
        warm_alpha = None
        recent_f = [f]
        floor_hit = False
        f_envelope = f
        since_improve = 0
        stall_span = 2 * max(4, cfg.nonmonotone_window)
        for _ in range(cfg.max_inner_iters):
            if cfg.wall_clock_cap is not None and \
                    time.perf_counter() - t_start > cfg.wall_clock_cap:
                capped = True
                break
            pg = proj_grad_norm(x, g)
            if pg <= inner_tol:
                break
            d = -_two_loop(g, mem_s, mem_y, mem_rho)
            if np.dot(d, g) >= 0.0:
                d = -g
                mem_s, mem_y, mem_rho = [], [], []
            # nonmonotone reference lets the search climb over thin
            # high-curvature walls of the soft saturation
            f_ref = max(recent_f)
            accepted = False
            for attempt in range(2):
                if mem_s:
                    alpha = 1.0
                elif warm_alpha is not None:
                    alpha = min(1.0, 4.0 * warm_alpha)
                else:
                    alpha = min(1.0, 1.0 / max(1.0, float(np.max(np.abs(g)))))
                for _ls in range(60):
                    xt = np.clip(x + alpha * d, lo, hi)
                    step = xt - x
                    if not np.any(step):
                        break
                    gs = float(np.dot(g, step))
                    ft, ct = merit_value(xt)
                    if np.isfinite(ft) and gs < 0.0 and ft <= f_ref + 1e-4 * gs:
                        accepted = True
                        break
                    if abs(gs) <= 1e-13 * (1.0 + abs(f)):
                        break  # directional derivative at rounding noise
                    # quadratic backtrack using the one-dimensional model
                    if np.isfinite(ft) and gs < 0.0:
                        denom = 2.0 * (ft - f - gs)
                        anew = -gs * alpha / denom if denom > 0.0 else 0.5 * alpha
                        alpha = min(0.5 * alpha, max(0.1 * alpha, anew))
                    else:
                        alpha *= 0.5
                if accepted or attempt == 1:
                    break
                # quasi-Newton direction blocked by the box: retry steepest
                d = -g
                mem_s, mem_y, mem_rho = [], [], []
            if not accepted:
                floor_hit = True
                break
            warm_alpha = alpha
            inner_total += 1
            accepted_any = True
            gt = merit_grad(xt, ct)
            if not np.all(np.isfinite(gt)):
                degraded = True
                break
            s = xt - x
            yv = gt - g
            sy = float(np.dot(s, yv))
            if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(yv)):
                mem_s.append(s)
                mem_y.append(yv)
                mem_rho.append(1.0 / sy)
                if len(mem_s) > cfg.lbfgs_memory:
                    mem_s.pop(0)
                    mem_y.pop(0)
                    mem_rho.pop(0)
            x, f, g, cvals = xt, ft, gt, ct
            # progress floor: the monotone envelope of the merit must keep
            # improving, otherwise the soft-saturation wall (or plain float
            # rounding) has eaten the line search and more iterations only
            # wobble in place
            if f < f_envelope - stall_rtol * (1.0 + abs(f_envelope)):
                f_envelope = f
                since_improve = 0
            else:
                since_improve += 1
            recent_f.append(f)
            if len(recent_f) > max(1, cfg.nonmonotone_window):
                recent_f.pop(0)
            viol_now = violation(cvals)
            raw_now = f - penalty(cvals)
            key_now = iter_key(viol_now, raw_now)
            if key_now < best_key:
                best_key = key_now
                best_x = x.copy()
                best_raw = raw_now
                best_viol = viol_now
            if since_improve >= stall_span:
                floor_hit = True
                break

        viol = violation(cvals)
        raw = raw_value(x)
        key = iter_key(viol, raw)
        if key < best_key:
            best_key = key
            best_x = x.copy()
            best_raw = raw
            best_viol = viol
        if degraded:
            status = "degraded"
            break
        if capped:
            status = "wall-clock-capped"
            break
        if viol <= cfg.feasibility_tol and proj_grad_norm(x, g) <= cfg.convergence_tol:
            status = "converged"
            break
        if floor_hit and accepted_any and viol <= cfg.feasibility_tol:
            # feasible and out of representable descent; grad_norm in the
            # report still carries the true projected gradient
            status = "converged"
            break
        if blocks:
            for idx, c in enumerate(cvals):
                lams[idx] = np.maximum(0.0, lams[idx] + mu * c)
            if viol > 0.25 * prev_viol and viol > cfg.feasibility_tol:
                mu = min(mu * cfg.penalty_growth, cfg.penalty_cap)
            prev_viol = viol
            # refresh merit under the updated multipliers
            f, cvals = merit_value(x)
            g = merit_grad(x, cvals)
            if not np.isfinite(f) or not np.all(np.isfinite(g)):
                status = "degraded"
                break

    if status == "converged":
        key = iter_key(violation(cvals), raw_value(x))
        if best_key < key:
            # nonmonotone wandering can end above the incumbent
            x = best_x
            f, cvals = merit_value(x)
            g = merit_grad(x, cvals)
        rep_x = x
        rep_f = raw_value(x)
        rep_v = violation(cvals)
        rep_pg = proj_grad_norm(x, g)
    else:
        rep_x = best_x
        rep_f = best_raw
        rep_v = best_viol
        try:
            rep_pg = proj_grad_norm(best_x, problem.objective(best_x)[1])
        except Exception:
            rep_pg = float("nan")
    return SolverReport(
        x=rep_x,
        fun=float(rep_f),
        status=status,
        max_violation=float(rep_v),
        grad_norm=float(rep_pg),
        outer_iters=outer_done,
        inner_iters=inner_total,
        wall_time=time.perf_counter() - t_start,
    )


def check_gradient(problem: NlpProblem, x, step: float = 1e-6) -> float:
    """Max componentwise relative error of the objective gradient vs central FD.

    The error for component i is |g_i - fd_i| / (1 + |fd_i|), so a corrupted
    component of size 1 on a gradient of size G reports roughly 1 / (1 + G).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    _, g = problem.objective(x)
    g = np.asarray(g, dtype=float)
    worst = 0.0
    for i in range(x.size):
        xp = x.copy()
        xp[i] += step
        xm = x.copy()
        xm[i] -= step
        fd = (problem.objective(xp)[0] - problem.objective(xm)[0]) / (2.0 * step)
        worst = max(worst, abs(g[i] - fd) / (1.0 + abs(fd)))
    return worst
