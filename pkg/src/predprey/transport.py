"""Linear transport with zero-inflow boundary: characteristics oracle + upwind FV.

Solves  d_t u + div(c(t,x) u) = A(t,x) u + a(t,x)  on the box with the
Dirichlet condition enforced only where characteristics enter the domain
(zero-inflow); at outflow the condition is dropped.

Two independent routes:

* a characteristics oracle that integrates backward along  dx/dt = c(t,x)
  (RK4 on interpolated velocity, bisection-refined boundary crossings) and
  assembles the representation-formula value, exact up to ODE/quadrature
  error; and
* a conservative dimension-split upwind finite-volume scheme under a CFL
  restriction, the production stepping path.

Every stability/variation estimate used by the coupled system ships here as
an executable check against measured norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .grid import (Field, Grid, VectorField, divergence, gradient_components,
                   interp_field, interp_values, norm_l1, norm_linf,
                   total_variation)
from .series import (ConstantFieldSeries, ConstantVectorSeries, FieldSeries,
                     FuncFieldSeries, SampledFieldSeries, SampledVectorSeries,
                     Trace, VectorSeries, step_times)
from .testfunctions import SineTestFunction


class CflViolation(ValueError):
    pass


@dataclass(frozen=True)
class TransportProblem:
    grid: Grid
    c: VectorSeries
    A: FieldSeries | None
    a: FieldSeries | None
    u0: Field


@dataclass(frozen=True)
class CharPath:
    """One backward characteristic: samples of X(s; t_origin, x_origin).

    ``times`` ascend from either 0 (path reaches the initial time) or the
    boundary entry time (path leaves the domain); in the latter case the
    first sample sits on the boundary and ``exit_time`` records when.
    """

    t_origin: float
    x_origin: np.ndarray
    times: np.ndarray
    points: np.ndarray  # (len(times), dim)
    exited: bool
    exit_time: float | None


def divergence_series(c_series: VectorSeries, grid: Grid) -> FieldSeries:
    if isinstance(c_series, SampledVectorSeries):
        return SampledFieldSeries(c_series.times, tuple(divergence(v) for v in c_series.fields))
    if isinstance(c_series, ConstantVectorSeries):
        return ConstantFieldSeries(divergence(c_series.value))
    return FuncFieldSeries(lambda t: divergence(c_series.at(t)))


def _inside(grid: Grid, pts: np.ndarray) -> np.ndarray:
    ok = np.ones(pts.shape[0], dtype=bool)
    for ax, (lo, hi) in enumerate(grid.spec.bounds):
        ok &= (pts[:, ax] > lo) & (pts[:, ax] < hi)
    return ok


def _clip_to_box(grid: Grid, pts: np.ndarray) -> np.ndarray:
    out = pts.copy()
    for ax, (lo, hi) in enumerate(grid.spec.bounds):
        out[:, ax] = np.clip(out[:, ax], lo, hi)
    return out


class _BackwardPaths:
    """Batched backward characteristics on a shared uniform time grid."""

    def __init__(self, c_series: VectorSeries, grid: Grid, t_end: float,
                 points: np.ndarray, dt_ode: float):
        self.grid = grid
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        m = pts.shape[0]
        n_steps = max(1, int(math.ceil(t_end / dt_ode - 1e-12)))
        h = t_end / n_steps
        # ascending times 0 .. t_end; positions filled backward from the top
        self.times = np.linspace(0.0, t_end, n_steps + 1)
        self.positions = np.empty((n_steps + 1, m, grid.dim))
        self.positions[-1] = pts
        self.exit_time = np.full(m, np.nan)
        alive = np.ones(m, dtype=bool)

        def vel(t: float, p: np.ndarray) -> np.ndarray:
            vf = c_series.at(t)
            return np.stack(
                [interp_values(grid, vf.components[k], p) for k in range(grid.dim)],
                axis=-1,
            )

        def rk4(t: float, p: np.ndarray, step: float):
            k1 = vel(t, p)
            k2 = vel(t - step / 2, p - step / 2 * k1)
            k3 = vel(t - step / 2, p - step / 2 * k2)
            k4 = vel(t - step, p - step * k3)
            return p - step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), k1, k4

        tol_t = max(1e-10 * t_end, 1e-15)
        pos = pts.copy()
        for j in range(n_steps, 0, -1):
            t_hi = self.times[j]
            alive_before = alive.copy()
            stepped, k1, k4 = rk4(t_hi, pos, h)
            crossed = alive_before & ~_inside(grid, stepped)
            if np.any(crossed):
                # bisection on the cubic Hermite dense output of the step
                idx = np.nonzero(crossed)[0]
                y0, y1 = pos[idx], stepped[idx]
                m0, m1 = -h * k1[idx], -h * k4[idx]

                def dense(lam):
                    lam = lam[:, None]
                    l2, l3 = lam * lam, lam * lam * lam
                    return ((2 * l3 - 3 * l2 + 1) * y0 + (l3 - 2 * l2 + lam) * m0
                            + (-2 * l3 + 3 * l2) * y1 + (l3 - l2) * m1)

                lam_in = np.zeros(len(idx))
                lam_out = np.ones(len(idx))
                for _ in range(max(1, int(np.ceil(np.log2(h / tol_t))))):
                    mid = 0.5 * (lam_in + lam_out)
                    inside = _inside(grid, dense(mid))
                    lam_in = np.where(inside, mid, lam_in)
                    lam_out = np.where(inside, lam_out, mid)
                self.exit_time[idx] = t_hi - lam_out * h
                stepped[idx] = _clip_to_box(grid, dense(lam_out))
                alive[idx] = False
            # crossed points carry their exit position; dead points stay frozen
            pos = np.where(alive_before[:, None], stepped, pos)
            self.positions[j - 1] = pos
        self.exited = ~np.isnan(self.exit_time)


def trace_characteristic(problem: TransportProblem, t_end: float, x_end,
                         dt_ode: float) -> CharPath:
    """Backward characteristic through (t_end, x_end), exit-time refined."""
    x_end = np.atleast_1d(np.asarray(x_end, dtype=float))
    if not _inside(problem.grid, x_end[None, :])[0]:
        raise ValueError(f"query point {x_end} is not inside the domain")
    if t_end <= 0:
        return CharPath(t_end, x_end, np.array([0.0]), x_end[None, :], False, None)
    paths = _BackwardPaths(problem.c, problem.grid, t_end, x_end[None, :], dt_ode)
    times = paths.times
    pts = paths.positions[:, 0, :]
    if bool(paths.exited[0]):
        exit_time = float(paths.exit_time[0])
        keep = times > exit_time + 1e-15
        # the frozen samples below the crossing all hold the exact exit position
        times_out = np.concatenate([[exit_time], times[keep]])
        pts_out = np.concatenate([pts[0][None, :], pts[keep]])
        return CharPath(t_end, x_end, times_out, pts_out, True, exit_time)
    return CharPath(t_end, x_end, times, pts, False, None)


def exponential_weight(path: CharPath, problem: TransportProblem, tau: float,
                       t: float, n_nodes: int | None = None) -> float:
    """exp of the Simpson quadrature of A - div c along the stored path."""
    lo = float(path.times[0])
    if not (lo - 1e-9 <= tau <= t <= path.t_origin + 1e-9):
        raise ValueError(f"[{tau}, {t}] outside the path span [{lo}, {path.t_origin}]")
    if t - tau <= 0:
        return 1.0
    if n_nodes is None:
        span = max(1, int(math.ceil((t - tau) / max(path.times[-1] - path.times[0], 1e-300)
                                    * (len(path.times) - 1))))
        n_nodes = max(16, 2 * span)
    if n_nodes % 2 == 1:
        n_nodes += 1
    nodes = np.linspace(tau, t, n_nodes + 1)
    pts = np.stack(
        [np.interp(nodes, path.times, path.points[:, ax]) for ax in range(path.points.shape[1])],
        axis=-1,
    )
    div_series = divergence_series(problem.c, problem.grid)
    g = np.empty(len(nodes))
    for i, s in enumerate(nodes):
        val = -interp_field(div_series.at(s), pts[i][None, :])[0]
        if problem.A is not None:
            val += interp_field(problem.A.at(s), pts[i][None, :])[0]
        g[i] = val
    return float(np.exp(integrate.simpson(g, x=nodes)))


def characteristics_solution_at(problem: TransportProblem, t: float,
                                points: np.ndarray, dt_ode: float) -> np.ndarray:
    """Representation-formula value at each query point (vectorized oracle).

    Points whose backward path reaches the initial time pick up the advected
    initial datum plus the accumulated source; points whose path enters
    through the boundary only accumulate the source after the entry time,
    realizing the zero-inflow condition exactly.
    """
    grid = problem.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if t <= 0:
        return interp_field(problem.u0, pts)
    paths = _BackwardPaths(problem.c, grid, t, pts, dt_ode)
    s = paths.times                       # ascending, (S+1,)
    X = paths.positions                   # (S+1, m, dim)
    m = pts.shape[0]
    div_series = divergence_series(problem.c, grid)
    g = np.empty((len(s), m))
    a_vals = np.zeros((len(s), m)) if problem.a is not None else None
    for i, si in enumerate(s):
        g[i] = -interp_field(div_series.at(si), X[i])
        if problem.A is not None:
            g[i] += interp_field(problem.A.at(si), X[i])
        if a_vals is not None:
            a_vals[i] = interp_field(problem.a.at(si), X[i])
    cum_g = integrate.cumulative_simpson(g, x=s, axis=0, initial=0.0)
    weight = np.exp(cum_g[-1] - cum_g)    # E(s_i, t) per node and point
    values = np.zeros(m)
    interior = ~paths.exited
    if np.any(interior):
        u0_along = interp_field(problem.u0, X[0][interior])
        values[interior] = u0_along * weight[0][interior]
        if a_vals is not None:
            cum_ae = integrate.cumulative_simpson(a_vals * weight, x=s, axis=0, initial=0.0)
            values[interior] += cum_ae[-1][interior]
    if np.any(paths.exited) and a_vals is not None:
        cum_ae = integrate.cumulative_simpson(a_vals * weight, x=s, axis=0, initial=0.0)
        for idx in np.nonzero(paths.exited)[0]:
            tau_star = paths.exit_time[idx]
            k = int(np.searchsorted(s, tau_star, side="left"))
            tail = cum_ae[-1, idx] - cum_ae[k, idx]
            # partial segment [tau*, s_k]: trapezoid with the exact exit sample
            seg = s[k] - tau_star
            if seg > 1e-15:
                x_star = X[0, idx][None, :]
                g_star = -interp_field(div_series.at(tau_star), x_star)[0]
                if problem.A is not None:
                    g_star += interp_field(problem.A.at(tau_star), x_star)[0]
                a_star = interp_field(problem.a.at(tau_star), x_star)[0]
                w_star = weight[k, idx] * math.exp(0.5 * seg * (g_star + g[k, idx]))
                tail += 0.5 * seg * (a_star * w_star + a_vals[k, idx] * weight[k, idx])
            values[idx] = tail
    return values


def eval_characteristics_solution(problem: TransportProblem, t: float, x,
                                  dt_ode: float) -> float:
    return float(characteristics_solution_at(problem, t, np.atleast_1d(x)[None, :], dt_ode)[0])


def characteristics_solution_field(problem: TransportProblem, t: float,
                                   dt_ode: float) -> Field:
    vals = characteristics_solution_at(problem, t, problem.grid.center_points(), dt_ode)
    return Field(problem.grid, vals.reshape(problem.grid.shape))


def _upwind_sweep(values: np.ndarray, cvals: np.ndarray, dt: float, dx: float,
                  axis: int) -> np.ndarray:
    """Conservative upwind transport along one axis, zero-inflow walls."""
    v = np.moveaxis(values, axis, 0)
    c = np.moveaxis(cvals, axis, 0)
    c_face = 0.5 * (c[:-1] + c[1:])
    flux_interior = np.maximum(c_face, 0.0) * v[:-1] + np.minimum(c_face, 0.0) * v[1:]
    flux_left = np.minimum(c[:1], 0.0) * v[:1]     # inflow carries the exterior 0
    flux_right = np.maximum(c[-1:], 0.0) * v[-1:]  # outflow upwinds the interior value
    flux = np.concatenate([flux_left, flux_interior, flux_right], axis=0)
    out = v - dt / dx * (flux[1:] - flux[:-1])
    return np.moveaxis(out, 0, axis)


def fv_upwind_step(u: Field, c_t: VectorField, A_t: Field | None, a_t: Field | None,
                   dt: float) -> Field:
    """One dimension-split upwind step with explicit Euler source."""
    grid = u.grid
    cmax = float(np.max(np.abs(c_t.components)))
    if dt * cmax / min(grid.dx) > 0.9 + 1e-12:
        raise CflViolation(
            f"dt*max|c|/min(dx) = {dt * cmax / min(grid.dx):.3f} exceeds 0.9"
        )
    vals = u.values
    for ax in range(grid.dim):
        vals = _upwind_sweep(vals, c_t.components[ax], dt, grid.dx[ax], ax)
    source = np.zeros(grid.shape)
    if A_t is not None:
        source = source + A_t.values * vals
    if a_t is not None:
        source = source + a_t.values
    return Field(grid, vals + dt * source)


def solve_hyperbolic(problem: TransportProblem, T: float, dt: float,
                     t_start: float = 0.0) -> Trace:
    """Upwind march from t_start to t_start + T, trace stored every step."""
    times = step_times(T, dt, t_start)
    fields = [problem.u0]
    u = problem.u0
    for k in range(len(times) - 1):
        t = times[k]
        c_t = problem.c.at(t)
        A_t = problem.A.at(t) if problem.A is not None else None
        a_t = problem.a.at(t) if problem.a is not None else None
        u = fv_upwind_step(u, c_t, A_t, a_t, float(times[k + 1] - t))
        fields.append(u)
    return Trace(times, tuple(fields))


def _cumulative_left_riemann(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    out[1:] = np.cumsum(values[:-1] * np.diff(times))
    return out


def _grad_div_l1(vf: VectorField) -> float:
    grad = gradient_components(divergence(vf).values, vf.grid)
    mag = np.sqrt(sum(g**2 for g in grad))
    return float(np.sum(mag) * vf.grid.cell_volume)


@dataclass(frozen=True)
class HyperbolicBoundsReport:
    times: np.ndarray
    l1_lhs: np.ndarray
    l1_rhs: np.ndarray
    linf_lhs: np.ndarray
    linf_rhs: np.ndarray
    tv_lhs: np.ndarray
    tv_rhs: np.ndarray

    def passed(self, rel_slack: float = 1e-6) -> dict[str, bool]:
        def ok(lhs, rhs):
            return bool(np.all(lhs <= rhs * (1 + rel_slack) + 1e-12))

        return {
            "l1": ok(self.l1_lhs, self.l1_rhs),
            "linf": ok(self.linf_lhs, self.linf_rhs),
            "tv": ok(self.tv_lhs, self.tv_rhs),
        }

    def all_passed(self, rel_slack: float = 1e-6) -> bool:
        return all(self.passed(rel_slack).values())


def check_hyperbolic_bounds(trace: Trace, problem: TransportProblem,
                            tv_constant: float | None = None) -> HyperbolicBoundsReport:
    """Measured L1 / sup / TV norms against the data-side estimates.

    All coefficient norms (including div c, D_x c, grad div c) come from
    discrete differentiation of the sampled velocity; time integrals use the
    left-endpoint rule matching the explicit stepping.
    """
    from .calibration import TV_CONST_HYPERBOLIC

    if tv_constant is None:
        tv_constant = TV_CONST_HYPERBOLIC
    times = trace.times
    grid = problem.grid
    A_sup = np.array([norm_linf(problem.A.at(t)) if problem.A is not None else 0.0 for t in times])
    A_tv = np.array([total_variation(problem.A.at(t)) if problem.A is not None else 0.0 for t in times])
    a_l1 = np.array([norm_l1(problem.a.at(t)) if problem.a is not None else 0.0 for t in times])
    a_sup = np.array([norm_linf(problem.a.at(t)) if problem.a is not None else 0.0 for t in times])
    a_tv = np.array([total_variation(problem.a.at(t)) if problem.a is not None else 0.0 for t in times])
    div_sup = np.empty(len(times))
    dxc_sup = np.empty(len(times))
    graddiv_l1 = np.empty(len(times))
    for i, t in enumerate(times):
        vf = problem.c.at(t)
        div_sup[i] = norm_linf(divergence(vf))
        worst = 0.0
        for k in range(grid.dim):
            for gcomp in gradient_components(vf.components[k], grid):
                worst = max(worst, float(np.max(np.abs(gcomp))))
        dxc_sup[i] = worst
        graddiv_l1[i] = _grad_div_l1(vf)
    elapsed = times - times[0]
    int_a_l1 = _cumulative_left_riemann(a_l1, times)
    int_a_sup = _cumulative_left_riemann(a_sup, times)
    int_a_tv = _cumulative_left_riemann(a_tv, times)
    int_A_sup = _cumulative_left_riemann(A_sup, times)
    int_div = _cumulative_left_riemann(div_sup, times)
    int_dxc = _cumulative_left_riemann(dxc_sup, times)
    int_Atv_graddiv = _cumulative_left_riemann(A_tv + graddiv_l1, times)
    u0_l1, u0_sup, u0_tv = trace.l1[0], trace.linf[0], trace.tv[0]
    rhs_l1 = (u0_l1 + int_a_l1) * np.exp(np.maximum.accumulate(A_sup) * elapsed)
    rhs_linf = (u0_sup + int_a_sup) * np.exp(int_A_sup + int_div)
    rhs_tv = np.exp(int_A_sup + int_dxc) * (
        u0_tv + tv_constant * u0_sup + int_a_tv + (u0_sup + int_a_sup) * int_Atv_graddiv
    )
    return HyperbolicBoundsReport(times, trace.l1, rhs_l1, trace.linf, rhs_linf,
                                  trace.tv, rhs_tv)


@dataclass(frozen=True)
class ComparisonReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    def passed(self, rel_slack: float = 1e-6) -> bool:
        return bool(np.all(self.lhs <= self.rhs * (1 + rel_slack) + 1e-12))


def stability_in_A(problem1: TransportProblem, problem2: TransportProblem,
                   T: float, dt: float) -> ComparisonReport:
    """Distance of two solves differing only in the reaction coefficient."""
    tr1 = solve_hyperbolic(problem1, T, dt)
    tr2 = solve_hyperbolic(problem2, T, dt)
    times = tr1.times
    grid = problem1.grid
    lhs = np.array([norm_l1(Field(grid, f1.values - f2.values))
                    for f1, f2 in zip(tr1.fields, tr2.fields)])
    A1 = np.array([norm_linf(problem1.A.at(t)) if problem1.A is not None else 0.0 for t in times])
    A2 = np.array([norm_linf(problem2.A.at(t)) if problem2.A is not None else 0.0 for t in times])
    dA = np.array([
        norm_l1(Field(grid, (problem2.A.at(t).values if problem2.A is not None else 0.0)
                      - (problem1.A.at(t).values if problem1.A is not None else 0.0)))
        for t in times
    ])
    a_sup = np.array([norm_linf(problem1.a.at(t)) if problem1.a is not None else 0.0 for t in times])
    elapsed = times - times[0]
    worst_rate = np.maximum(np.maximum.accumulate(A1), np.maximum.accumulate(A2))
    rhs = (np.exp(elapsed * worst_rate)
           * (norm_linf(problem1.u0) + _cumulative_left_riemann(a_sup, times))
           * _cumulative_left_riemann(dA, times))
    return ComparisonReport(times, lhs, rhs)


def stability_in_c(problem1: TransportProblem, problem2: TransportProblem,
                   T: float, dt: float,
                   tv_constant: float | None = None) -> ComparisonReport:
    """Distance of two solves differing only in the velocity field.

    RHS is the two-term expression: data-norm times the integrated sup of
    div(c2 - c1), plus the integrated sup of c2 - c1 times the variation
    bracket of the first problem.
    """
    from .calibration import TV_CONST_HYPERBOLIC

    if tv_constant is None:
        tv_constant = TV_CONST_HYPERBOLIC
    tr1 = solve_hyperbolic(problem1, T, dt)
    tr2 = solve_hyperbolic(problem2, T, dt)
    times = tr1.times
    grid = problem1.grid
    lhs = np.array([norm_l1(Field(grid, f1.values - f2.values))
                    for f1, f2 in zip(tr1.fields, tr2.fields)])
    A_sup = np.array([norm_linf(problem1.A.at(t)) if problem1.A is not None else 0.0 for t in times])
    A_tv = np.array([total_variation(problem1.A.at(t)) if problem1.A is not None else 0.0 for t in times])
    a_l1 = np.array([norm_l1(problem1.a.at(t)) if problem1.a is not None else 0.0 for t in times])
    a_sup = np.array([norm_linf(problem1.a.at(t)) if problem1.a is not None else 0.0 for t in times])
    a_tv = np.array([total_variation(problem1.a.at(t)) if problem1.a is not None else 0.0 for t in times])
    dc_sup = np.empty(len(times))
    ddiv_sup = np.empty(len(times))
    dxc1_sup = np.empty(len(times))
    graddiv1_l1 = np.empty(len(times))
    for i, t in enumerate(times):
        v1 = problem1.c.at(t)
        v2 = problem2.c.at(t)
        diff = VectorField(grid, v2.components - v1.components)
        dc_sup[i] = float(np.max(np.sqrt(np.sum(diff.components**2, axis=0))))
        ddiv_sup[i] = norm_linf(divergence(diff))
        worst = 0.0
        for k in range(grid.dim):
            for gcomp in gradient_components(v1.components[k], grid):
                worst = max(worst, float(np.max(np.abs(gcomp))))
        dxc1_sup[i] = worst
        graddiv1_l1[i] = _grad_div_l1(v1)
    elapsed = times - times[0]
    u0_l1, u0_sup, u0_tv = norm_l1(problem1.u0), norm_linf(problem1.u0), total_variation(problem1.u0)
    int_a_l1 = _cumulative_left_riemann(a_l1, times)
    int_a_sup = _cumulative_left_riemann(a_sup, times)
    term1 = ((u0_l1 + int_a_l1) * np.exp(np.maximum.accumulate(A_sup) * elapsed)
             * _cumulative_left_riemann(ddiv_sup, times))
    bracket = (u0_tv + tv_constant * u0_sup + _cumulative_left_riemann(a_tv, times)
               + (u0_sup + int_a_sup) * _cumulative_left_riemann(A_tv + graddiv1_l1, times))
    term2 = (_cumulative_left_riemann(dc_sup, times)
             * np.exp(_cumulative_left_riemann(A_sup, times)
                      + _cumulative_left_riemann(dxc1_sup, times))
             * bracket)
    return ComparisonReport(times, lhs, term1 + term2)


@dataclass(frozen=True)
class TimeLipschitzReport:
    modulus: float            # max over all pairs of |u(t2)-u(t1)|_L1 / (t2-t1)
    consecutive: np.ndarray   # per-step quotients


def time_lipschitz_check(trace: Trace) -> TimeLipschitzReport:
    if len(trace.times) < 3:
        raise ValueError("need at least 3 trace times")
    grid = trace.grid
    worst = 0.0
    n = len(trace.times)
    for i in range(n):
        for j in range(i + 1, n):
            d = norm_l1(Field(grid, trace.fields[j].values - trace.fields[i].values))
            worst = max(worst, d / (trace.times[j] - trace.times[i]))
    consecutive = np.array([
        norm_l1(Field(grid, trace.fields[i + 1].values - trace.fields[i].values))
        / (trace.times[i + 1] - trace.times[i])
        for i in range(n - 1)
    ])
    return TimeLipschitzReport(worst, consecutive)


def weak_residual_hyperbolic(trace: Trace, problem: TransportProblem,
                             test_functions: list[SineTestFunction]) -> np.ndarray:
    """Quadrature of the transport weak form (with initial term) per test function."""
    grid = problem.grid
    vol = grid.cell_volume
    times = trace.times
    residuals = []
    for tf in test_functions:
        s_vals = tf.space_values(grid)
        s_grad = tf.space_gradient(grid)
        integrand = np.empty(len(times))
        for i, t in enumerate(times):
            u = trace.fields[i].values
            qt = float(tf.time_value(t))
            qdot = float(tf.time_derivative(t))
            c_t = problem.c.at(t)
            advect = np.zeros(grid.shape)
            for ax in range(grid.dim):
                advect += c_t.components[ax] * s_grad[ax]
            term = qdot * np.sum(u * s_vals) + qt * np.sum(u * advect)
            react = np.zeros(grid.shape)
            if problem.A is not None:
                react = react + problem.A.at(t).values * u
            if problem.a is not None:
                react = react + problem.a.at(t).values
            term += qt * np.sum(react * s_vals)
            integrand[i] = term * vol
        space_time = integrate.simpson(integrand, x=times)
        initial = float(tf.time_value(times[0])) * np.sum(trace.fields[0].values * s_vals) * vol
        residuals.append(space_time + initial)
    return np.array(residuals)
