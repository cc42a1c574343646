"""Fixed-point coupling of the drift and diffusion equations, plus the bound ledger.

The nonlinear system is solved by successive substitution: freeze the
velocity and both reaction coefficients at the previous iterate, solve the
two linear problems, repeat until the sup-in-time L1 distance between
iterates drops below tolerance.  Contraction only holds on short time
windows, so the horizon is split into windows sized from the contraction
constant estimate and halved whenever an iteration fails to settle; the
final iterate of each window seeds the next, making the stitched trace
continuous at the joints by construction.

The BoundsReport assembles every a-priori constant of the underlying
estimates from scenario data (with empirically sampled constants standing
in for the abstract velocity-hypothesis maps) and grades the measured
solution norms against them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import expressions as ex
from .grid import (DomainSpec, Field, Grid, build_grid, interior_variation,
                   norm_l1, norm_linf, total_variation)
from .parabolic import ParabolicProblem, Scheme, solve_parabolic
from .series import (FuncFieldSeries, SampledFieldSeries, SampledVectorSeries,
                     Trace)
from .transport import TransportProblem, solve_hyperbolic
from .velocity import Kernel, HypothesisVReport, make_kernel, velocity, verify_hypothesis_v

log = logging.getLogger(__name__)


class NoContraction(RuntimeError):
    """A window failed to settle within the iteration budget."""


class WindowCollapse(RuntimeError):
    """Window halving went below 4 time steps; scenario too stiff."""


@dataclass(frozen=True)
class Scenario:
    """Complete problem description, normally loaded from a scenario file."""

    domain: DomainSpec
    n_cells: tuple[int, ...]
    mu: float
    ell: float
    kappa: float
    attract: int
    alpha: ex.Expr
    beta: ex.Expr
    a: ex.Expr
    b: ex.Expr
    u0: ex.Expr
    w0: ex.Expr
    horizon: float
    dt: float
    snapshot_every: int
    parabolic_scheme: str
    picard_tol: float
    picard_max_iter: int
    k_alpha: float
    k_beta: float
    out_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json")
    seed: int = 0

    def __post_init__(self):
        if self.horizon <= 0 or self.dt <= 0:
            raise ValueError("horizon and dt must be positive")
        steps = round(self.horizon / self.dt)
        if steps < 1 or abs(steps * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise ValueError("dt must divide the horizon T (window chaining "
                             "requires uniform steps)")
        if self.k_alpha <= 0 or self.k_beta <= 0:
            raise ValueError("declared Lipschitz constants must be positive")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")

    def grid(self) -> Grid:
        return build_grid(self.domain, self.n_cells)

    def scheme(self) -> Scheme:
        return Scheme(self.parabolic_scheme, self.dt)

    def initial_fields(self, grid: Grid) -> tuple[Field, Field]:
        return (sample_keyed(self.u0, "initial.u0", grid, 0.0),
                sample_keyed(self.w0, "initial.w0", grid, 0.0))


@dataclass(frozen=True)
class WindowLog:
    t0: float
    t1: float
    diffs: tuple[float, ...]
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.diffs)


@dataclass(frozen=True)
class CoupledTrace:
    times: np.ndarray
    u_fields: tuple[Field, ...]
    w_fields: tuple[Field, ...]
    u_l1: np.ndarray
    u_linf: np.ndarray
    u_tv: np.ndarray
    w_l1: np.ndarray
    w_linf: np.ndarray
    w_tv: np.ndarray
    window_logs: tuple[WindowLog, ...]

    @property
    def grid(self) -> Grid:
        return self.u_fields[0].grid

    def u_trace(self) -> Trace:
        return Trace(self.times, self.u_fields, self.u_l1, self.u_linf, self.u_tv)

    def w_trace(self) -> Trace:
        return Trace(self.times, self.w_fields, self.w_l1, self.w_linf, self.w_tv)


def sample_keyed(expr: ex.Expr, key: str, grid: Grid, t: float,
                 u: Field | None = None, w: Field | None = None) -> Field:
    """sample_field with the scenario key path prepended to evaluation errors."""
    try:
        return ex.sample_field(expr, grid, t, u=u, w=w)
    except ex.NonFiniteValue as exc:
        raise ex.NonFiniteValue(f"[{key}] {exc}") from None


def freeze_coefficients(u_trace: Trace, w_trace: Trace, scenario: Scenario,
                        kernel: Kernel):
    """Velocity/reaction series frozen at the iterate's snapshots.

    The velocity is recomputed from every stored w snapshot; in between the
    series interpolate linearly in time.
    """
    times = w_trace.times
    c_fields = tuple(
        velocity(w, kernel, scenario.kappa, scenario.attract) for w in w_trace.fields
    )
    A_fields = tuple(
        sample_keyed(scenario.alpha, "coefficients.alpha", w.grid, t, w=w)
        for t, w in zip(times, w_trace.fields)
    )
    B_fields = tuple(
        sample_keyed(scenario.beta, "coefficients.beta", w.grid, t, u=u, w=w)
        for t, u, w in zip(times, u_trace.fields, w_trace.fields)
    )
    return (SampledVectorSeries(times, c_fields),
            SampledFieldSeries(times, A_fields),
            SampledFieldSeries(times, B_fields))


def _constant_trace(times: np.ndarray, f: Field) -> Trace:
    return Trace(times, tuple([f] * len(times)))


def picard_window(scenario: Scenario, grid: Grid, kernel: Kernel, t0: float,
                  t1: float, u_init: Field, w_init: Field, tol: float,
                  max_iter: int, initial_iterate: str = "datum"):
    """Iterate the frozen-coefficient solves on [t0, t1] until they settle.

    Returns converged (u, w) traces and the iteration log; raises
    NoContraction when the budget runs out, signalling the window is too
    long for the contraction available.
    """
    span = t1 - t0
    n_steps = int(round(span / scenario.dt))
    times = t0 + scenario.dt * np.arange(n_steps + 1)
    if initial_iterate == "datum":
        u_prev, w_prev = _constant_trace(times, u_init), _constant_trace(times, w_init)
    elif initial_iterate == "zero":
        zero_u = Field(grid, np.zeros(grid.shape))
        u_prev, w_prev = _constant_trace(times, zero_u), _constant_trace(times, zero_u)
    else:
        raise ValueError(f"unknown initial iterate {initial_iterate!r}")
    a_series = FuncFieldSeries(lambda t: sample_keyed(scenario.a, "coefficients.a", grid, t))
    b_series = FuncFieldSeries(lambda t: sample_keyed(scenario.b, "coefficients.b", grid, t))
    scheme = scenario.scheme()
    diffs: list[float] = []
    for iteration in range(1, max_iter + 1):
        c_ser, A_ser, B_ser = freeze_coefficients(u_prev, w_prev, scenario, kernel)
        u_next = solve_hyperbolic(
            TransportProblem(grid, c_ser, A_ser, a_series, u_init), span, scenario.dt, t0
        )
        w_next = solve_parabolic(
            ParabolicProblem(grid, scenario.mu, B_ser, b_series, w_init), span, scheme, t0
        )
        diff = max(
            norm_l1(Field(grid, un.values - up.values))
            + norm_l1(Field(grid, wn.values - wp.values))
            for un, up, wn, wp in zip(u_next.fields, u_prev.fields,
                                      w_next.fields, w_prev.fields)
        )
        diffs.append(diff)
        log.debug("window [%g, %g] iteration %d diff %.3e", t0, t1, iteration, diff)
        u_prev, w_prev = u_next, w_next
        if diff < tol:
            return u_next, w_next, WindowLog(t0, t1, tuple(diffs), True)
    raise NoContraction(
        f"window [{t0:g}, {t1:g}] did not settle in {max_iter} iterations "
        f"(last differences {diffs[-3:]})"
    )


def _smooth_sample_fields(grid: Grid, base: list[Field], seed: int,
                          count: int = 8) -> list[Field]:
    """Deterministic smooth densities for the velocity-hypothesis sampling."""
    rng = np.random.default_rng(seed)
    mesh = grid.centers()
    fields = list(base)
    for _ in range(count):
        vals = np.zeros(grid.shape)
        for _ in range(3):
            amp = rng.uniform(-1.0, 1.0)
            width = rng.uniform(5.0, 60.0)
            centers = [rng.uniform(lo, hi) for lo, hi in grid.spec.bounds]
            bump = np.ones(grid.shape)
            for ax, m in enumerate(mesh):
                bump = bump * np.exp(-width * (m - centers[ax]) ** 2)
            vals += amp * bump
        fields.append(Field(grid, vals))
    fields.append(Field(grid, np.zeros(grid.shape)))
    return fields


def estimate_velocity_constants(scenario: Scenario, grid: Grid, kernel: Kernel,
                                extra_fields: tuple[Field, ...] = ()) -> HypothesisVReport:
    base = list(extra_fields)
    samples = _smooth_sample_fields(grid, base, scenario.seed)
    return verify_hypothesis_v(kernel, scenario.kappa, samples, scenario.attract)


@dataclass(frozen=True)
class ContractionData:
    """Data-side norms entering the iteration constants, cumulative in time."""

    times: np.ndarray
    int_b_l1: np.ndarray
    int_b_sup: np.ndarray
    int_b_tv: np.ndarray
    int_a_l1: np.ndarray
    int_a_sup: np.ndarray
    int_a_tv: np.ndarray
    u0_l1: float
    u0_sup: float
    u0_tv: float
    w0_l1: float
    w0_sup: float
    w0_tv: float


def _cumulative_left_riemann(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    out[1:] = np.cumsum(values[:-1] * np.diff(times))
    return out


def _safe_exp(x: np.ndarray) -> np.ndarray:
    # exponent capped at 700: keeps huge-but-finite bound values JSON-safe;
    # the capped value is still an enormous valid comparison threshold
    return np.exp(np.minimum(x, 700.0))


def _contraction_data(scenario: Scenario, grid: Grid, times: np.ndarray) -> ContractionData:
    a_fields = [sample_keyed(scenario.a, "coefficients.a", grid, t) for t in times]
    b_fields = [sample_keyed(scenario.b, "coefficients.b", grid, t) for t in times]
    u0f, w0f = scenario.initial_fields(grid)
    return ContractionData(
        times=times,
        int_b_l1=_cumulative_left_riemann(np.array([norm_l1(f) for f in b_fields]), times),
        int_b_sup=_cumulative_left_riemann(np.array([norm_linf(f) for f in b_fields]), times),
        int_b_tv=_cumulative_left_riemann(np.array([total_variation(f) for f in b_fields]), times),
        int_a_l1=_cumulative_left_riemann(np.array([norm_l1(f) for f in a_fields]), times),
        int_a_sup=_cumulative_left_riemann(np.array([norm_linf(f) for f in a_fields]), times),
        int_a_tv=_cumulative_left_riemann(np.array([total_variation(f) for f in a_fields]), times),
        u0_l1=norm_l1(u0f), u0_sup=norm_linf(u0f), u0_tv=total_variation(u0f),
        w0_l1=norm_l1(w0f), w0_sup=norm_linf(w0f), w0_tv=total_variation(w0f),
    )


@dataclass(frozen=True)
class IterationConstants:
    """The six data-side constants of the fixed-point estimates, per time."""

    times: np.ndarray
    c_w1: np.ndarray
    c_winf: np.ndarray
    c_wtv: np.ndarray
    c_u1: np.ndarray
    c_uinf: np.ndarray
    c_utv: np.ndarray
    c_uw: np.ndarray  # contraction rate; window needs c_uw * t < 1/2


def iteration_constants(scenario: Scenario, data: ContractionData, k_v: float,
                        c_v: float, tv_par: float, tv_hyp: float) -> IterationConstants:
    t = data.times - data.times[0]
    ka, kb = scenario.k_alpha, scenario.k_beta
    c_w1 = _safe_exp(kb * t) * (data.w0_l1 + data.int_b_l1)
    c_winf = _safe_exp(kb * t) * (data.w0_sup + data.int_b_sup)
    c_wtv = data.w0_tv + data.int_b_tv + tv_par * np.sqrt(t) * kb * c_w1
    u_rate = ka * t * (1.0 + c_winf)
    c_u1 = (data.u0_l1 + data.int_a_l1) * _safe_exp(u_rate)
    c_uinf = (data.u0_sup + data.int_a_sup) * _safe_exp(u_rate + k_v * t * c_w1)
    c_utv = (_safe_exp(u_rate + k_v * t * c_w1)
             * (data.u0_tv + tv_hyp * data.u0_sup + data.int_a_tv)
             + c_uinf * (ka * t * (1.0 + c_winf + c_wtv) + t * c_v * c_w1))
    c_uw = (kb * _safe_exp(t * kb) * c_winf
            + c_u1 * c_v + c_utv
            + ka * _safe_exp(u_rate) * (data.u0_sup + data.int_a_sup))
    return IterationConstants(data.times, c_w1, c_winf, c_wtv, c_u1, c_uinf, c_utv, c_uw)


def initial_window(scenario: Scenario, grid: Grid, kernel: Kernel) -> float:
    """Largest dt-multiple with (contraction rate) * window < 1/2, floored at 4 dt."""
    from .calibration import TV_CONST_HYPERBOLIC, TV_CONST_PARABOLIC

    u0f, w0f = scenario.initial_fields(grid)
    report = estimate_velocity_constants(scenario, grid, kernel, (w0f,))
    n_steps = int(round(scenario.horizon / scenario.dt))
    times = scenario.dt * np.arange(n_steps + 1)
    data = _contraction_data(scenario, grid, times)
    consts = iteration_constants(scenario, data, report.k_v, report.c_v,
                                 TV_CONST_PARABOLIC, TV_CONST_HYPERBOLIC)
    ok = consts.c_uw * (times - times[0]) < 0.5
    largest = times[np.nonzero(ok)[0][-1]] if np.any(ok) else 0.0
    window = max(largest, 4 * scenario.dt)
    return min(window, scenario.horizon)


def solve_coupled(scenario: Scenario, initial_iterate: str = "datum") -> CoupledTrace:
    """Window-chained fixed-point solve over the whole horizon.

    Windows are halved on NoContraction; below 4 steps the solve aborts with
    WindowCollapse.  The returned trace holds every step with diagnostics.
    """
    grid = scenario.grid()
    kernel = make_kernel(scenario.ell, grid)
    u_cur, w_cur = scenario.initial_fields(grid)
    window = initial_window(scenario, grid, kernel)
    window_steps = max(4, int(round(window / scenario.dt)))
    total_steps = int(round(scenario.horizon / scenario.dt))
    times_all = [0.0]
    u_all, w_all = [u_cur], [w_cur]
    logs: list[WindowLog] = []
    step = 0
    while step < total_steps:
        take = min(window_steps, total_steps - step)
        t0 = step * scenario.dt
        t1 = (step + take) * scenario.dt
        try:
            u_tr, w_tr, wlog = picard_window(
                scenario, grid, kernel, t0, t1, u_cur, w_cur,
                scenario.picard_tol, scenario.picard_max_iter,
                initial_iterate=initial_iterate,
            )
        except NoContraction:
            if window_steps // 2 < 4:
                raise WindowCollapse(
                    f"window of {window_steps} steps failed and cannot shrink below 4 steps"
                ) from None
            window_steps //= 2
            log.info("halving window to %d steps after failed contraction", window_steps)
            continue
        logs.append(wlog)
        times_all.extend(u_tr.times[1:])
        u_all.extend(u_tr.fields[1:])
        w_all.extend(w_tr.fields[1:])
        u_cur, w_cur = u_tr.final(), w_tr.final()
        step += take
    u_trace = Trace(np.array(times_all), tuple(u_all))
    w_trace = Trace(np.array(times_all), tuple(w_all))
    return CoupledTrace(
        times=u_trace.times, u_fields=u_trace.fields, w_fields=w_trace.fields,
        u_l1=u_trace.l1, u_linf=u_trace.linf, u_tv=u_trace.tv,
        w_l1=w_trace.l1, w_linf=w_trace.linf, w_tv=w_trace.tv,
        window_logs=tuple(logs),
    )


def estimate_coefficient_lipschitz(scenario: Scenario, trace: CoupledTrace,
                                   n_samples: int = 200) -> tuple[float, float]:
    """Sampled finite-difference Lipschitz quotients of alpha and beta.

    Sampling covers the state range the trace actually visited (slightly
    inflated); the report flags quotients exceeding the declared constants.
    """
    rng = np.random.default_rng(scenario.seed + 1)
    grid = trace.grid
    mesh = grid.centers()
    w_lo = min(float(np.min(w.values)) for w in trace.w_fields) - 0.1
    w_hi = max(float(np.max(w.values)) for w in trace.w_fields) + 0.1
    u_lo = min(float(np.min(u.values)) for u in trace.u_fields) - 0.1
    u_hi = max(float(np.max(u.values)) for u in trace.u_fields) + 0.1
    t_hi = float(trace.times[-1])
    k_alpha = k_beta = 0.0
    for _ in range(n_samples):
        t = rng.uniform(0.0, t_hi)
        idx = tuple(rng.integers(0, n) for n in grid.shape)
        env = {"t": t, "x": float(mesh[0][idx])}
        if grid.dim == 2:
            env["y"] = float(mesh[1][idx])
        w1, w2 = rng.uniform(w_lo, w_hi, size=2)
        try:
            if abs(w1 - w2) > 1e-9:
                da = abs(ex.evaluate(scenario.alpha, {**env, "w": w1})
                         - ex.evaluate(scenario.alpha, {**env, "w": w2}))
                k_alpha = max(k_alpha, da / abs(w1 - w2))
            u1, u2 = rng.uniform(u_lo, u_hi, size=2)
            if abs(w1 - w2) + abs(u1 - u2) > 1e-9:
                db = abs(ex.evaluate(scenario.beta, {**env, "u": u1, "w": w1})
                         - ex.evaluate(scenario.beta, {**env, "u": u2, "w": w2}))
                k_beta = max(k_beta, db / (abs(u1 - u2) + abs(w1 - w2)))
        except ex.NonFiniteValue:
            # probe slightly outside the visited range hit a pole; skip the
            # sample, the quotient is a measurement, not a gate
            continue
    return k_alpha, k_beta


def alpha_variation_quotient(scenario: Scenario, trace: CoupledTrace) -> float:
    """Variation growth of the frozen drift reaction against its admissible bound.

    Whether an arbitrary expression satisfies
    TV(alpha(t, ., w)) <= K_alpha (1 + sup|w| + TV(w)) cannot be decided
    symbolically, so it is measured on the states the run visited; the report
    flags quotients above 1.  Both sides use the interior variation:
    coefficients, unlike Dirichlet solutions, need not vanish at the walls.
    """
    worst = 0.0
    stride = max(1, len(trace.times) // 16)
    for i in range(0, len(trace.times), stride):
        t, w = trace.times[i], trace.w_fields[i]
        A = ex.sample_field(scenario.alpha, trace.grid, t, w=w)
        admissible = scenario.k_alpha * (1.0 + norm_linf(w) + interior_variation(w))
        worst = max(worst, interior_variation(A) / admissible)
    return worst


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: list[float]
    rhs: list[float]
    passed: bool
    min_margin: float


@dataclass(frozen=True)
class BoundsReport:
    """Every tracked constant and inequality verdict for one coupled run."""

    schema_version: int
    times: list[float]
    constants: dict[str, list[float]]
    checks: tuple[InequalityCheck, ...]
    k_v_empirical: float
    c_v_empirical: float
    k_alpha_declared: float
    k_beta_declared: float
    k_alpha_empirical: float
    k_beta_empirical: float
    alpha_tv_quotient: float
    lipschitz_flags: dict[str, bool]
    contraction_constant: float   # c_uw at the first window end
    window_size: float
    tv_const_parabolic: float
    tv_const_hyperbolic: float
    positivity_min_u: float
    positivity_min_w: float

    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "times": self.times,
            "constants": self.constants,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "min_margin": c.min_margin,
                    "lhs": c.lhs,
                    "rhs": c.rhs,
                }
                for c in self.checks
            ],
            "empirical": {
                "k_v": self.k_v_empirical,
                "c_v": self.c_v_empirical,
                "k_alpha": self.k_alpha_empirical,
                "k_beta": self.k_beta_empirical,
                "alpha_tv_quotient": self.alpha_tv_quotient,
            },
            "declared": {
                "k_alpha": self.k_alpha_declared,
                "k_beta": self.k_beta_declared,
            },
            "lipschitz_flags": self.lipschitz_flags,
            "contraction_constant": self.contraction_constant,
            "window_size": self.window_size,
            "tv_constants": {
                "parabolic": self.tv_const_parabolic,
                "hyperbolic": self.tv_const_hyperbolic,
            },
            "positivity_min": {"u": self.positivity_min_u, "w": self.positivity_min_w},
            "all_passed": self.all_passed(),
        }


def _check(name: str, lhs: np.ndarray, rhs: np.ndarray,
           rel_slack: float = 1e-6) -> InequalityCheck:
    ok = bool(np.all(lhs <= rhs * (1 + rel_slack) + 1e-12))
    return InequalityCheck(name, [float(v) for v in lhs], [float(v) for v in rhs],
                           ok, float(np.min(rhs - lhs)))


def compute_bounds_report(trace: CoupledTrace, scenario: Scenario) -> BoundsReport:
    """Grade the measured solution norms against the a-priori estimates.

    The headline ledger: L1 and sup bounds on both components with the
    single constant C = max(declared alpha/beta constants, empirical
    velocity constant), and the two variation bounds with the frozen
    order-one calibration factors.  The sharper per-equation iteration
    constants are reported alongside.
    """
    from .calibration import TV_CONST_HYPERBOLIC, TV_CONST_PARABOLIC

    grid = trace.grid
    kernel = make_kernel(scenario.ell, grid)
    w_samples = tuple(trace.w_fields[:: max(1, len(trace.w_fields) // 12)])
    vel_report = estimate_velocity_constants(scenario, grid, kernel, w_samples)
    k_v, c_v = vel_report.k_v, vel_report.c_v
    data = _contraction_data(scenario, grid, trace.times)
    consts = iteration_constants(scenario, data, k_v, c_v,
                                 TV_CONST_PARABOLIC, TV_CONST_HYPERBOLIC)
    t = trace.times - trace.times[0]
    c_thm = max(scenario.k_alpha, scenario.k_beta, k_v)
    rhs_w_l1 = _safe_exp(c_thm * t) * (data.w0_l1 + data.int_b_l1)
    rhs_w_sup = _safe_exp(c_thm * t) * (data.w0_sup + data.int_b_sup)
    c_w = np.maximum(rhs_w_l1, rhs_w_sup)
    rhs_u_l1 = (data.u0_l1 + data.int_a_l1) * _safe_exp(c_thm * t * (1.0 + c_w))
    rhs_u_sup = (data.u0_sup + data.int_a_sup) * _safe_exp(c_thm * t * (1.0 + 2.0 * c_w))
    checks = (
        _check("w_l1_apriori", trace.w_l1, rhs_w_l1),
        _check("w_linf_apriori", trace.w_linf, rhs_w_sup),
        _check("u_l1_apriori", trace.u_l1, rhs_u_l1),
        _check("u_linf_apriori", trace.u_linf, rhs_u_sup),
        _check("w_tv_iteration", trace.w_tv, consts.c_wtv),
        _check("u_tv_iteration", trace.u_tv, consts.c_utv),
        _check("w_l1_iteration", trace.w_l1, consts.c_w1),
        _check("w_linf_iteration", trace.w_linf, consts.c_winf),
        _check("u_l1_iteration", trace.u_l1, consts.c_u1),
        _check("u_linf_iteration", trace.u_linf, consts.c_uinf),
    )
    k_alpha_emp, k_beta_emp = estimate_coefficient_lipschitz(scenario, trace)
    alpha_tv_q = alpha_variation_quotient(scenario, trace)
    first_window = trace.window_logs[0] if trace.window_logs else None
    window_size = (first_window.t1 - first_window.t0) if first_window else scenario.horizon
    idx = int(np.searchsorted(trace.times, trace.times[0] + window_size))
    idx = min(idx, len(trace.times) - 1)
    return BoundsReport(
        schema_version=1,
        times=[float(v) for v in trace.times],
        constants={
            "c_w1": [float(v) for v in consts.c_w1],
            "c_winf": [float(v) for v in consts.c_winf],
            "c_wtv": [float(v) for v in consts.c_wtv],
            "c_u1": [float(v) for v in consts.c_u1],
            "c_uinf": [float(v) for v in consts.c_uinf],
            "c_utv": [float(v) for v in consts.c_utv],
            "c_uw": [float(v) for v in consts.c_uw],
            "c_theorem": [c_thm] * len(trace.times),
        },
        checks=checks,
        k_v_empirical=k_v,
        c_v_empirical=c_v,
        k_alpha_declared=scenario.k_alpha,
        k_beta_declared=scenario.k_beta,
        k_alpha_empirical=k_alpha_emp,
        k_beta_empirical=k_beta_emp,
        alpha_tv_quotient=alpha_tv_q,
        lipschitz_flags={
            "alpha_exceeds_declared": bool(k_alpha_emp > scenario.k_alpha * (1 + 1e-6)),
            "beta_exceeds_declared": bool(k_beta_emp > scenario.k_beta * (1 + 1e-6)),
            "alpha_tv_exceeds_bound": bool(alpha_tv_q > 1.0 + 1e-6),
        },
        contraction_constant=float(consts.c_uw[idx]),
        window_size=float(window_size),
        tv_const_parabolic=TV_CONST_PARABOLIC,
        tv_const_hyperbolic=TV_CONST_HYPERBOLIC,
        positivity_min_u=float(min(np.min(u.values) for u in trace.u_fields)),
        positivity_min_w=float(min(np.min(w.values) for w in trace.w_fields)),
    )


@dataclass(frozen=True)
class ExperimentReport:
    """One perturbation experiment: measured distance over perturbation size."""

    times: np.ndarray
    lhs: np.ndarray
    denominator: np.ndarray
    quotients: np.ndarray

    @property
    def final_quotient(self) -> float:
        return float(self.quotients[-1])


def _trace_distance(a: CoupledTrace, b: CoupledTrace) -> np.ndarray:
    grid = a.grid
    return np.array([
        norm_l1(Field(grid, ua.values - ub.values)) + norm_l1(Field(grid, wa.values - wb.values))
        for ua, ub, wa, wb in zip(a.u_fields, b.u_fields, a.w_fields, b.w_fields)
    ])


def lipschitz_in_data_experiment(scenario: Scenario, du0: ex.Expr | None = None,
                                 dw0: ex.Expr | None = None) -> ExperimentReport:
    """Perturb the initial data and measure the solution response.

    The quotient LHS / (L1 size of the perturbation) should stay bounded and
    stable under halving the perturbation (Lipschitz, not superlinear).
    """
    grid = scenario.grid()
    base = solve_coupled(scenario)
    pert = scenario
    delta = 0.0
    if du0 is not None:
        pert = replace(pert, u0=ex.BinOp("+", pert.u0, du0))
        delta += norm_l1(ex.sample_field(du0, grid, 0.0))
    if dw0 is not None:
        pert = replace(pert, w0=ex.BinOp("+", pert.w0, dw0))
        delta += norm_l1(ex.sample_field(dw0, grid, 0.0))
    other = solve_coupled(pert)
    lhs = _trace_distance(base, other)
    denom = np.full(len(lhs), delta)
    quotients = np.where(denom > 0, lhs / np.where(denom > 0, denom, 1.0), 0.0)
    return ExperimentReport(base.times, lhs, denom, quotients)


def stability_in_controls_experiment(scenario: Scenario, a_tilde: ex.Expr | None = None,
                                     b_tilde: ex.Expr | None = None) -> ExperimentReport:
    """Replace the controls and measure the solution response.

    Denominator: cumulative L1 norm (time x space) of the control change up
    to each output time.
    """
    grid = scenario.grid()
    base = solve_coupled(scenario)
    pert = scenario
    if a_tilde is not None:
        pert = replace(pert, a=a_tilde)
    if b_tilde is not None:
        pert = replace(pert, b=b_tilde)
    other = solve_coupled(pert)
    lhs = _trace_distance(base, other)
    times = base.times
    da = np.zeros(len(times))
    db = np.zeros(len(times))
    for i, t in enumerate(times):
        if a_tilde is not None:
            da[i] = norm_l1(Field(grid, ex.sample_field(scenario.a, grid, t).values
                                  - ex.sample_field(a_tilde, grid, t).values))
        if b_tilde is not None:
            db[i] = norm_l1(Field(grid, ex.sample_field(scenario.b, grid, t).values
                                  - ex.sample_field(b_tilde, grid, t).values))
    denom = _cumulative_left_riemann(da + db, times)
    quotients = np.where(denom > 0, lhs / np.where(denom > 0, denom, 1.0), 0.0)
    return ExperimentReport(times, lhs, denom, quotients)


@dataclass(frozen=True)
class PositivityReport:
    min_u: float
    min_w: float

    def passed(self, tol: float = 1e-12) -> bool:
        return self.min_u >= -tol and self.min_w >= -tol


def positivity_audit(trace: CoupledTrace) -> PositivityReport:
    """Minimum of both components; a measurement, never a gate."""
    return PositivityReport(
        float(min(np.min(u.values) for u in trace.u_fields)),
        float(min(np.min(w.values) for w in trace.w_fields)),
    )
