"""PALM-family solvers and the alternating-minimization baseline.

All solvers take ``(prob, init, cfg, metric=None)`` and return
``(SolverState, SolverTrace)``. ``prob`` is a
:class:`~palmnut.problem.MagPhaseProblem` or
:class:`~palmnut.problem.MultiRepProblem`; ``metric(m, q)``, when given and
``cfg.record_nrmse`` is set, is logged next to the objective.

Every outer iteration updates the magnitude block first, then the phase.
Trace row ``k = 0`` holds the initial state. Elapsed time counts only solver
work; objective and metric evaluation for the trace are excluded.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .problem import OBJECTIVE_FEASIBILITY_TOL

ARMIJO_C1 = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules and baseline settings.

    ``rel_cost_tol = 0`` runs to ``max_outer_iter``. ``inner_iter`` and
    ``phase_steps_per_outer`` only affect :func:`run_am_ncg`.
    """

    max_outer_iter: int = 1000
    rel_cost_tol: float = 0.0
    inner_iter: int = 10
    record_nrmse: bool = False
    wall_clock_limit_s: float | None = None
    phase_steps_per_outer: int = 1

    def __post_init__(self):
        if self.max_outer_iter < 0:
            raise ConfigError("max_outer_iter must be >= 0")
        if not self.rel_cost_tol >= 0:
            raise ConfigError("rel_cost_tol must be >= 0")
        if self.inner_iter < 0:
            raise ConfigError("inner_iter must be >= 0")
        if self.phase_steps_per_outer < 1:
            raise ConfigError("phase_steps_per_outer must be >= 1")
        if self.wall_clock_limit_s is not None and not self.wall_clock_limit_s > 0:
            raise ConfigError("wall_clock_limit_s must be positive")


@dataclass
class SolverState:
    """Iterates ``(m_hat, q_hat)`` and momentum points ``(u, v)``."""

    m_hat: np.ndarray
    q_hat: np.ndarray
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    k: int = 0

    def __post_init__(self):
        self.m_hat = np.asarray(self.m_hat, dtype=np.float64)
        self.q_hat = np.asarray(self.q_hat, dtype=np.complex128)
        if self.u is None:
            self.u = self.m_hat
        if self.v is None:
            self.v = self.q_hat

    def copy(self):
        return SolverState(self.m_hat.copy(), self.q_hat.copy(), self.u.copy(), self.v.copy(), self.k)


@dataclass
class SolverTrace:
    """Rows ``(k, seconds, objective, nrmse)``; ``nrmse`` is None when not recorded."""

    records: list = field(default_factory=list)

    def append(self, k, seconds, objective, nrmse=None):
        self.records.append((int(k), float(seconds), float(objective), None if nrmse is None else float(nrmse)))

    @property
    def iters(self):
        return np.array([r[0] for r in self.records])

    @property
    def seconds(self):
        return np.array([r[1] for r in self.records])

    @property
    def objectives(self):
        return np.array([r[2] for r in self.records])

    @property
    def nrmses(self):
        return np.array([np.nan if r[3] is None else r[3] for r in self.records])

    def __len__(self):
        return len(self.records)


def momentum_coefficient(k):
    """Nesterov extrapolation weight ``(k - 1) / (k + 2)`` for ``k >= 1``."""
    if int(k) != k or k < 1:
        raise ValueError(f"momentum index must be an integer >= 1, got {k}")
    return (k - 1) / (k + 2)


def no_momentum(k):
    return 0.0


class _Logger:
    """Accumulates solver time and writes trace rows."""

    def __init__(self, prob, cfg, metric):
        self.prob = prob
        self.cfg = cfg
        self.metric = metric if cfg.record_nrmse else None
        self.trace = SolverTrace()
        self.elapsed = 0.0
        self._t0 = None
        self.last = None

    def start(self):
        self._t0 = time.perf_counter()

    def stop(self):
        self.elapsed += time.perf_counter() - self._t0

    def log(self, k, m, q):
        """Record a row; returns True when a stopping rule fires."""
        obj = self.prob.objective(m, q)
        if not math.isfinite(obj):
            raise NumericalError(f"non-finite objective at iteration {k}", state=SolverState(m, q, k=k))
        nrmse = self.metric(m, q) if self.metric is not None else None
        self.trace.append(k, self.elapsed, obj, nrmse)
        prev, self.last = self.last, obj
        if k >= self.cfg.max_outer_iter:
            return True
        if self.cfg.wall_clock_limit_s is not None and self.elapsed >= self.cfg.wall_clock_limit_s:
            return True
        if prev is not None and self.cfg.rel_cost_tol > 0:
            if abs(prev - obj) <= self.cfg.rel_cost_tol * max(abs(prev), np.finfo(float).tiny):
                return True
        return False


def _check_init(prob, init):
    m = np.asarray(init.m_hat)
    q = np.asarray(init.q_hat)
    prob._check_m(m)
    prob._check_q(q)
    dev = float(np.max(np.abs(np.abs(q) - 1.0)))
    if dev > OBJECTIVE_FEASIBILITY_TOL:
        raise ConfigError(f"initial phase is not unit-modulus (deviation {dev:.3e})")


def _check_finite(name, x, k, m, q):
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite {name} at iteration {k}", state=SolverState(m, q, k=k))


def _phase_step(v, g, d):
    """``v - g / d`` with a zero step wherever ``d == 0``."""
    d = np.broadcast_to(d, g.shape)
    step = np.zeros_like(g)
    np.divide(g, d, out=step, where=d > 0)
    return v - step


def _palm_core(prob, init, cfg, metric, *, vector_d, momentum, anchor="momentum", phase_bound=None):
    """Shared PALM / PALM-UT / PALMNUT / PALM+momentum iteration.

    Parameters
    ----------
    vector_d : bool
        Coordinatewise phase bounds (uncoupled steps) instead of a scalar.
    momentum : callable
        ``k -> beta_k``; :func:`no_momentum` gives plain PALM steps.
    anchor : {"momentum", "iterate"}
        Gradient steps start from the extrapolated point (Nesterov form) or
        from the previous iterate with the gradient still taken at the
        extrapolated point.
    phase_bound : callable, optional
        ``m -> d`` override for the phase step bound.
    """
    if anchor not in ("momentum", "iterate"):
        raise ConfigError(f"unknown anchor {anchor!r}")
    _check_init(prob, init)
    log = _Logger(prob, cfg, metric)
    state = init.copy()
    state.u, state.v = state.m_hat.copy(), state.q_hat.copy()
    if log.log(state.k, state.m_hat, state.q_hat):
        return state, log.trace

    if phase_bound is None:
        phase_bound = prob.bound_d_vector if vector_d else prob.bound_d_scalar
    c_const = prob.bound_c()
    m_prev, q_prev = state.m_hat, state.q_hat
    u, v = state.u, state.v
    extrapolated = False
    k = state.k
    while True:
        k += 1
        log.start()
        beta = momentum(k)
        # magnitude block
        c = prob.bound_c(q=v) if extrapolated else c_const
        gm = prob.grad_m(u, v)
        m_base = u if anchor == "momentum" else m_prev
        m_new = prob.prox_m(m_base - gm / c, c)
        _check_finite("magnitude", m_new, k, m_prev, q_prev)
        u = m_new if beta == 0.0 else m_new + beta * (m_new - m_prev)
        # phase block, gradient at (u_k, v_{k-1})
        d = phase_bound(u)
        gq = prob.grad_q(u, v)
        q_base = v if anchor == "momentum" else q_prev
        q_new = prob.project_q(_phase_step(q_base, gq, d))
        _check_finite("phase", q_new, k, m_new, q_prev)
        v = q_new if beta == 0.0 else q_new + beta * (q_new - q_prev)
        extrapolated = beta != 0.0
        log.stop()
        m_prev, q_prev = m_new, q_new
        if log.log(k, m_new, q_new):
            break
    return SolverState(m_prev, q_prev, u, v, k), log.trace


def run_palm(prob, init, cfg, metric=None):
    """PALM with scalar step bounds for both blocks."""
    return _palm_core(prob, init, cfg, metric, vector_d=False, momentum=no_momentum)


def run_palm_ut(prob, init, cfg, metric=None, phase_bound=None):
    """PALM with coordinatewise (uncoupled) phase steps.

    ``phase_bound`` replaces :meth:`bound_d_vector`; passing a function
    that returns the scalar bound everywhere recovers :func:`run_palm`.
    """
    return _palm_core(prob, init, cfg, metric, vector_d=True, momentum=no_momentum, phase_bound=phase_bound)


def run_palm_momentum(prob, init, cfg, metric=None, momentum=momentum_coefficient, anchor="momentum"):
    """PALM with Nesterov extrapolation but scalar step bounds (ablation arm)."""
    return _palm_core(prob, init, cfg, metric, vector_d=False, momentum=momentum, anchor=anchor)


def run_palmnut(prob, init, cfg, metric=None, momentum=momentum_coefficient, anchor="momentum"):
    """Nesterov extrapolation combined with uncoupled phase steps.

    The phase bound is evaluated at the extrapolated magnitude ``u_k``.
    Objective values are logged at ``(m_hat_k, q_hat_k)`` and need not
    decrease monotonically.
    """
    return _palm_core(prob, init, cfg, metric, vector_d=True, momentum=momentum, anchor=anchor)


# ---------------------------------------------------------------- AM baseline


def _dot(a, b):
    return float(np.real(np.vdot(a, b)))


def linear_cg(hess, x, grad0, iters, tol=1e-30):
    """Minimize a convex quadratic from ``x`` given ``grad0 = grad(x)``.

    ``hess(v)`` is the Hessian-vector product.
    """
    r = -grad0
    p = r.copy()
    rr = _dot(r, r)
    for _ in range(iters):
        if rr <= tol:
            break
        hp = hess(p)
        php = _dot(p, hp)
        if php <= 0:
            break
        alpha = rr / php
        x = x + alpha * p
        r = r - alpha * hp
        rr_new = _dot(r, r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x


def ncg_pr(fun, grad, x, iters, step0):
    """Polak-Ribiere+ nonlinear CG with Armijo backtracking.

    The first trial step is ``step0``; later ones use the Barzilai-Borwein
    ratio ``s.s / s.y`` when positive. A failed line search returns the
    current point (zero step).
    """
    fx = fun(x)
    g = grad(x)
    d = -g
    step = step0
    for _ in range(iters):
        gg = _dot(g, g)
        if gg == 0.0:
            break
        slope = _dot(g, d)
        if slope >= 0:
            d = -g
            slope = -gg
        t = step
        for _ in range(MAX_BACKTRACKS):
            x_try = x + t * d
            f_try = fun(x_try)
            if f_try <= fx + ARMIJO_C1 * t * slope:
                break
            t *= BACKTRACK
        else:
            break
        g_new = grad(x_try)
        s = x_try - x
        y = g_new - g
        sy = _dot(s, y)
        step = _dot(s, s) / sy if sy > 0 else step0
        beta = max(_dot(g_new, y) / gg, 0.0)
        d = -g_new + beta * d
        x, fx, g = x_try, f_try, g_new
    return x


def mfista(prob, m, q, iters):
    """Monotone FISTA on the magnitude subproblem with a nonsmooth ``R1``."""
    c = prob.bound_c()
    fx = _mag_obj(prob, m, q)
    x_prev = x = m
    y = m
    t = 1.0
    for _ in range(iters):
        z = prob.prox_m(y - prob.grad_m(y, q) / c, c)
        fz = _mag_obj(prob, z, q)
        if fz <= fx:
            x, fx = z, fz
        else:
            x = x_prev
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x + (t / t_new) * (z - x) + ((t - 1.0) / t_new) * (x - x_prev)
        x_prev, t = x, t_new
    return x


def _mag_obj(prob, m, q):
    return prob._data_value(m, q) + prob.r1_value(m)


def _magnitude_update(prob, m, q, iters):
    if iters == 0:
        return m
    if not prob.r1_smooth:
        return mfista(prob, m, q, iters)
    if prob.quadratic:
        return linear_cg(lambda v: prob.hess_m(q, v), m, prob.grad_m(m, q), iters)
    return ncg_pr(
        lambda x: _mag_obj(prob, x, q),
        lambda x: prob.grad_m(x, q),
        m,
        iters,
        1.0 / prob.bound_c(),
    )


def _phase_update(prob, m, p, iters):
    if iters == 0:
        return p
    d = prob.bound_d_scalar(m)
    if d == 0.0:
        return p

    def fun(x):
        q = np.exp(1j * x)
        return prob._data_value(m, q) + prob.r2_value(q)

    return ncg_pr(fun, lambda x: prob.grad_p(m, x), p, iters, 1.0 / d)


def run_am_ncg(prob, init, cfg, metric=None):
    """Alternating minimization: magnitude subproblem, then NCG on the raw phase.

    The magnitude subproblem uses linear CG (quadratic ``R1``), PR-NCG
    (Huber ``R1``) or monotone FISTA (l1 ``R1``), each for
    ``cfg.inner_iter`` steps. The phase runs
    ``cfg.inner_iter * cfg.phase_steps_per_outer`` PR-NCG steps on ``p``.
    """
    _check_init(prob, init)
    log = _Logger(prob, cfg, metric)
    m = init.m_hat.copy()
    q = init.q_hat.copy()
    k = init.k
    if log.log(k, m, q) or cfg.inner_iter == 0:
        return SolverState(m, q, k=k), log.trace
    p = np.angle(q)
    while True:
        k += 1
        log.start()
        m = _magnitude_update(prob, m, q, cfg.inner_iter)
        _check_finite("magnitude", m, k, m, q)
        p = _phase_update(prob, m, p, cfg.inner_iter * cfg.phase_steps_per_outer)
        _check_finite("phase", p, k, m, q)
        q = np.exp(1j * p)
        log.stop()
        if log.log(k, m, q):
            break
    return SolverState(m, q, k=k), log.trace


SOLVERS = {
    "palm": run_palm,
    "palm_ut": run_palm_ut,
    "palm_momentum": run_palm_momentum,
    "palmnut": run_palmnut,
    "am": run_am_ncg,
}


def run_solver(name, prob, init, cfg, metric=None):
    try:
        fn = SOLVERS[name]
    except KeyError:
        raise ConfigError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None
    return fn(prob, init, cfg, metric)


__all__ = [
    "SolverConfig",
    "SolverState",
    "SolverTrace",
    "momentum_coefficient",
    "run_palm",
    "run_palm_ut",
    "run_palm_momentum",
    "run_palmnut",
    "run_am_ncg",
    "run_solver",
    "linear_cg",
    "ncg_pr",
    "mfista",
]
