# Reduced tracking objective, its derivatives, and the projected gradient
# method for box-constrained boundary pressure controls

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import dataclasses
import logging
import math

import numpy as np

from . import adjoint
from . import assembly
from . import sensitivity
from . import timegrid
from .state import BlowupError, BlowupReport, PhysicsSettings, solve_state


# Export public API
__all__ = (
    'ControlProblem',
    'InfeasibleStartError',
    'IterationLog',
    'IterationRecord',
    'ObjectiveData',
    'ObjectiveReport',
    'OptimizerSettings',
    'curvature',
    'evaluate_objective',
    'gradient',
    'optimize',
    'project',
    'projection_residual',
    'stationarity',
)


logger = logging.getLogger(__name__)


# Negative-control hook, flipped only by `verify.corrupted`
_hooks = {'adjoint_sign': 1.0}


class InfeasibleStartError(BlowupError):

    def __init__(self, report):
        super().__init__(report, (
            'The initial control blows up at t = {} ({}); supply an '
            'initial control that stabilizes the flow, for example an '
            'opposing pressure drop such as q0 = (0, 50)').format(
                report.t_star, report.trigger))


class ObjectiveData:
    """
    target: Target velocity u_d (see `dnflow.targets`).
    alpha: Regularization weight > 0.
    q_d: (L, N) control offset (default 0), or a `ControlVector`.
    """

    __slots__ = ('_target', '_alpha', '_q_d')

    def __init__(self, target, alpha, q_d=None):
        if not (math.isfinite(alpha) and alpha > 0):
            raise ValueError('Bad regularization weight: {!r}'.format(alpha))
        if q_d is not None:
            q_d = np.array(getattr(q_d, 'values', q_d), dtype=float)
            if not np.all(np.isfinite(q_d)):
                raise ValueError('Bad control offset: non-finite entries')
            q_d.setflags(write=False)
        self._target = target
        self._alpha = float(alpha)
        self._q_d = q_d

    def __repr__(self):
        return 'ObjectiveData({!r}, alpha={!r})'.format(
            self._target, self._alpha)

    @property
    def target(self):
        return self._target

    @property
    def alpha(self):
        return self._alpha

    def offset(self, shape):
        if self._q_d is None:
            return np.zeros(shape)
        if self._q_d.shape != shape:
            raise ValueError('Bad control offset shape: {!r} != {!r}'.format(
                self._q_d.shape, shape))
        return self._q_d


class ObjectiveReport:
    """
    Value j = tracking + regularization of the reduced objective at
    `control`, or j = inf when the state blew up.
    """

    __slots__ = ('j', 'tracking', 'regularization', 'control', 'blowup',
                 'trajectory')

    def __init__(self, tracking, regularization, control, outcome):
        self.blowup = isinstance(outcome, BlowupReport)
        self.tracking = math.inf if self.blowup else tracking
        self.regularization = regularization
        self.j = self.tracking + regularization
        self.control = control
        # The state trajectory, or the `BlowupReport`
        self.trajectory = outcome

    def __repr__(self):
        return ('ObjectiveReport(j={!r}, tracking={!r}, '
                'regularization={!r}, blowup={!r})').format(
                    self.j, self.tracking, self.regularization, self.blowup)


class ControlProblem:
    """
    Everything that fixes the reduced objective q -> j(q): the
    discretization, time grid, initial velocity, physics, and objective
    data.  Remembers the last state solve so that evaluating and then
    differentiating at the same control solves the state once.
    """

    def __init__(self, disc, grid, u0, data, physics=None):
        self.disc = disc
        self.grid = grid
        self.u0 = u0
        self.data = data
        self.physics = physics if physics is not None else PhysicsSettings()
        self._last = None

    def __repr__(self):
        return 'ControlProblem({!r}, {!r}, {!r})'.format(
            self.disc, self.grid, self.data)

    @property
    def shape(self):
        return (self.disc.n_segments, self.grid.N)

    def offset(self):
        return self.data.offset(self.shape)

    def state(self, q):
        key = np.asarray(q.values).tobytes()
        if self._last is not None and self._last[0] == key:
            return self._last[1]
        outcome = solve_state(self.disc, self.grid, q, self.u0, self.physics)
        self._last = (key, outcome)
        return outcome


def evaluate_objective(problem, q):
    """
    j(q) = dt sum_{n<N} 1/4 int |u^n - u_d(t_n)|^4
         + alpha / 2 dt sum_{n=1..N} sum_i (q_i^n - q_{d,i}^n)^2,
    or inf when the state blows up.
    """
    grid = problem.grid
    diff = q.values - problem.offset()
    regularization = (0.5 * problem.data.alpha
                      * timegrid.inner(diff, diff, grid.dt))
    outcome = problem.state(q)
    tracking = math.inf
    if not isinstance(outcome, BlowupReport):
        layout = problem.disc.layout
        target = problem.data.target
        tracking = grid.dt * sum(
            assembly.tracking_integral(
                outcome.u[n], target.sample(n, grid.times[n], layout),
                layout)
            for n in range(grid.N))
    report = ObjectiveReport(tracking, regularization, q, outcome)
    logger.debug('Objective: %r', report)
    return report


def _solved(problem, q):
    report = evaluate_objective(problem, q)
    if report.blowup:
        raise BlowupError(report.trajectory)
    return report


def _adjoint_gradient(problem, q, z):
    disc = problem.disc
    traces = z.boundary_traces(disc.loads)
    regularization = problem.data.alpha * (q.values - problem.offset())
    return problem.grid.dt * (regularization
                              - _hooks['adjoint_sign'] * traces)


def gradient(problem, q):
    """
    Euclidean gradient g of j at q, so that the directional derivative
    along dq is sum_i sum_n g_i^n dq_i^n.  Returns (g, report) with g an
    unbounded `ControlVector`.  Raises `BlowupError` when q is outside
    the set of controls with a global state.
    """
    report = _solved(problem, q)
    z = adjoint.solve_adjoint(report.trajectory, problem.data.target)
    report.trajectory.clear_factors()
    g = timegrid.ControlVector(_adjoint_gradient(problem, q, z))
    return g, report


def curvature(problem, q, dq):
    """The second derivative j''(q)(dq, dq)."""
    report = _solved(problem, q)
    traj = report.trajectory
    dq_values = np.asarray(getattr(dq, 'values', dq), dtype=float)
    du = sensitivity.solve_tangent(traj, dq_values)
    d2u = sensitivity.solve_second_tangent(traj, du, du)
    terms = adjoint.tracking_terms(traj, problem.data.target, hessians=True)
    dt = problem.grid.dt
    value = problem.data.alpha * timegrid.inner(dq_values, dq_values, dt)
    # Step 0 is fixed by the initial condition
    for n in range(1, problem.grid.N):
        r, h = terms[n]
        value += dt * (du.u[n] @ (h @ du.u[n]) + r @ d2u.u[n])
    traj.clear_factors()
    return float(value)


def _clip(values, lower, upper):
    return np.minimum(np.maximum(values, lower[:, None]), upper[:, None])


def project(q, bounds=None):
    """
    Entrywise projection onto the box [lower, upper].

    bounds: Optional (lower, upper) pair of per-segment arrays; defaults
        to the bounds carried by q.
    """
    lower, upper = (q.lower, q.upper) if bounds is None else bounds
    lower = np.broadcast_to(np.asarray(lower, dtype=float),
                            (q.n_segments,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float),
                            (q.n_segments,))
    return timegrid.ControlVector(_clip(q.values, lower, upper), lower, upper)


def stationarity(q, g, dt):
    """
    ||P(q - g) - q|| / dt for the Euclidean gradient g, with || || the
    Euclidean norm over all segments and steps.  Without active bounds
    this is the Euclidean norm of the Riesz gradient G = g / dt.
    """
    values = getattr(g, 'values', g)
    step = _clip(q.values - values, q.lower, q.upper) - q.values
    return float(np.linalg.norm(step)) / dt


def projection_residual(problem, q):
    """
    ||q - P(b_i^T z / alpha + q_d)||, Euclidean like `stationarity`: the
    distance of q from the fixed point of the projection formula for
    optimal controls.
    """
    report = _solved(problem, q)
    z = adjoint.solve_adjoint(report.trajectory, problem.data.target)
    traces = _hooks['adjoint_sign'] * z.boundary_traces(problem.disc.loads)
    fixed = _clip(traces / problem.data.alpha + problem.offset(),
                  q.lower, q.upper)
    report.trajectory.clear_factors()
    return float(np.linalg.norm(q.values - fixed))


@dataclasses.dataclass(frozen=True)
class OptimizerSettings:
    """
    tol: Bound on the stationarity measure.
    max_iter: Iteration limit.
    c1: Armijo sufficient decrease constant.
    shrink: Backtracking factor.
    initial_step: First trial step (in L2(I) Riesz units).
    max_step: Cap on the Barzilai-Borwein trial steps.
    max_backtracks: Trials per line search.
    """
    tol: float = 1e-6
    max_iter: int = 500
    c1: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    max_step: float = 1e4
    max_backtracks: int = 40

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError('Bad tolerance: {!r}'.format(self.tol))
        if not (isinstance(self.max_iter, int) and self.max_iter >= 0):
            raise ValueError('Bad iteration limit: {!r}'.format(
                self.max_iter))
        if not 0 < self.c1 < 1:
            raise ValueError('Bad Armijo constant: {!r}'.format(self.c1))
        if not 0 < self.shrink < 1:
            raise ValueError('Bad shrink factor: {!r}'.format(self.shrink))
        if not 0 < self.initial_step <= self.max_step:
            raise ValueError('Bad step bounds: {!r}, {!r}'.format(
                self.initial_step, self.max_step))
        if not (isinstance(self.max_backtracks, int)
                and self.max_backtracks >= 1):
            raise ValueError('Bad backtracking limit: {!r}'.format(
                self.max_backtracks))


class IterationRecord:

    __slots__ = ('iter', 'j', 'tracking', 'regularization', 'stationarity',
                 'step', 'blowups_in_linesearch')

    fields = __slots__

    def __init__(self, iteration, report, stationarity, step, blowups):
        self.iter = iteration
        self.j = report.j
        self.tracking = report.tracking
        self.regularization = report.regularization
        self.stationarity = stationarity
        self.step = step
        self.blowups_in_linesearch = blowups

    def __repr__(self):
        return 'IterationRecord({})'.format(', '.join(
            '{}={!r}'.format(f, getattr(self, f)) for f in self.fields))

    def as_tuple(self):
        return tuple(getattr(self, f) for f in self.fields)


class IterationLog:
    """
    The records of an optimization run.

    status: 'converged', 'max_iter', or 'line_search' (no acceptable
        step found).
    """

    def __init__(self):
        self.records = []
        self.status = None
        self.final_report = None

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def converged(self):
        return self.status == 'converged'

    def append(self, record):
        self.records.append(record)
        logger.info('Iteration %d: j = %.10g, stationarity = %.3e, '
                    'step = %.3g, blowups = %d', record.iter, record.j,
                    record.stationarity, record.step,
                    record.blowups_in_linesearch)


def _line_search(problem, q, G, j, step, settings):
    """Returns (trial report, step, blowups) or (None, step, blowups)."""
    dt = problem.grid.dt
    blowups = 0
    for trial in range(settings.max_backtracks):
        values = _clip(q.values - step * G, q.lower, q.upper)
        moved = timegrid.norm(values - q.values, dt)
        report = evaluate_objective(problem, q.with_values(values))
        logger.debug('Line search trial %d: step %.3g, j = %.10g', trial,
                     step, report.j)
        if report.blowup:
            blowups += 1
        elif report.j <= j - settings.c1 * moved**2 / step and moved > 0:
            return report, step, blowups
        step *= settings.shrink
    return None, step, blowups


def optimize(problem, q0, settings=None):
    """
    Projected gradient method with Armijo backtracking and
    Barzilai-Borwein initial steps for min j(q) over the box carried by
    q0.  A trial control whose state blows up counts as j = inf.

    Returns (q, log).  Raises `InfeasibleStartError` if the state blows
    up at q0.
    """
    settings = settings if settings is not None else OptimizerSettings()
    if not q0.is_feasible():
        raise ValueError('Bad initial control: outside the bounds')
    dt = problem.grid.dt
    log = IterationLog()
    report = evaluate_objective(problem, q0)
    if report.blowup:
        raise InfeasibleStartError(report.trajectory)
    q = q0
    g, report = gradient(problem, q)
    G = g.values / dt
    step = settings.initial_step
    taken, blowups = 0.0, 0
    for iteration in range(settings.max_iter + 1):
        measure = stationarity(q, g, dt)
        log.append(IterationRecord(iteration, report, measure, taken,
                                   blowups))
        if measure <= settings.tol:
            log.status = 'converged'
            break
        if iteration == settings.max_iter:
            log.status = 'max_iter'
            break
        trial, taken, blowups = _line_search(problem, q, G, report.j, step,
                                             settings)
        if trial is None:
            logger.warning('Line search failed at iteration %d', iteration)
            log.status = 'line_search'
            break
        q_new = trial.control
        g, report = gradient(problem, q_new)
        G_new = g.values / dt
        dq = q_new.values - q.values
        curv = timegrid.inner(dq, G_new - G, dt)
        step = (min(settings.max_step, timegrid.inner(dq, dq, dt) / curv)
                if curv > 0 else settings.initial_step)
        q, G = q_new, G_new
    log.final_report = report
    logger.info('Optimization %s after %d iterations, j = %.10g',
                log.status, len(log) - 1, report.j)
    return q, log
