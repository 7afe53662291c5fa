# Verification harness: analytic oracles, discrete derivative tests,
# property checks, and reproductions of the channel flow experiments

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import contextlib
import logging
import time

import numpy as np

from . import assembly
from . import config
from . import femspace
from . import mesh as meshes
from . import optimal
from . import output
from . import sensitivity
from . import targets
from . import timegrid
from .adjoint import solve_adjoint, tracking_terms
from .state import (BlowupReport, Discretization, PhysicsSettings,
                    make_w_field, solve_state, solve_state_stokes)


# Export public API
__all__ = (
    'CHECKS',
    'EPSILONS',
    'EXPERIMENTS',
    'SWEEP_ALPHAS',
    'CheckResult',
    'corrupted',
    'drift_toward_offset',
    'gradient_sweep',
    'poiseuille_oracle',
    'run_all',
    'run_check',
)


logger = logging.getLogger(__name__)


# Finite difference steps of the gradient test
EPSILONS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7)

# Tight Newton tolerance so that finite differences see the discrete map
_PRECISE_TOL = 1e-12


class CheckResult:

    __slots__ = ('name', 'value', 'threshold', 'passed', 'seconds')

    def __init__(self, name, value, threshold, passed, seconds=0.0):
        self.name = name
        self.value = value
        self.threshold = threshold
        self.passed = passed
        self.seconds = seconds

    def __repr__(self):
        return ('CheckResult({!r}, value={!r}, threshold={!r}, '
                'passed={!r})').format(self.name, self.value,
                                       self.threshold, self.passed)


def poiseuille_oracle(geom, dq):
    """
    Exact steady solution of the channel problem with pressure drop dq
    between the open ends.  Only straight channels (r = R) qualify.
    """
    return targets.poiseuille_flow(geom, dq)


@contextlib.contextmanager
def corrupted(name):
    """
    Temporarily flips the sign of the convection term ('convection') or
    of the adjoint term of the gradient ('adjoint').
    """
    if name == 'convection':
        hooks, key = assembly._hooks, 'convection_sign'
    elif name == 'adjoint':
        hooks, key = optimal._hooks, 'adjoint_sign'
    else:
        raise ValueError('Bad corruption: {!r}'.format(name))
    saved = hooks[key]
    hooks[key] = -saved
    try:
        yield
    finally:
        hooks[key] = saved


def gradient_sweep(problem, q, dq, epsilons=EPSILONS):
    """
    Compares <g, dq> with central differences of j along dq.  Returns a
    list of (eps, difference quotient, directional derivative, relative
    error).  Raises `BlowupError` if the state blows up at q.
    """
    g, _ = optimal.gradient(problem, q)
    directional = float(np.sum(g.values * dq))
    rows = []
    for eps in epsilons:
        plus = optimal.evaluate_objective(
            problem, q.with_values(q.values + eps * dq)).j
        minus = optimal.evaluate_objective(
            problem, q.with_values(q.values - eps * dq)).j
        quotient = (plus - minus) / (2.0 * eps)
        error = abs(quotient - directional) / max(abs(directional), 1e-300)
        logger.debug('eps %.0e: quotient %.12g, error %.3e', eps, quotient,
                     error)
        rows.append((eps, quotient, directional, error))
    return rows


# Problem sizes per profile
_SIZES = {
    'quick': {'nx': 8, 'ny': 4, 'N': 10, 'blowup': (20, 10, 50)},
    'full': {'nx': 40, 'ny': 20, 'N': 100, 'blowup': (40, 20, 100)},
}

# The derivative tests run on the small configuration in both profiles
_SMALL = {'nx': 8, 'ny': 4, 'N': 10}


def _channel(nx, ny, geom=None):
    geom = geom if geom is not None else meshes.ChannelGeometry()
    return Discretization(meshes.generate_channel_mesh(geom, nx, ny))


def _small_problem(mode, seed=0, N=_SMALL['N']):
    disc = _channel(_SMALL['nx'], _SMALL['ny'])
    grid = timegrid.TimeGrid(1.0, N)
    rng = np.random.default_rng(seed)
    physics = PhysicsSettings(mode=mode, newton_tol=_PRECISE_TOL)
    target = targets.scaled_w(meshes.ChannelGeometry(), 2.0)
    data = optimal.ObjectiveData(target, 1e-2, np.ones((2, grid.N)))
    problem = optimal.ControlProblem(disc, grid, np.zeros(disc.n_velocity),
                                     data, physics)
    q = timegrid.ControlVector(rng.uniform(-2.0, 2.0, (2, grid.N)))
    return problem, q, rng


def check_poiseuille(profile):
    sizes = _SIZES[profile]
    geom = meshes.ChannelGeometry(1.0, 1.0, 2.0)
    flow = poiseuille_oracle(geom, 3.0)
    disc = _channel(sizes['nx'], sizes['ny'], geom)
    grid = timegrid.TimeGrid(1.0, sizes['N'])
    u0 = disc.enforce_no_slip(femspace.interpolate(flow.velocity,
                                                   disc.layout))
    q = timegrid.ControlVector.constant(grid, (3.0, 0.0))
    traj = solve_state(disc, grid, q, u0)
    if isinstance(traj, BlowupReport):
        return np.inf, 0.01
    error = abs(traj.flowrates()[-1] - flow.flowrate) / flow.flowrate
    return error, 0.01


def _trilinear_errors(disc, rng, pairs):
    layout = disc.layout
    mesh = disc.mesh
    rule = femspace.edge_rule(7)
    s = rule.points[:, 1]
    shape = np.stack(((1 - s) * (1 - 2 * s), s * (2 * s - 1),
                      4 * s * (1 - s)), axis=1)
    normal, length = mesh.edge_normals()
    nodes = np.column_stack((mesh.boundary_edges, mesh.n_vertices
                             + mesh.edge_index(mesh.boundary_edges)))
    tri = femspace.triangle_rule(7)
    grad = layout.geometry.grad_p2(tri)
    det = layout.geometry.det
    errors = []
    for _ in range(pairs):
        u = rng.standard_normal(layout.n_velocity)
        v = rng.standard_normal(layout.n_velocity)
        assembled = v @ (assembly.assemble_convection(u, layout) @ v)
        # Boundary part 1/2 int (u . n) |v|^2 ds
        u1, u2 = layout.split(u)
        v1, v2 = layout.split(v)
        un = (shape @ u1[nodes].T) * normal[:, 0] \
            + (shape @ u2[nodes].T) * normal[:, 1]
        v_sq = (shape @ v1[nodes].T)**2 + (shape @ v2[nodes].T)**2
        boundary = 0.5 * float(rule.weights @ (un * v_sq) @ length)
        # Volume part -1/2 int (div u) |v|^2 dx
        div = np.einsum('ekc,eqkc->eq', layout.element_values(u), grad)
        vq = layout.at_points(v, tri)
        volume = -0.5 * float(np.einsum(
            'q,e,eq,eq->', tri.weights, det, div,
            np.einsum('eqc,eqc->eq', vq, vq)))
        oracle = boundary + volume
        scale = max(abs(oracle), abs(boundary), abs(volume))
        errors.append(abs(assembled - oracle) / scale)
    return max(errors)


def check_trilinear(profile):
    sizes = _SIZES[profile]
    disc = _channel(min(sizes['nx'], 20), min(sizes['ny'], 10))
    return _trilinear_errors(disc, np.random.default_rng(1), 10), 1e-12


def _duality_error(N, seed):
    problem, q, rng = _small_problem('ns', seed, N)
    grid = problem.grid
    traj = solve_state(problem.disc, grid, q, problem.u0, problem.physics)
    dq = rng.standard_normal((2, N))
    du = sensitivity.solve_tangent(traj, dq)
    residuals = tracking_terms(traj, problem.data.target)
    z = solve_adjoint(traj, problem.data.target, residuals)
    lhs = grid.dt * sum(residuals[n] @ du.u[n] for n in range(N))
    rhs = -grid.dt * float(np.sum(dq * z.boundary_traces(
        problem.disc.loads)))
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0.0 else abs(lhs - rhs) / scale


def check_duality(profile):
    return max(_duality_error(N, seed) for seed, N in
               enumerate((1, 2, 10))), 1e-10


def _gradient_error(mode, directions=5, seed=0):
    problem, q, rng = _small_problem(mode, seed)
    worst = 0.0
    for _ in range(directions):
        # Smooth random direction
        t = problem.grid.times[1:]
        a = rng.standard_normal((2, 3))
        dq = (a[:, :1] + a[:, 1:2] * np.sin(np.pi * t)
              + a[:, 2:] * np.cos(np.pi * t))
        rows = gradient_sweep(problem, q, dq)
        worst = max(worst, min(row[3] for row in rows))
    return worst


def check_gradient_stokes(profile):
    return _gradient_error('stokes'), 1e-6


def check_gradient_ns(profile):
    return _gradient_error('ns'), 1e-6


def check_curvature(profile, eps=1e-4):
    problem, q, rng = _small_problem('ns', 3)
    dq = rng.standard_normal(q.values.shape)
    value = optimal.curvature(problem, q, dq)
    g_plus, _ = optimal.gradient(problem, q.with_values(q.values + eps * dq))
    g_minus, _ = optimal.gradient(problem,
                                  q.with_values(q.values - eps * dq))
    quotient = float(np.sum((g_plus.values - g_minus.values) * dq)) / (
        2.0 * eps)
    return abs(value - quotient) / abs(value), 1e-4


def _smooth_run(profile):
    """u0 = 0 driven by a smooth, compatible pressure ramp."""
    sizes = _SIZES[profile]
    disc = _channel(sizes['nx'], sizes['ny'])
    return disc, lambda N: timegrid.TimeGrid(0.5, N), (
        lambda t: (5.0 * np.sin(np.pi * t), 0.0))


def check_divergence(profile):
    disc, grid_of, levels = _smooth_run(profile)
    grid = grid_of(_SIZES[profile]['N'])
    q = timegrid.ControlVector.from_function(grid, levels, 2)
    traj = solve_state(disc, grid, q, np.zeros(disc.n_velocity))
    worst = max(np.abs(disc.divergence @ traj.u[n]).max()
                for n in range(1, grid.N + 1))
    return worst, 1e-9


def check_mirror(profile):
    sizes = _SIZES[profile]
    geom = meshes.ChannelGeometry()
    w = make_w_field(geom)

    def field(x1, x2):
        v1, v2 = w(x1, x2)
        return (1.0 + 0.5 * x2) * v1, (1.0 + 0.5 * x2) * v2

    def mirrored(x1, x2):
        v1, v2 = field(x1, -x2)
        return v1, -v2

    grid = timegrid.TimeGrid(0.5, sizes['N'])
    q = timegrid.ControlVector.from_function(
        grid, lambda t: (3.0 * t, -2.0 * t), 2)
    mesh = meshes.generate_channel_mesh(geom, sizes['nx'], sizes['ny'])
    flows = []
    for m, f in ((mesh, field), (mesh.reflected(), mirrored)):
        disc = Discretization(m)
        u0 = disc.enforce_no_slip(femspace.interpolate(f, disc.layout))
        flows.append(solve_state(disc, grid, q, u0).flowrates())
    return (np.abs(flows[0] - flows[1]).max()
            / np.abs(flows[0]).max()), 1e-10


def check_determinism(profile):
    disc, grid_of, levels = _smooth_run(profile)
    grid = grid_of(_SIZES[profile]['N'])
    q = timegrid.ControlVector.from_function(grid, levels, 2)
    u0 = np.zeros(disc.n_velocity)
    runs = [solve_state(Discretization(disc.mesh), grid, q, u0).u.tobytes()
            for _ in range(2)]
    return float(runs[0] != runs[1]), 0.0


def check_time_refinement(profile):
    """Deviation of the flowrate error ratio under halving dt from 2."""
    disc, grid_of, levels = _smooth_run(profile)
    grid = grid_of(_SIZES[profile]['N'])
    final = []
    for _ in range(3):
        q = timegrid.ControlVector.from_function(grid, levels, 2)
        final.append(solve_state(disc, grid, q, np.zeros(disc.n_velocity))
                     .flowrates()[-1])
        grid = grid.refined()
    ratio = (final[0] - final[1]) / (final[1] - final[2])
    logger.info('Time refinement ratio %.4f', ratio)
    return abs(ratio - 2.0), 0.3


def check_blowup(profile):
    """Latest blowup time of the two unstable runs (must be < T)."""
    nx, ny, N = _SIZES[profile]['blowup']
    geom = meshes.ChannelGeometry()
    disc = _channel(nx, ny, geom)
    grid = timegrid.TimeGrid(1.0, N)
    w = make_w_field(geom)
    u_w = disc.enforce_no_slip(femspace.interpolate(
        lambda x1, x2: tuple(15.0 * c for c in w(x1, x2)), disc.layout))
    cases = ((u_w, (0.0, 0.0)), (np.zeros(disc.n_velocity), (50.0, 0.0)))
    # Blowup times lie on the grid; a failure at T itself does not count
    threshold = grid.T - 0.5 * grid.dt
    t_star = 0.0
    for u0, levels in cases:
        q = timegrid.ControlVector.constant(grid, levels)
        outcome = solve_state(disc, grid, q, u0)
        if not isinstance(outcome, BlowupReport):
            return np.inf, threshold
        t_star = max(t_star, outcome.t_star)
        if isinstance(solve_state_stokes(disc, grid, q, u0), BlowupReport):
            return np.inf, threshold
    return t_star, threshold


def _negative(check):
    def run(profile):
        value, threshold = check(profile)
        # Passes when the corrupted check fails
        return float(value <= threshold), 0.0
    return run


def check_negative_convection(profile):
    with corrupted('convection'):
        return _negative(check_trilinear)(profile)


def check_negative_adjoint(profile):
    with corrupted('adjoint'):
        return _negative(check_gradient_ns)(profile)


# Configurations of the optimal control experiments
EXPERIMENTS = {
    'tracking': {
        'initial': {'velocity': 'scaled_w(15)'},
        'control': {'values': [0.0, 50.0]},
        'objective': {'target': 'scaled_w(10)', 'alpha': 1e-2,
                      'q_d': [50.0, 0.0]},
        'optimizer': {'tol': 1e-4},
    },
    # Same start and offset, a target twice as fast
    'tracking_20w': {
        'initial': {'velocity': 'scaled_w(15)'},
        'control': {'values': [0.0, 50.0]},
        'objective': {'target': 'scaled_w(20)', 'alpha': 1e-2,
                      'q_d': [50.0, 0.0]},
        'optimizer': {'tol': 1e-4},
    },
    'prevention': {
        'initial': {'velocity': 'zero'},
        'control': {'values': [0.0, 0.0]},
        'objective': {'target': 'zeta_w', 'alpha': 10.0,
                      'q_d': [0.0, 0.0]},
        'optimizer': {'tol': 1e-4},
    },
    'bidirectional': {
        'initial': {'velocity': 'zero'},
        'control': {'values': [0.0, 0.0]},
        'objective': {'target': 'sine_w(50)', 'alpha': 1e-1,
                      'q_d': [0.0, 0.0]},
        'optimizer': {'tol': 1e-4},
    },
}


# Regularization weights of the tracking sweep
SWEEP_ALPHAS = (1e-1, 1e-2, 1e-3, 1e-4)


def run_experiment(name, alpha=None):
    """
    Runs an optimal control experiment, optionally with another
    regularization weight.  Returns (run configuration, problem, q0, q*,
    log, flowrates of the optimal state, flowrates of the target).
    """
    cfg = config.from_dict(EXPERIMENTS[name])
    if alpha is not None:
        cfg = cfg.with_alpha(alpha)
    disc = cfg.build_discretization()
    grid = cfg.build_grid()
    problem = optimal.ControlProblem(disc, grid, cfg.initial_velocity(disc),
                                     cfg.objective_data(grid), cfg.physics)
    q0 = cfg.initial_control(grid)
    q, log = optimal.optimize(problem, q0, cfg.optimizer)
    final = log.final_report
    flows = (None if final.blowup else final.trajectory.flowrates())
    target_flows = targets.target_flowrates(problem.data.target, grid, disc)
    return cfg, problem, q0, q, log, flows, target_flows


def check_optimal_tracking(profile):
    _, problem, q0, q, log, flows, target_flows = run_experiment('tracking')
    if flows is None or not log.converged:
        return np.inf, 0.2
    if not log.final_report.j < log.records[0].j:
        return np.inf, 0.2
    mid = problem.grid.step_of(0.5)
    return abs(flows[mid] - target_flows[mid]) / abs(target_flows[mid]), 0.2


def drift_toward_offset(q, q_d, grid):
    """
    max_i |q_i(t_N) - q_d,i(t_N)| - |q_i(t_N/2) - q_d,i(t_N/2)|, negative
    when every control ends closer to its offset than at mid-interval.
    """
    q_d = np.broadcast_to(np.asarray(q_d, dtype=float), q.values.shape)
    mid = grid.step_of(0.5 * grid.T) - 1
    gap = np.abs(q.values - q_d)
    return float(np.max(gap[:, -1] - gap[:, mid]))


def check_tracking_20w(profile):
    """Ratio j(q*) / j(q0) of the faster target (must be < 1)."""
    *_, log, flows, _ = run_experiment('tracking_20w')
    if flows is None:
        return np.inf, 1.0 - 1e-12
    return log.final_report.j / log.records[0].j, 1.0 - 1e-12


def check_tracking_sweep(profile):
    """
    Largest drift of the optimal controls toward q_d over the sweep
    weights alpha <= 1e-2 (must be negative).  Every weight must give a
    state without blowup.
    """
    worst = -np.inf
    for alpha in SWEEP_ALPHAS:
        _, problem, _, q, _, flows, _ = run_experiment('tracking', alpha)
        if flows is None:
            return np.inf, -1e-12
        if alpha <= 1e-2:
            drift = drift_toward_offset(q, problem.offset(), problem.grid)
            logger.info('alpha %g: drift %.4g', alpha, drift)
            worst = max(worst, drift)
    return worst, -1e-12


def check_blowup_prevention(profile):
    *_, log, flows, _ = run_experiment('prevention')
    finite = flows is not None and bool(np.all(np.isfinite(flows)))
    return (float(np.abs(flows).max()) if finite else np.inf), np.inf


def check_bidirectional(profile):
    """Smaller of the largest inflow and outflow rates (must exceed 1e-6)."""
    *_, flows, _ = run_experiment('bidirectional')
    if flows is None:
        return np.inf, -1e-6
    return -min(flows.max(), -flows.min()), -1e-6


# Name -> (check, profiles).  A check passes when value <= threshold.
CHECKS = {
    'poiseuille': (check_poiseuille, ('quick', 'full')),
    'trilinear': (check_trilinear, ('quick', 'full')),
    'duality': (check_duality, ('quick', 'full')),
    'gradient_stokes': (check_gradient_stokes, ('quick', 'full')),
    'gradient_ns': (check_gradient_ns, ('quick', 'full')),
    'curvature': (check_curvature, ('quick', 'full')),
    'divergence': (check_divergence, ('quick', 'full')),
    'mirror': (check_mirror, ('quick', 'full')),
    'determinism': (check_determinism, ('quick', 'full')),
    'time_refinement': (check_time_refinement, ('quick', 'full')),
    'negative_convection': (check_negative_convection, ('quick', 'full')),
    'negative_adjoint': (check_negative_adjoint, ('quick', 'full')),
    'blowup': (check_blowup, ('quick', 'full')),
    'optimal_tracking': (check_optimal_tracking, ('full',)),
    'tracking_20w': (check_tracking_20w, ('full',)),
    'tracking_sweep': (check_tracking_sweep, ('full',)),
    'blowup_prevention': (check_blowup_prevention, ('full',)),
    'bidirectional': (check_bidirectional, ('full',)),
}


def run_check(name, profile='quick'):
    check, _ = CHECKS[name]
    start = time.perf_counter()
    value, threshold = check(profile)
    if threshold == np.inf:
        passed = bool(np.isfinite(value))
    else:
        passed = bool(value <= threshold)
    result = CheckResult(name, float(value), float(threshold), passed,
                         time.perf_counter() - start)
    logger.info('%s: %s (value %.3e, threshold %.3e, %.1f s)', name,
                'pass' if passed else 'FAIL', result.value,
                result.threshold, result.seconds)
    return result


def run_all(profile='quick', report=None):
    """
    Runs every check of a profile ('quick' or 'full') and returns the
    list of `CheckResult`s.  Writes a CSV report if `report` is a path.
    """
    if profile not in ('quick', 'full'):
        raise ValueError('Bad profile: {!r}'.format(profile))
    results = [run_check(name, profile)
               for name, (_, profiles) in CHECKS.items()
               if profile in profiles]
    if report is not None:
        output.write_checks_csv(report, results)
    return results
