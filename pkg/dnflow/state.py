# Implicit Euler time marching of the Navier-Stokes (or Stokes) state
# equation with Do-Nothing data on the open segments

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import collections
import dataclasses
import logging

import numpy as np
import scipy.sparse as sparse

from . import assembly
from . import femspace
from . import linsolve


# Export public API
__all__ = (
    'FACTOR_CACHE_SIZE',
    'BlowupError',
    'BlowupReport',
    'Discretization',
    'PhysicsSettings',
    'Trajectory',
    'flowrate',
    'make_w_field',
    'solve_state',
    'solve_state_stokes',
    'step_matrix',
)


logger = logging.getLogger(__name__)


# Step Jacobian factorizations a trajectory keeps at once.  One LU of the
# default 40 x 20 mesh takes tens of megabytes.
FACTOR_CACHE_SIZE = 4


@dataclasses.dataclass(frozen=True)
class PhysicsSettings:
    """
    mode: 'ns' (Navier-Stokes) or 'stokes' (convection omitted).
    blowup_threshold: L2 norm of the velocity above which the solution
        counts as blown up.
    newton_tol: Bound on the sup norm of the step residual, relative to
        the size of the step data (but never looser than absolute).
    newton_max: Newton iterations allowed per step.
    """
    mode: str = 'ns'
    blowup_threshold: float = 1e6
    newton_tol: float = 1e-10
    newton_max: int = 20

    def __post_init__(self):
        if self.mode not in ('ns', 'stokes'):
            raise ValueError('Bad physics mode: {!r}'.format(self.mode))
        if not self.blowup_threshold > 0:
            raise ValueError('Bad blowup threshold: {!r}'.format(
                self.blowup_threshold))
        if not self.newton_tol > 0:
            raise ValueError('Bad Newton tolerance: {!r}'.format(
                self.newton_tol))
        if not (isinstance(self.newton_max, int) and self.newton_max >= 1):
            raise ValueError('Bad Newton iteration limit: {!r}'.format(
                self.newton_max))


class Discretization:
    """
    The assembled, time-independent parts of the discrete flow problem on
    a mesh: layout, mass M, stiffness K, divergence D, and the open
    boundary loads b_i.

    The unknown vector of a step is x = (u, p).  The step system is

        [ A   -D^T ] [u]   [f]
        [ -D    0  ] [p] = [0]

    with the rows and columns of the wall velocity unknowns replaced by
    identity rows (homogeneous no-slip data).
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.layout = femspace.DofLayout(mesh)
        self.mass = assembly.assemble_mass(self.layout)
        self.stiffness = assembly.assemble_stiffness(self.layout)
        self.divergence = assembly.assemble_divergence(self.layout)
        self.loads = assembly.assemble_boundary_loads(self.layout)
        layout = self.layout
        self.n_velocity = layout.n_velocity
        self.n_total = layout.n_total
        free = np.ones(self.n_total)
        free[layout.constrained] = 0.0
        self._free = free
        self._keep = sparse.diags(free)
        self._fixed = sparse.diags(1.0 - free)
        self._stokes_factors = {}

    def __repr__(self):
        return 'Discretization({!r}, {!r})'.format(self.mesh, self.layout)

    @property
    def n_segments(self):
        return len(self.loads)

    def saddle(self, block):
        """Constrained step matrix for the velocity block A (CSC)."""
        d = self.divergence
        full = sparse.bmat([[block, -d.T], [-d, None]], format='csr')
        return sparse.csc_matrix(self._keep @ full @ self._keep
                                 + self._fixed)

    def constrain(self, rhs):
        """Zeros the wall rows of a full-length right hand side."""
        return rhs * self._free

    def enforce_no_slip(self, u):
        """Copy of a velocity vector with its wall values set to zero."""
        u = np.array(u, dtype=float)
        u[self.layout.constrained] = 0.0
        return u

    def load(self, levels):
        """The velocity vector sum_i q_i b_i."""
        out = np.zeros(self.n_velocity)
        for level, b in zip(levels, self.loads):
            out += level * b
        return out

    def velocity_norm(self, u):
        return float(np.sqrt(max(u @ (self.mass @ u), 0.0)))

    def stokes_factor(self, dt):
        if dt not in self._stokes_factors:
            block = self.mass / dt + self.stiffness
            self._stokes_factors[dt] = linsolve.factorize(self.saddle(block))
        return self._stokes_factors[dt]

    def split(self, x):
        return x[:self.n_velocity], x[self.n_velocity:]


def step_matrix(disc, dt, u, mode='ns'):
    """
    The Jacobian of the implicit Euler step residual at velocity u:
    M/dt + K + C(u) + C'(u) in the velocity block.  Newton, the tangent
    solvers and the adjoint all build their matrices here.
    """
    block = disc.mass / dt + disc.stiffness
    if mode == 'ns':
        layout = disc.layout
        block = (block + assembly.assemble_convection(u, layout)
                 + assembly.assemble_convection_transposed_linearization(
                     u, layout))
    return disc.saddle(block)


def step_residual(disc, dt, x, u_old, levels, mode='ns'):
    u, p = disc.split(x)
    r_u = (disc.mass @ (u - u_old) / dt + disc.stiffness @ u
           - disc.divergence.T @ p + disc.load(levels))
    if mode == 'ns':
        r_u += assembly.convection_action(u, u, disc.layout)
    r_u[disc.layout.constrained] = u[disc.layout.constrained]
    return np.concatenate((r_u, -(disc.divergence @ u)))


class Trajectory:
    """
    Velocity and pressure coefficients at t_0..t_n for a state, tangent,
    or second tangent solution.

    u: (n + 1, n_velocity) array.
    p: (n + 1, n_pressure) array; p[0] is zero (no step produced it).
    n_completed: Number of steps stored (N unless the solve blew up).

    The factorized step Jacobians used by the tangent and adjoint
    solvers are cached, at most `cache_size` of them, the least recently
    used being dropped first.
    """

    def __init__(self, disc, grid, u, p, control=None, mode='ns',
                 cache_size=FACTOR_CACHE_SIZE):
        self.disc = disc
        self.grid = grid
        self.u = u
        self.p = p
        self.control = control
        self.mode = mode
        self.cache_size = cache_size
        self._factors = collections.OrderedDict()

    def __repr__(self):
        return 'Trajectory(steps={}, {!r}, mode={!r})'.format(
            self.n_completed, self.grid, self.mode)

    @property
    def n_completed(self):
        return len(self.u) - 1

    @property
    def times(self):
        return self.grid.times[:len(self.u)]

    def flowrates(self):
        """Q(u^n) for every stored step."""
        b = self.disc.loads[0]
        return -(self.u @ b)

    def step_factor(self, n):
        """Factorized step Jacobian at the converged velocity u^n."""
        if self.mode == 'stokes':
            return self.disc.stokes_factor(self.grid.dt)
        if n in self._factors:
            self._factors.move_to_end(n)
            return self._factors[n]
        factor = linsolve.factorize(step_matrix(
            self.disc, self.grid.dt, self.u[n], self.mode))
        self._factors[n] = factor
        while len(self._factors) > self.cache_size:
            self._factors.popitem(last=False)
        return factor

    @property
    def n_cached_factors(self):
        return len(self._factors)

    def clear_factors(self):
        """Releases the cached factorizations."""
        self._factors.clear()


class BlowupReport:
    """
    Outcome of a forward solve that failed in finite time.

    t_star: Time of the step that failed, in (0, T].
    trigger: 'norm', 'newton', or 'nan'.
    last_norm: L2 norm of the last stored velocity.
    trajectory: The steps completed before the failure.
    """

    __slots__ = ('t_star', 'trigger', 'last_norm', 'trajectory')

    def __init__(self, t_star, trigger, last_norm, trajectory):
        self.t_star = t_star
        self.trigger = trigger
        self.last_norm = last_norm
        self.trajectory = trajectory

    def __repr__(self):
        return 'BlowupReport(t_star={!r}, trigger={!r}, last_norm={!r})'\
            .format(self.t_star, self.trigger, self.last_norm)


class BlowupError(Exception):

    def __init__(self, report, message=None):
        if message is None:
            message = 'State blew up at t = {} ({})'.format(
                report.t_star, report.trigger)
        super().__init__(message)
        self.report = report


def _newton_step(disc, dt, u_old, p_old, levels, physics, step):
    """Returns (x, iterations) or (None, trigger)."""
    x = np.concatenate((u_old, p_old))
    scale = max(1.0, np.abs(disc.mass @ u_old).max() / dt
                + np.abs(disc.load(levels)).max())
    tol = physics.newton_tol * scale
    for iteration in range(physics.newton_max + 1):
        residual = step_residual(disc, dt, x, u_old, levels)
        size = np.abs(residual).max()
        logger.debug('Step %d, Newton %d: residual %.3e', step, iteration,
                     size)
        if not np.isfinite(size):
            return None, 'nan'
        if size <= tol:
            return x, iteration
        if iteration == physics.newton_max:
            break
        u, _ = disc.split(x)
        try:
            factor = linsolve.factorize(step_matrix(disc, dt, u))
            x = x + factor.solve(-residual)
        except (linsolve.SingularSystemError, ValueError) as error:
            logger.debug('Step %d: Newton solve failed: %s', step, error)
            break
    return None, 'newton'


def _march(disc, grid, q, u0, physics, callback):
    if q.n_segments != disc.n_segments or q.n_steps != grid.N:
        raise ValueError(
            'Bad control shape: {!r} for {} segments and {} steps'
            .format(q.values.shape, disc.n_segments, grid.N))
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (disc.n_velocity,):
        raise ValueError('Bad initial velocity length: {}'.format(u0.shape))
    if np.any(u0[disc.layout.constrained] != 0.0):
        raise ValueError(
            'Bad initial velocity: nonzero wall values (see '
            'Discretization.enforce_no_slip)')
    dt = grid.dt
    n_p = disc.layout.n_pressure
    us = np.empty((grid.N + 1, disc.n_velocity))
    ps = np.empty((grid.N + 1, n_p))
    us[0] = u0
    ps[0] = 0.0
    if callback is not None:
        callback(0, 0.0, us[0], ps[0])
    stokes = physics.mode == 'stokes'
    for n in range(1, grid.N + 1):
        levels = q.at_step(n)
        if stokes:
            rhs = np.concatenate((disc.mass @ us[n - 1] / dt
                                  - disc.load(levels), np.zeros(n_p)))
            x = disc.stokes_factor(dt).solve(disc.constrain(rhs))
            trigger = None if np.all(np.isfinite(x)) else 'nan'
        else:
            x, trigger = _newton_step(disc, dt, us[n - 1], ps[n - 1],
                                      levels, physics, n)
            trigger = None if x is not None else trigger
        if trigger is None:
            us[n], ps[n] = disc.split(x)
            norm = disc.velocity_norm(us[n])
            if norm > physics.blowup_threshold:
                trigger = 'norm'
        if trigger is not None:
            partial = Trajectory(disc, grid, us[:n].copy(), ps[:n].copy(),
                                 q, physics.mode)
            report = BlowupReport(grid.times[n], trigger,
                                  disc.velocity_norm(us[n - 1]), partial)
            logger.warning('Blowup at t = %g (%s), last norm %.3e',
                           report.t_star, trigger, report.last_norm)
            return report
        if callback is not None:
            callback(n, grid.times[n], us[n], ps[n])
    logger.info('State solve (%s) completed %d steps, final flowrate %g',
                physics.mode, grid.N, -(disc.loads[0] @ us[-1]))
    return Trajectory(disc, grid, us, ps, q, physics.mode)


def solve_state(disc, grid, q, u0, physics=None, callback=None):
    """
    Marches the state equation from u0 under the controls q.

    Returns a `Trajectory`, or a `BlowupReport` when the velocity norm
    exceeds the threshold, Newton fails, or NaNs appear.

    callback: Optional function (n, t, u, p) called after every accepted
        step (and for the initial state).
    """
    physics = physics if physics is not None else PhysicsSettings()
    return _march(disc, grid, q, u0, physics, callback)


def solve_state_stokes(disc, grid, q, u0, physics=None, callback=None):
    """Like `solve_state` with the convection term omitted."""
    physics = physics if physics is not None else PhysicsSettings()
    physics = dataclasses.replace(physics, mode='stokes')
    return _march(disc, grid, q, u0, physics, callback)


def flowrate(u, disc):
    """Q(u) = -int_{Gamma_1} u . n ds."""
    return -float(disc.loads[0] @ u)


def make_w_field(geom):
    """
    The divergence-free field w = (1 / phi(x1), x2 phi'(x1) / phi(x1)^2)
    derived from the streamfunction x2 / phi(x1); it is tangent to the
    walls x2 = +-phi(x1).
    """
    def w(x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        phi = geom.phi(x1)
        return 1.0 / phi, x2 * geom.dphi(x1) / phi**2
    return w
