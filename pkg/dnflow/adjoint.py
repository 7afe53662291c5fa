# Backward-in-time discrete adjoint of the implicit Euler state scheme

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import logging

import numpy as np

from . import assembly
from . import linsolve


# Export public API
__all__ = (
    'AdjointTrajectory',
    'solve_adjoint',
    'tracking_terms',
)


logger = logging.getLogger(__name__)


class AdjointTrajectory:
    """
    Adjoint velocity and pressure coefficients for n = 0..N.

    z[N] = 0 always (the tracking sum stops at t_{N-1}).  z[0] is not
    coupled to any control and is left at zero.
    """

    __slots__ = ('_z_u', '_z_p', '_grid')

    def __init__(self, z_u, z_p, grid):
        self._z_u = z_u
        self._z_p = z_p
        self._grid = grid

    def __repr__(self):
        return 'AdjointTrajectory({!r})'.format(self._grid)

    @property
    def z(self):
        """Velocity parts, (N + 1, n_velocity)."""
        return self._z_u

    @property
    def pressure(self):
        return self._z_p

    @property
    def grid(self):
        return self._grid

    def boundary_traces(self, loads):
        """
        The (L, N) array of b_i^T z^n for n = 1..N, the adjoint fluxes
        through the open segments.
        """
        return np.array([self._z_u[1:] @ b for b in loads])


def tracking_terms(traj, target, hessians=False):
    """
    Per-step tracking data r(u^n, u_d^n) (and H(u^n, u_d^n) when
    `hessians`) for n = 0..N-1, as returned by
    `assembly.assemble_tracking_terms`.
    """
    layout = traj.disc.layout
    terms = []
    for n in range(traj.grid.N):
        r, h = assembly.assemble_tracking_terms(
            traj.u[n], target.sample(n, traj.grid.times[n], layout), layout)
        terms.append((r, h) if hessians else r)
    return terms


def solve_adjoint(traj, target, residuals=None):
    """
    Solves J_n^T z^n = [r^n + M z^{n+1} / dt; 0] for n = N-1..1 with
    z^N = 0, where J_n is the step Jacobian at u^n and r^n the tracking
    residual.

    With this scaling the derivative of the discrete tracking term
    dt sum_{n<N} 1/4 int |u^n - u_d^n|^4 along a control direction dq is
    -dt sum_n sum_i dq_i^n b_i^T z^n.

    residuals: Optional precomputed list from `tracking_terms`.
    """
    grid = traj.grid
    if traj.n_completed != grid.N:
        raise ValueError(
            'Bad trajectory: only {} of {} steps completed'.format(
                traj.n_completed, grid.N))
    disc = traj.disc
    if residuals is None:
        residuals = tracking_terms(traj, target)
    dt = grid.dt
    z_u = np.zeros_like(traj.u)
    z_p = np.zeros_like(traj.p)
    n_p = disc.layout.n_pressure
    for n in range(grid.N - 1, 0, -1):
        rhs = np.concatenate((residuals[n] + disc.mass @ z_u[n + 1] / dt,
                              np.zeros(n_p)))
        try:
            x = traj.step_factor(n).solve_transposed(disc.constrain(rhs))
        except linsolve.SingularSystemError as error:
            raise linsolve.SingularSystemError(
                'Adjoint step {} (t = {}): {}'.format(
                    n, grid.times[n], error), error.dof) from None
        z_u[n], z_p[n] = disc.split(x)
    logger.debug('Adjoint solve: |z^1| = %.3e',
                 disc.velocity_norm(z_u[1]) if grid.N > 1 else 0.0)
    return AdjointTrajectory(z_u, z_p, grid)
