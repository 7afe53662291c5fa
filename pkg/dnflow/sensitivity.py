# Tangent and second tangent equations of the discrete control-to-state
# map

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import logging

import numpy as np

from . import assembly
from . import linsolve
from .state import Trajectory


# Export public API
__all__ = (
    'solve_second_tangent',
    'solve_tangent',
)


logger = logging.getLogger(__name__)


def _check_complete(traj):
    if traj.n_completed != traj.grid.N:
        raise ValueError(
            'Bad trajectory: only {} of {} steps completed'.format(
                traj.n_completed, traj.grid.N))


def _march_linear(traj, load):
    """
    Solves J_n x_n = [M v_{n-1} / dt - load(n); 0] for n = 1..N from
    v_0 = 0, where J_n is the step Jacobian at the state u^n.
    """
    disc = traj.disc
    dt = traj.grid.dt
    n_p = disc.layout.n_pressure
    us = np.zeros_like(traj.u)
    ps = np.zeros_like(traj.p)
    for n in range(1, traj.grid.N + 1):
        rhs = np.concatenate((disc.mass @ us[n - 1] / dt - load(n),
                              np.zeros(n_p)))
        try:
            x = traj.step_factor(n).solve(disc.constrain(rhs))
        except linsolve.SingularSystemError as error:
            raise linsolve.SingularSystemError(
                'Step {} (t = {}): {}'.format(n, traj.grid.times[n], error),
                error.dof) from None
        us[n], ps[n] = disc.split(x)
    return Trajectory(disc, traj.grid, us, ps, mode=traj.mode)


def solve_tangent(traj, dq):
    """
    Derivative du = S'(q) dq of the discrete state along the control
    direction dq (a `ControlVector` or an (L, N) array), with du(0) = 0.
    """
    _check_complete(traj)
    values = getattr(dq, 'values', dq)
    values = np.asarray(values, dtype=float)
    if values.shape != (traj.disc.n_segments, traj.grid.N):
        raise ValueError('Bad direction shape: {!r}'.format(values.shape))
    disc = traj.disc
    tangent = _march_linear(traj, lambda n: disc.load(values[:, n - 1]))
    logger.debug('Tangent solve: final |du| = %.3e',
                 disc.velocity_norm(tangent.u[-1]))
    return tangent


def solve_second_tangent(traj, du, ru):
    """
    Second derivative S''(q)(dq, rq) given the tangents du = S'(q) dq and
    ru = S'(q) rq.  Each step carries the load C(du)ru + C(ru)du and no
    control term; in Stokes mode the result vanishes.
    """
    _check_complete(traj)
    layout = traj.disc.layout
    if traj.mode == 'stokes':
        return _march_linear(traj, lambda n: 0.0)

    def load(n):
        return (assembly.convection_action(du.u[n], ru.u[n], layout)
                + assembly.convection_action(ru.u[n], du.u[n], layout))

    return _march_linear(traj, load)
