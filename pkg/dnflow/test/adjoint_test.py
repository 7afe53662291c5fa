# Tests `adjoint.py`

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import unittest

import numpy as np

from ..adjoint import solve_adjoint, tracking_terms
from ..sensitivity import solve_tangent
from ..state import PhysicsSettings, solve_state, solve_state_stokes
from ..targets import TrajectoryTarget, scaled_w
from ..timegrid import ControlVector, TimeGrid
from . import data


def _duality(traj, target, dq):
    """
    The two sides of the identity dt sum_n r^n . du^n =
    -dt sum_n sum_i dq_i^n b_i^T z^n.
    """
    dt = traj.grid.dt
    residuals = tracking_terms(traj, target)
    du = solve_tangent(traj, dq)
    z = solve_adjoint(traj, target, residuals)
    left = dt * sum(r @ du.u[n] for n, r in enumerate(residuals))
    right = -dt * float(np.sum(dq * z.boundary_traces(traj.disc.loads)))
    return left, right


class AdjointTest(unittest.TestCase):

    def setUp(self):
        self.disc = data.discretization(8, 4)
        self.target = scaled_w(data.default_geometry, 2.0)
        self.u0 = np.zeros(self.disc.n_velocity)
        self.rng = np.random.default_rng(20)

    def solve(self, N, solve=solve_state):
        grid = TimeGrid(0.5, N)
        q = ControlVector(self.rng.uniform(-2, 2, (2, N)))
        return solve(self.disc, grid, q, self.u0)

    def test_terminal_and_initial_zero(self):
        traj = self.solve(6)
        z = solve_adjoint(traj, self.target)
        self.assertEqual(0.0, np.abs(z.z[-1]).max())
        self.assertEqual(0.0, np.abs(z.z[0]).max())
        self.assertGreater(np.abs(z.z[1]).max(), 0.0)
        self.assertEqual((2, 6), z.boundary_traces(self.disc.loads).shape)

    def test_perfect_tracking(self):
        traj = self.solve(4)
        z = solve_adjoint(traj, TrajectoryTarget(traj))
        self.assertEqual(0.0, np.abs(z.z).max())

    def test_duality_navier_stokes(self):
        for N in (1, 2, 10):
            traj = self.solve(N)
            dq = self.rng.standard_normal((2, N))
            left, right = _duality(traj, self.target, dq)
            self.assertLessEqual(abs(left - right),
                                 1e-10 * max(1.0, abs(left)))

    def test_duality_stokes(self):
        traj = self.solve(5, solve_state_stokes)
        dq = self.rng.standard_normal((2, 5))
        left, right = _duality(traj, self.target, dq)
        self.assertLessEqual(abs(left - right), 1e-10 * max(1.0, abs(left)))

    def test_tracking_terms_match_target(self):
        traj = self.solve(3)
        terms = tracking_terms(traj, self.target, hessians=True)
        self.assertEqual(3, len(terms))
        r, h = terms[0]
        self.assertEqual((self.disc.n_velocity,), r.shape)
        self.assertEqual((self.disc.n_velocity, self.disc.n_velocity),
                         h.shape)

    def test_incomplete_trajectory(self):
        grid = TimeGrid(0.5, 3)
        q = ControlVector.constant(grid, (5.0, 0.0))
        report = solve_state(self.disc, grid, q, self.u0,
                             PhysicsSettings(blowup_threshold=1e-3))
        with self.assertRaises(ValueError):
            solve_adjoint(report.trajectory, self.target)


if __name__ == '__main__':
    unittest.main()
