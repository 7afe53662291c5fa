# Tests `sensitivity.py`

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import math
import unittest

import numpy as np

from ..sensitivity import solve_second_tangent, solve_tangent
from ..state import PhysicsSettings, solve_state, solve_state_stokes
from ..timegrid import ControlVector, TimeGrid
from . import data


def _max_norm(disc, us):
    return max(disc.velocity_norm(u) for u in us)


class TangentTest(unittest.TestCase):

    def setUp(self):
        self.disc = data.discretization(8, 4)
        self.grid = TimeGrid(0.5, 5)
        rng = np.random.default_rng(10)
        self.q = ControlVector(5.0 + rng.uniform(-2, 2, (2, 5)))
        self.dq = rng.standard_normal((2, 5))
        self.u0 = np.zeros(self.disc.n_velocity)
        self.traj = solve_state(self.disc, self.grid, self.q, self.u0)

    def state(self, values, solve=solve_state):
        return solve(self.disc, self.grid, ControlVector(values), self.u0)

    def test_zero_direction(self):
        du = solve_tangent(self.traj, np.zeros((2, 5)))
        self.assertEqual(0.0, np.abs(du.u).max())

    def test_initial_value(self):
        du = solve_tangent(self.traj, self.dq)
        self.assertEqual(0.0, np.abs(du.u[0]).max())
        self.assertLess(
            np.abs(du.u[:, self.disc.layout.constrained]).max(), 1e-14)

    def test_linear_in_direction(self):
        du = solve_tangent(self.traj, self.dq)
        du3 = solve_tangent(self.traj, ControlVector(3.0 * self.dq))
        np.testing.assert_allclose(du3.u, 3.0 * du.u, atol=1e-10)

    def test_first_order_taylor(self):
        du = solve_tangent(self.traj, self.dq)
        errors = []
        for eps in (1e-1, 5e-2):
            moved = self.state(self.q.values + eps * self.dq)
            errors.append(_max_norm(
                self.disc, moved.u - self.traj.u - eps * du.u))
        self.assertGreaterEqual(math.log2(errors[0] / errors[1]), 1.8)

    def test_second_order_taylor(self):
        du = solve_tangent(self.traj, self.dq)
        d2u = solve_second_tangent(self.traj, du, du)
        errors = []
        for eps in (1e-1, 5e-2):
            moved = self.state(self.q.values + eps * self.dq)
            errors.append(_max_norm(
                self.disc, moved.u - self.traj.u - eps * du.u
                - 0.5 * eps**2 * d2u.u))
        self.assertGreaterEqual(math.log2(errors[0] / errors[1]), 2.7)

    def test_second_tangent_symmetric(self):
        rng = np.random.default_rng(11)
        du = solve_tangent(self.traj, self.dq)
        ru = solve_tangent(self.traj, rng.standard_normal((2, 5)))
        np.testing.assert_allclose(
            solve_second_tangent(self.traj, du, ru).u,
            solve_second_tangent(self.traj, ru, du).u, atol=1e-12)

    def test_stokes_exact(self):
        traj = self.state(self.q.values, solve_state_stokes)
        du = solve_tangent(traj, self.dq)
        moved = self.state(self.q.values + self.dq, solve_state_stokes)
        np.testing.assert_allclose(moved.u - traj.u, du.u, atol=1e-9)
        d2u = solve_second_tangent(traj, du, du)
        self.assertEqual(0.0, np.abs(d2u.u).max())

    def test_bad_direction(self):
        with self.assertRaises(ValueError):
            solve_tangent(self.traj, np.zeros((2, 4)))

    def test_incomplete_trajectory(self):
        report = solve_state(self.disc, self.grid, self.q, self.u0,
                             PhysicsSettings(blowup_threshold=1e-3))
        with self.assertRaises(ValueError):
            solve_tangent(report.trajectory, self.dq)


if __name__ == '__main__':
    unittest.main()
