# Tests `timegrid.py`

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import math
import unittest

import numpy as np

from ..timegrid import ControlVector, TimeGrid, inner, norm


class TimeGridTest(unittest.TestCase):

    def test_times(self):
        grid = TimeGrid(1.0, 4)
        np.testing.assert_array_equal([0.0, 0.25, 0.5, 0.75, 1.0],
                                      grid.times)
        self.assertEqual(0.25, grid.dt)

    def test_step_of(self):
        grid = TimeGrid(1.0, 4)
        self.assertEqual(1, grid.step_of(0.0))
        self.assertEqual(1, grid.step_of(0.1))
        self.assertEqual(1, grid.step_of(0.25))
        self.assertEqual(2, grid.step_of(0.26))
        self.assertEqual(2, grid.step_of(0.5))
        self.assertEqual(4, grid.step_of(1.0))
        with self.assertRaises(ValueError):
            grid.step_of(1.5)

    def test_refined(self):
        self.assertEqual(TimeGrid(2.0, 20), TimeGrid(2.0, 10).refined())

    def test_bad(self):
        for T, N in ((0.0, 10), (-1.0, 10), (math.inf, 10), (1.0, 0),
                     (1.0, 2.5)):
            with self.assertRaises(ValueError):
                TimeGrid(T, N)


class ControlVectorTest(unittest.TestCase):

    def test_constant(self):
        grid = TimeGrid(1.0, 3)
        q = ControlVector.constant(grid, (0.0, 50.0))
        self.assertEqual((2, 3), q.values.shape)
        np.testing.assert_array_equal([0.0, 50.0], q.at_step(2))
        self.assertTrue(q.is_feasible())

    def test_from_function_left_open_intervals(self):
        grid = TimeGrid(1.0, 4)
        q = ControlVector.from_function(grid, lambda t: (t, -t), 2)
        np.testing.assert_array_equal([0.25, 0.5, 0.75, 1.0], q.values[0])
        np.testing.assert_array_equal([-0.5, 0.5], q.at_step(2)[::-1])

    def test_sampled(self):
        grid = TimeGrid(1.0, 2)
        q = ControlVector([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(
            [[1.0, 3.0], [1.0, 3.0], [2.0, 4.0]], q.sampled())
        self.assertEqual(grid.N + 1, len(q.sampled()))

    def test_bounds(self):
        q = ControlVector([[0.0, 2.0]], lower=[0.0], upper=[1.0])
        self.assertFalse(q.is_feasible())
        self.assertTrue(q.with_values([[0.5, 1.0]]).is_feasible())
        np.testing.assert_array_equal([0.0], q.lower)

    def test_bad(self):
        with self.assertRaises(ValueError):
            ControlVector([[math.nan, 1.0]])
        with self.assertRaises(ValueError):
            ControlVector([[0.0]], lower=[1.0], upper=[1.0])
        with self.assertRaises(ValueError):
            ControlVector([1.0, 2.0])
        with self.assertRaises(IndexError):
            ControlVector([[1.0]]).at_step(2)

    def test_immutable(self):
        q = ControlVector([[1.0, 2.0]])
        with self.assertRaises(ValueError):
            q.values[0, 0] = 3.0

    def test_inner(self):
        a = np.array([[1.0, 2.0]])
        b = np.array([[3.0, -1.0]])
        self.assertEqual(0.5, inner(a, b, 0.5))
        self.assertEqual(math.sqrt(2.5), norm(a, 0.5))


if __name__ == '__main__':
    unittest.main()
