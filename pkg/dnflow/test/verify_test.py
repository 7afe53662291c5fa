# Tests `verify.py`

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from .. import assembly
from .. import config
from .. import optimal
from .. import verify
from ..output import write_checks_csv
from ..state import BlowupReport
from ..timegrid import ControlVector, TimeGrid
from . import data


class CorruptedTest(unittest.TestCase):

    def test_restores_hooks(self):
        with verify.corrupted('convection'):
            self.assertEqual(-1.0, assembly._hooks['convection_sign'])
        self.assertEqual(1.0, assembly._hooks['convection_sign'])
        with self.assertRaises(RuntimeError):
            with verify.corrupted('adjoint'):
                self.assertEqual(-1.0, optimal._hooks['adjoint_sign'])
                raise RuntimeError()
        self.assertEqual(1.0, optimal._hooks['adjoint_sign'])

    def test_unknown(self):
        with self.assertRaises(ValueError):
            with verify.corrupted('pressure'):
                pass


class OracleTest(unittest.TestCase):

    def test_poiseuille(self):
        flow = verify.poiseuille_oracle(data.straight_geometry, 3.0)
        self.assertAlmostEqual(1.0, flow.flowrate)
        with self.assertRaises(ValueError):
            verify.poiseuille_oracle(data.default_geometry, 3.0)

    def test_gradient_sweep(self):
        problem, q, rng = verify._small_problem('stokes', N=4)
        dq = rng.standard_normal(q.values.shape)
        rows = verify.gradient_sweep(problem, q, dq, (1e-2, 1e-4))
        self.assertEqual([1e-2, 1e-4], [row[0] for row in rows])
        self.assertEqual(rows[0][2], rows[1][2])
        self.assertLess(min(row[3] for row in rows), 1e-6)


class CheckTest(unittest.TestCase):

    def test_trilinear(self):
        result = verify.run_check('trilinear')
        self.assertTrue(result.passed, result)
        self.assertEqual('trilinear', result.name)
        self.assertGreaterEqual(result.seconds, 0.0)

    def test_negative_convection(self):
        self.assertTrue(verify.run_check('negative_convection').passed)
        self.assertEqual(1.0, assembly._hooks['convection_sign'])

    def test_negative_adjoint(self):
        result = verify.run_check('negative_adjoint')
        self.assertTrue(result.passed, result)
        self.assertEqual(0.0, result.value)
        self.assertEqual(1.0, optimal._hooks['adjoint_sign'])

    def test_poiseuille(self):
        result = verify.run_check('poiseuille')
        self.assertTrue(result.passed, result)
        self.assertLess(result.value, 1e-6)

    def test_duality(self):
        self.assertTrue(verify.run_check('duality').passed)

    def test_profiles(self):
        quick = [name for name, (_, profiles) in verify.CHECKS.items()
                 if 'quick' in profiles]
        self.assertNotIn('optimal_tracking', quick)
        self.assertIn('negative_adjoint', quick)
        self.assertTrue(all('full' in profiles
                            for _, profiles in verify.CHECKS.values()))

    def test_bad_profile(self):
        with self.assertRaises(ValueError):
            verify.run_all('slow')

    def test_experiment_configs(self):
        for name, document in verify.EXPERIMENTS.items():
            cfg = config.from_dict(document)
            self.assertEqual(100, cfg.time.N, name)
            self.assertGreater(cfg.objective.alpha, 0.0)
        tracking = config.from_dict(verify.EXPERIMENTS['tracking'])
        self.assertEqual((0.0, 50.0), tracking.control.values)
        self.assertEqual((50.0, 0.0), tracking.objective.q_d)
        faster = config.from_dict(verify.EXPERIMENTS['tracking_20w'])
        self.assertEqual('scaled_w(20)', faster.objective.target)
        self.assertEqual(tracking.control, faster.control)
        self.assertEqual((1e-1, 1e-2, 1e-3, 1e-4), verify.SWEEP_ALPHAS)



class BlowupCheckTest(unittest.TestCase):

    def run_blowup(self, t_star):
        # Replaces the forward solves; the Stokes runs complete
        def solve(disc, grid, q, u0):
            if t_star is None:
                return object()
            return BlowupReport(t_star, 'newton', 1.0, None)
        with mock.patch.object(verify, 'solve_state', solve), \
                mock.patch.object(verify, 'solve_state_stokes',
                                  lambda *args: object()):
            return verify.run_check('blowup')

    def test_blowup_before_final_time(self):
        result = self.run_blowup(0.4)
        self.assertTrue(result.passed, result)
        self.assertEqual(0.4, result.value)

    def test_failure_at_final_time(self):
        self.assertFalse(self.run_blowup(1.0).passed)

    def test_no_blowup(self):
        result = self.run_blowup(None)
        self.assertFalse(result.passed)
        self.assertEqual(np.inf, result.value)


class DriftTest(unittest.TestCase):

    def setUp(self):
        self.grid = TimeGrid(1.0, 4)

    def test_toward_offset(self):
        q = ControlVector([[0.0, 2.0, 1.5, 0.5], [1.0, -3.0, -1.0, 0.0]])
        self.assertEqual(-1.5,
                         verify.drift_toward_offset(q, 0.0, self.grid))

    def test_away_from_offset(self):
        q = ControlVector([[0.0, 2.0, 1.5, 0.5], [1.0, 1.0, 1.0, 3.0]])
        self.assertEqual(2.0,
                         verify.drift_toward_offset(q, 0.0, self.grid))

    def test_offset_per_segment(self):
        q = ControlVector([[50.0, 10.0, 30.0, 45.0], [0.0, 5.0, 3.0, 1.0]])
        q_d = np.array([[50.0] * 4, [0.0] * 4])
        self.assertEqual(-4.0,
                         verify.drift_toward_offset(q, q_d, self.grid))

class ReportTest(unittest.TestCase):

    def test_checks_csv(self):
        results = [verify.run_check('trilinear'),
                   verify.CheckResult('blowup', np.inf, 1.0, False)]
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'verify.csv')
            write_checks_csv(path, results)
            with open(path) as file:
                lines = file.read().splitlines()
        self.assertEqual(3, len(lines))
        self.assertTrue(lines[1].startswith('trilinear,'))
        self.assertEqual('blowup,inf,1.0,0,0.000', lines[2])


if __name__ == '__main__':
    unittest.main()
