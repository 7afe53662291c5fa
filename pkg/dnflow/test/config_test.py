# Tests `config.py`

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import json
import math
import os
import tempfile
import unittest

import numpy as np

from .. import config
from ..config import ConfigError, RunConfig


class FromDictTest(unittest.TestCase):

    def test_defaults(self):
        run = config.from_dict({})
        self.assertEqual(RunConfig(), run)
        self.assertEqual(1.0, run.geometry.r)
        self.assertEqual((40, 20), (run.mesh.nx, run.mesh.ny))
        self.assertEqual(100, run.time.N)
        self.assertEqual('ns', run.physics.mode)
        self.assertEqual('scaled_w(10)', run.objective.target)
        self.assertEqual((-math.inf, -math.inf), run.bounds.lower)

    def test_sections(self):
        run = config.from_dict({
            'geometry': {'r': 1, 'R': 1, 'L': 2},
            'mesh': {'nx': 10.0, 'ny': 4},
            'time': {'T': 0.5, 'N': 20},
            'physics': {'mode': 'stokes', 'newton_max': 5},
            'objective': {'target': 'zeta_w', 'alpha': 10, 'q_d': [1, 2]},
            'optimizer': {'tol': 1e-4},
        })
        self.assertEqual(1.0, run.geometry.R)
        self.assertIsInstance(run.geometry.R, float)
        self.assertEqual(10, run.mesh.nx)
        self.assertIsInstance(run.mesh.nx, int)
        self.assertEqual('stokes', run.physics.mode)
        self.assertEqual(10.0, run.objective.alpha)
        self.assertEqual((1.0, 2.0), run.objective.q_d)
        self.assertEqual(1e-4, run.optimizer.tol)
        self.assertEqual(500, run.optimizer.max_iter)

    def test_infinite_bounds(self):
        run = config.from_dict({'bounds': {'lower': [None, '-inf'],
                                           'upper': [10, 'inf']}})
        self.assertEqual((-math.inf, -math.inf), run.bounds.lower)
        self.assertEqual((10.0, math.inf), run.bounds.upper)

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as context:
            config.from_dict({'time': {'T': 1, 'dt': 0.01}})
        self.assertEqual('time.dt', context.exception.path)
        self.assertIn('time.dt', str(context.exception))

    def test_unknown_section(self):
        with self.assertRaises(ConfigError) as context:
            config.from_dict({'solver': {}})
        self.assertEqual('solver', context.exception.path)

    def test_bad_values(self):
        for document, path in (
                ({'mesh': {'nx': 2.5}}, 'mesh.nx'),
                ({'mesh': {'ny': 3}}, 'mesh'),
                ({'time': {'T': 'one'}}, 'time.T'),
                ({'time': {'N': True}}, 'time.N'),
                ({'physics': {'mode': 'euler'}}, 'physics'),
                ({'objective': {'alpha': 0}}, 'objective'),
                ({'objective': {'target': 'spiral(1)'}}, 'objective'),
                ({'objective': {'q_d': []}}, 'objective.q_d'),
                ({'geometry': {'r': None}}, 'geometry.r'),
                ({'bounds': {'lower': [0, 0], 'upper': [0, 1]}}, 'bounds'),
                ({'outputs': {'vtk_every': -1}}, 'outputs'),
                ({'time': []}, 'time')):
            with self.assertRaises(ConfigError, msg=document) as context:
                config.from_dict(document)
            self.assertEqual(path, context.exception.path)

    def test_not_an_object(self):
        with self.assertRaises(ConfigError):
            config.from_dict([1, 2])

    def test_to_dict_reads_back(self):
        run = config.from_dict({'bounds': {'lower': [0, None]},
                                'mesh': {'file': 'channel.txt'}})
        document = json.loads(json.dumps(run.to_dict()))
        self.assertEqual(run, config.from_dict(document))

    def test_with_alpha(self):
        run = RunConfig().with_alpha(0.5)
        self.assertEqual(0.5, run.objective.alpha)
        self.assertEqual('scaled_w(10)', run.objective.target)


class BuildTest(unittest.TestCase):

    def setUp(self):
        self.run = config.from_dict({'mesh': {'nx': 4, 'ny': 2},
                                     'time': {'T': 1, 'N': 4},
                                     'initial': {'velocity': 'scaled_w(3)'},
                                     'control': {'values': [1, -1]},
                                     'bounds': {'upper': [0.5, None]}})

    def test_bad_geometry(self):
        run = config.from_dict({'geometry': {'r': 0}})
        with self.assertRaises(ConfigError) as context:
            run.build_geometry()
        self.assertEqual('geometry', context.exception.path)

    def test_bad_time_grid(self):
        run = config.from_dict({'time': {'N': 0}})
        with self.assertRaises(ConfigError):
            run.build_grid()

    def test_segment_count(self):
        run = config.from_dict({'mesh': {'nx': 2, 'ny': 2},
                                'control': {'values': [1, 2, 3]}})
        with self.assertRaises(ConfigError) as context:
            run.build_discretization()
        self.assertEqual('control.values', context.exception.path)

    def test_initial_velocity(self):
        disc = self.run.build_discretization()
        u0 = self.run.initial_velocity(disc)
        self.assertEqual((disc.n_velocity,), u0.shape)
        self.assertEqual(0.0, np.abs(u0[disc.layout.constrained]).max())
        self.assertGreater(-float(disc.loads[0] @ u0), 0.0)

    def test_initial_control(self):
        grid = self.run.build_grid()
        q = self.run.initial_control(grid)
        np.testing.assert_array_equal([[1.0] * 4, [-1.0] * 4], q.values)
        np.testing.assert_array_equal([0.5, math.inf], q.upper)
        self.assertFalse(q.is_feasible())

    def test_objective_data(self):
        grid = self.run.build_grid()
        data = self.run.objective_data(grid)
        self.assertEqual(1e-2, data.alpha)
        self.assertEqual((2, 4), data.offset((2, 4)).shape)
        self.assertEqual('scaled_w(10.0)', data.target.name)


class LoadTest(unittest.TestCase):

    def setUp(self):
        self.dir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.dir.name, 'run.json')

    def tearDown(self):
        self.dir.cleanup()

    def test_load(self):
        with open(self.path, 'w') as file:
            json.dump({'time': {'N': 7}}, file)
        self.assertEqual(7, config.load(self.path).time.N)

    def test_missing_file(self):
        with self.assertRaises(ConfigError) as context:
            config.load(os.path.join(self.dir.name, 'missing.json'))
        self.assertIn('missing.json', str(context.exception))

    def test_bad_json(self):
        with open(self.path, 'w') as file:
            file.write('{"time": {"N": 7,}}')
        with self.assertRaises(ConfigError):
            config.load(self.path)


if __name__ == '__main__':
    unittest.main()
