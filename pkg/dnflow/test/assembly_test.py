# Tests `assembly.py`

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import unittest

import numpy as np

from .. import assembly
from ..femspace import DofLayout, interpolate
from ..state import make_w_field
from . import data


class ReferenceElementTest(unittest.TestCase):

    def setUp(self):
        self.layout = DofLayout(data.reference_triangle())

    def test_p1_mass(self):
        mass = assembly.assemble_scalar_mass(self.layout, 1).toarray()
        expected = 0.5 / 12 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]])
        np.testing.assert_allclose(mass, expected, atol=1e-15)

    def test_p1_stiffness(self):
        stiff = assembly.assemble_scalar_stiffness(self.layout, 1).toarray()
        expected = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]])
        np.testing.assert_allclose(stiff, expected, atol=1e-15)

    def test_p2_mass_total(self):
        mass = assembly.assemble_scalar_mass(self.layout).toarray()
        self.assertAlmostEqual(0.5, mass.sum(), places=14)

    def test_bad_degree(self):
        with self.assertRaises(ValueError):
            assembly.assemble_scalar_mass(self.layout, 3)


class MatrixTest(unittest.TestCase):

    def setUp(self):
        self.disc = data.discretization(6, 4)
        self.layout = self.disc.layout

    def test_mass_integrates_area(self):
        ones = np.zeros(self.layout.n_velocity)
        ones[:self.layout.n_nodes] = 1.0
        area = data.channel_mesh(6, 4).area()
        self.assertAlmostEqual(area, ones @ (self.disc.mass @ ones))

    def test_symmetry(self):
        for matrix in (self.disc.mass, self.disc.stiffness):
            self.assertLess(abs(matrix - matrix.T).max(), 1e-14)

    def test_stiffness_kernel(self):
        ones = np.ones(self.layout.n_velocity)
        self.assertLess(np.abs(self.disc.stiffness @ ones).max(), 1e-12)

    def test_divergence_of_linear_field(self):
        # div (x1, -x2) = 0 and div (x1, x2) = 2
        free = interpolate(lambda x1, x2: (x1, -x2), self.layout)
        self.assertLess(np.abs(self.disc.divergence @ free).max(), 1e-13)
        source = interpolate(lambda x1, x2: (x1, x2), self.layout)
        area = data.channel_mesh(6, 4).area()
        self.assertAlmostEqual(2.0 * area,
                               float((self.disc.divergence @ source).sum()))


class BoundaryLoadTest(unittest.TestCase):

    def test_straight_channel(self):
        disc = data.discretization(4, 2, 'straight')
        layout = disc.layout
        e1 = np.zeros(layout.n_velocity)
        e1[:layout.n_nodes] = 1.0
        b1, b2 = disc.loads
        # (1, 0) . n integrated over the ends of width 2
        self.assertAlmostEqual(-2.0, float(b1 @ e1))
        self.assertAlmostEqual(2.0, float(b2 @ e1))

    def test_flowrate_of_w(self):
        disc = data.discretization(8, 4)
        w = interpolate(make_w_field(data.default_geometry), disc.layout)
        self.assertAlmostEqual(2.0, -float(disc.loads[0] @ w), places=10)

    def test_divergence_theorem(self):
        # Sum of the fluxes of a field equals the integral of its
        # divergence when the field vanishes on the walls
        disc = data.discretization(8, 4)
        rng = np.random.default_rng(2)
        u = data.random_velocity(disc, rng)
        flux = sum(float(b @ u) for b in disc.loads)
        self.assertAlmostEqual(flux, float((disc.divergence @ u).sum()),
                               places=12)


class ConvectionTest(unittest.TestCase):

    def test_unit_square(self):
        # ((u . grad) u, v) with u = (x1, 0), v = (1, 0) on [0, 1]^2
        disc = data.discretization(4, 2, 'square')
        layout = disc.layout
        u = interpolate(lambda x1, x2: (x1, 0.0 * x2), layout)
        v = interpolate(lambda x1, x2: (1.0 + 0.0 * x1, 0.0 * x2), layout)
        matrix = assembly.assemble_convection(u, layout)
        self.assertAlmostEqual(0.5, float(v @ (matrix @ u)), places=13)
        self.assertAlmostEqual(
            0.5, float(v @ assembly.convection_action(u, u, layout)),
            places=13)

    def test_action_matches_matrices(self):
        disc = data.discretization(6, 4)
        layout = disc.layout
        rng = np.random.default_rng(3)
        u = rng.standard_normal(layout.n_velocity)
        w = rng.standard_normal(layout.n_velocity)
        np.testing.assert_allclose(
            assembly.convection_action(u, w, layout),
            assembly.assemble_convection(u, layout) @ w, atol=1e-11)
        np.testing.assert_allclose(
            assembly.convection_action(w, u, layout),
            assembly.assemble_convection_transposed_linearization(
                u, layout) @ w, atol=1e-11)

    def test_linearization(self):
        # The derivative of u -> C(u) u is C(u) + C'(u)
        disc = data.discretization(6, 4)
        layout = disc.layout
        rng = np.random.default_rng(4)
        u = rng.standard_normal(layout.n_velocity)
        du = rng.standard_normal(layout.n_velocity)
        eps = 1e-6
        quotient = (assembly.convection_action(u + eps * du, u + eps * du,
                                               layout)
                    - assembly.convection_action(u - eps * du, u - eps * du,
                                                 layout)) / (2 * eps)
        jacobian = (assembly.assemble_convection(u, layout)
                    + assembly.assemble_convection_transposed_linearization(
                        u, layout))
        np.testing.assert_allclose(jacobian @ du, quotient, atol=1e-7)


class TrackingTest(unittest.TestCase):

    def setUp(self):
        self.disc = data.discretization(6, 4)
        self.layout = self.disc.layout
        rule = assembly.tracking_rule()
        self.shape = (self.layout.mesh.n_triangles, len(rule), 2)

    def test_constant_difference(self):
        # 1/4 int |(1, 0)|^4 = area / 4
        u = np.zeros(self.layout.n_velocity)
        target = np.zeros(self.shape)
        target[..., 0] = 1.0
        area = self.layout.mesh.area()
        self.assertAlmostEqual(
            area / 4, assembly.tracking_integral(u, target, self.layout))

    def test_gradient_and_hessian(self):
        rng = np.random.default_rng(5)
        u = rng.standard_normal(self.layout.n_velocity)
        du = rng.standard_normal(self.layout.n_velocity)
        target = rng.standard_normal(self.shape)
        r, h = assembly.assemble_tracking_terms(u, target, self.layout)
        eps = 1e-5

        def value(x):
            return assembly.tracking_integral(x, target, self.layout)

        quotient = (value(u + eps * du) - value(u - eps * du)) / (2 * eps)
        self.assertAlmostEqual(1.0, quotient / float(r @ du), places=7)
        r_plus, _ = assembly.assemble_tracking_terms(u + eps * du, target,
                                                     self.layout)
        r_minus, _ = assembly.assemble_tracking_terms(u - eps * du, target,
                                                      self.layout)
        np.testing.assert_allclose(h @ du, (r_plus - r_minus) / (2 * eps),
                                   rtol=1e-6, atol=1e-6)

    def test_zero_at_target(self):
        rng = np.random.default_rng(6)
        u = rng.standard_normal(self.layout.n_velocity)
        target = self.layout.at_points(u, assembly.tracking_rule())
        r, h = assembly.assemble_tracking_terms(u, target, self.layout)
        self.assertEqual(0.0, assembly.tracking_integral(u, target,
                                                          self.layout))
        self.assertEqual(0.0, np.abs(r).max())
        self.assertEqual(0.0, abs(h).max())


if __name__ == '__main__':
    unittest.main()
