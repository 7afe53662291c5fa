# Taylor-Hood P2/P1 space: quadrature, reference bases, degree-of-freedom
# layout, element geometry, and nodal interpolation

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import numpy as np
import numpy.polynomial.legendre as legendre
import scipy.special

from . import mesh as meshes


# Export public API
__all__ = (
    'BasisTable',
    'DofLayout',
    'ElementGeometry',
    'QuadratureRule',
    'edge_rule',
    'eval_basis',
    'eval_basis_at',
    'interpolate',
    'triangle_rule',
)


class QuadratureRule:
    """
    Quadrature on the reference simplex.

    points: (nq, 3) barycentric coordinates for triangles, (nq, 2) for
        edges.
    weights: (nq,) positive weights summing to the reference measure
        (1/2 for the triangle, 1 for the unit edge).
    degree: Polynomial degree integrated exactly.
    """

    __slots__ = ('_points', '_weights', '_degree')

    def __init__(self, points, weights, degree):
        self._points = np.asarray(points, dtype=float)
        self._weights = np.asarray(weights, dtype=float)
        self._degree = int(degree)
        if np.any(self._weights <= 0):
            raise ValueError('Bad quadrature: nonpositive weight')
        self._points.setflags(write=False)
        self._weights.setflags(write=False)

    def __repr__(self):
        return 'QuadratureRule(n={}, degree={})'.format(
            len(self._weights), self._degree)

    @property
    def points(self):
        return self._points

    @property
    def weights(self):
        return self._weights

    @property
    def degree(self):
        return self._degree

    def __len__(self):
        return len(self._weights)


_rule_cache = {}


def triangle_rule(degree=5):
    """
    Collapsed (Duffy) product rule exact for polynomials of the given
    total degree: Gauss-Jacobi in the collapsed direction, Gauss-Legendre
    along it.
    """
    key = ('tri', degree)
    if key not in _rule_cache:
        n = degree // 2 + 1
        a, wa = scipy.special.roots_jacobi(n, 1.0, 0.0)
        b, wb = legendre.leggauss(n)
        u = (1.0 + a) / 2.0
        v = (1.0 + b) / 2.0
        xi = np.repeat(u, n)
        eta = (1.0 - np.repeat(u, n)) * np.tile(v, n)
        weights = np.outer(wa / 4.0, wb / 2.0).ravel()
        points = np.stack((1.0 - xi - eta, xi, eta), axis=1)
        _rule_cache[key] = QuadratureRule(points, weights, 2 * n - 1)
    return _rule_cache[key]


def edge_rule(degree=5):
    """Gauss-Legendre rule on the unit edge, exact to the given degree."""
    key = ('edge', degree)
    if key not in _rule_cache:
        n = degree // 2 + 1
        x, w = legendre.leggauss(n)
        s = (1.0 + x) / 2.0
        _rule_cache[key] = QuadratureRule(
            np.stack((1.0 - s, s), axis=1), w / 2.0, 2 * n - 1)
    return _rule_cache[key]


# Local P2 numbering: the three vertex functions, then the edge functions
# 4 l1 l2, 4 l2 l0, 4 l0 l1 (the edge opposite vertex k is local k + 3)
_EDGE_PAIRS = ((1, 2), (2, 0), (0, 1))


class BasisTable:
    """
    Reference basis values at a set of points.

    p2, p1: (nq, 6), (nq, 3) values.
    dp2: (nq, 6, 3) derivatives of the P2 functions with respect to the
        barycentric coordinates.  Physical gradients follow from the
        chain rule with the (constant) gradients of the barycentric
        coordinates.
    ref_grad_p2, ref_grad_p1: (nq, 6, 2), (3, 2) gradients on the
        reference triangle (xi = l1, eta = l2).
    """

    __slots__ = ('p2', 'p1', 'dp2', 'ref_grad_p2', 'ref_grad_p1')

    # Gradients of (l0, l1, l2) on the reference triangle
    _ref_grad_lambda = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])

    def __init__(self, lam):
        lam = np.atleast_2d(np.asarray(lam, dtype=float))
        nq = len(lam)
        p2 = np.empty((nq, 6))
        dp2 = np.zeros((nq, 6, 3))
        for k in range(3):
            p2[:, k] = lam[:, k] * (2.0 * lam[:, k] - 1.0)
            dp2[:, k, k] = 4.0 * lam[:, k] - 1.0
        for k, (a, b) in enumerate(_EDGE_PAIRS, 3):
            p2[:, k] = 4.0 * lam[:, a] * lam[:, b]
            dp2[:, k, a] = 4.0 * lam[:, b]
            dp2[:, k, b] = 4.0 * lam[:, a]
        self.p2 = p2
        self.p1 = lam.copy()
        self.dp2 = dp2
        self.ref_grad_p2 = dp2 @ self._ref_grad_lambda
        self.ref_grad_p1 = self._ref_grad_lambda.copy()


def eval_basis(rule):
    """Tabulates the P2 and P1 bases at the points of a triangle rule."""
    return BasisTable(rule.points)


def eval_basis_at(lam):
    """Tabulates the bases at arbitrary barycentric points."""
    return BasisTable(lam)


class ElementGeometry:
    """
    Affine element data of a mesh.

    det: (nt,) Jacobian determinants (twice the areas).
    grad_lambda: (nt, 3, 2) physical gradients of the barycentric
        coordinates.
    """

    __slots__ = ('mesh', 'det', 'grad_lambda', '_grad_cache')

    def __init__(self, mesh):
        p = mesh.vertices[mesh.triangles]
        a = p[:, 1, 0] - p[:, 0, 0]
        b = p[:, 2, 0] - p[:, 0, 0]
        c = p[:, 1, 1] - p[:, 0, 1]
        d = p[:, 2, 1] - p[:, 0, 1]
        det = a * d - b * c
        grad = np.empty((len(det), 3, 2))
        # Rows of the inverse Jacobian
        grad[:, 1, 0] = d / det
        grad[:, 1, 1] = -b / det
        grad[:, 2, 0] = -c / det
        grad[:, 2, 1] = a / det
        grad[:, 0] = -grad[:, 1] - grad[:, 2]
        self.mesh = mesh
        self.det = det
        self.grad_lambda = grad
        self._grad_cache = {}

    def points(self, rule):
        """Physical quadrature points, (nt, nq, 2)."""
        p = self.mesh.vertices[self.mesh.triangles]
        return np.einsum('qk,ekd->eqd', rule.points, p)

    def grad_p2(self, rule):
        """Physical P2 gradients at the rule points, (nt, nq, 6, 2)."""
        key = (len(rule), rule.degree)
        if key not in self._grad_cache:
            table = eval_basis(rule)
            self._grad_cache[key] = np.einsum(
                'qkm,emd->eqkd', table.dp2, self.grad_lambda)
        return self._grad_cache[key]


class DofLayout:
    """
    Degrees of freedom of the Taylor-Hood pair on a mesh.

    Scalar P2 nodes are the vertices followed by the edge midpoints.
    Velocity unknowns are blocked by component: (u1 at all nodes, u2 at
    all nodes).  Pressure unknowns are the vertex values.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.geometry = ElementGeometry(mesh)
        nv = mesh.n_vertices
        edges = mesh.edges()
        self.n_nodes = nv + len(edges)
        self.n_velocity = 2 * self.n_nodes
        self.n_pressure = nv
        self.n_total = self.n_velocity + self.n_pressure
        vertices = mesh.vertices
        self.node_coords = np.vstack(
            (vertices, 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])))
        self.element_nodes = np.hstack(
            (mesh.triangles, nv + mesh.triangle_edges()))
        self.element_pressure = mesh.triangles.copy()
        # Boundary nodes per tag
        bedge = mesh.edge_index(mesh.boundary_edges)
        self.boundary_nodes = {}
        for tag in range(mesh.n_segments + 1):
            sel = mesh.edge_tags == tag
            nodes = np.concatenate(
                (mesh.boundary_edges[sel].ravel(), nv + bedge[sel]))
            self.boundary_nodes[tag] = np.unique(nodes)
        wall = self.boundary_nodes[meshes.DIRICHLET]
        self.constrained = np.concatenate((wall, wall + self.n_nodes))
        free = np.ones(self.n_velocity, dtype=bool)
        free[self.constrained] = False
        self.free_velocity = free
        for array in (self.node_coords, self.element_nodes,
                      self.element_pressure, self.constrained,
                      self.free_velocity):
            array.setflags(write=False)

    def __repr__(self):
        return 'DofLayout(velocity={}, pressure={})'.format(
            self.n_velocity, self.n_pressure)

    def split(self, u):
        """Views (u1, u2) of a velocity vector."""
        return u[:self.n_nodes], u[self.n_nodes:self.n_velocity]

    def element_values(self, u):
        """Local velocity coefficients, (nt, 6, 2)."""
        u1, u2 = self.split(u)
        return np.stack((u1[self.element_nodes], u2[self.element_nodes]),
                        axis=2)

    def at_points(self, u, rule):
        """Values of a velocity vector at the rule points, (nt, nq, 2)."""
        table = eval_basis(rule)
        return np.einsum('qk,ekc->eqc', table.p2, self.element_values(u))


def interpolate(field, layout, space='velocity'):
    """
    Nodal interpolant of an analytic field.

    field: Callable (x1, x2) -> (v1, v2) for `space='velocity'`, or
        (x1, x2) -> values for `space='p2'` and `space='pressure'`.
    """
    if space == 'velocity':
        x = layout.node_coords
        v1, v2 = field(x[:, 0], x[:, 1])
        values = np.concatenate((
            np.broadcast_to(np.asarray(v1, dtype=float), (len(x),)),
            np.broadcast_to(np.asarray(v2, dtype=float), (len(x),))))
    elif space in ('p2', 'pressure'):
        x = (layout.node_coords if space == 'p2'
             else layout.mesh.vertices)
        values = np.broadcast_to(
            np.asarray(field(x[:, 0], x[:, 1]), dtype=float),
            (len(x),)).copy()
    else:
        raise ValueError('Bad interpolation space: {!r}'.format(space))
    if not np.all(np.isfinite(values)):
        raise ValueError('Bad field: non-finite value at a node')
    return np.array(values)
