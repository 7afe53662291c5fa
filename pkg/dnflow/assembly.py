# Assembly of the bilinear and trilinear forms of the flow problem and of
# the nonlinear tracking terms

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import numpy as np
import scipy.sparse as sparse

from . import femspace


# Export public API
__all__ = (
    'CONVECTION_DEGREE',
    'TRACKING_DEGREE',
    'assemble_boundary_loads',
    'assemble_convection',
    'assemble_convection_transposed_linearization',
    'assemble_divergence',
    'assemble_mass',
    'assemble_scalar_mass',
    'assemble_scalar_stiffness',
    'assemble_stiffness',
    'assemble_tracking_terms',
    'convection_action',
    'tracking_integral',
    'tracking_rule',
)


# Quadrature degrees: the convection integrand of P2 fields has degree 5,
# the quartic tracking integrand degree 8
CONVECTION_DEGREE = 5
TRACKING_DEGREE = 8

# Negative-control hook, flipped only by `verify.corrupted`
_hooks = {'convection_sign': 1.0}


def _scatter(rows, cols, values, shape):
    # COO to CSR sums duplicates in a fixed order, which makes assembly
    # deterministic
    matrix = sparse.coo_matrix(
        (values.ravel(), (rows.ravel(), cols.ravel())), shape=shape)
    return matrix.tocsr()


def _scalar_p2(layout, local):
    nodes = layout.element_nodes
    rows = np.broadcast_to(nodes[:, :, None], local.shape)
    cols = np.broadcast_to(nodes[:, None, :], local.shape)
    n = layout.n_nodes
    return _scatter(rows, cols, local, (n, n))


def _scalar_p1(layout, local):
    nodes = layout.element_pressure
    rows = np.broadcast_to(nodes[:, :, None], local.shape)
    cols = np.broadcast_to(nodes[:, None, :], local.shape)
    n = layout.n_pressure
    return _scatter(rows, cols, local, (n, n))


def _vector(block):
    return sparse.block_diag((block, block), format='csr')


def assemble_scalar_mass(layout, degree=2):
    """Scalar mass matrix of the P2 (`degree=2`) or P1 space."""
    rule = femspace.triangle_rule(4)
    table = femspace.eval_basis(rule)
    det = layout.geometry.det
    if degree == 2:
        local = np.einsum('q,qa,qb,e->eab', rule.weights, table.p2,
                          table.p2, det)
        return _scalar_p2(layout, local)
    elif degree == 1:
        local = np.einsum('q,qa,qb,e->eab', rule.weights, table.p1,
                          table.p1, det)
        return _scalar_p1(layout, local)
    raise ValueError('Bad polynomial degree: {!r}'.format(degree))


def assemble_scalar_stiffness(layout, degree=2):
    """Scalar stiffness matrix (grad phi_a, grad phi_b)."""
    geometry = layout.geometry
    if degree == 2:
        rule = femspace.triangle_rule(2)
        grad = geometry.grad_p2(rule)
        local = np.einsum('q,e,eqad,eqbd->eab', rule.weights,
                          geometry.det, grad, grad)
        return _scalar_p2(layout, local)
    elif degree == 1:
        g = geometry.grad_lambda
        local = 0.5 * geometry.det[:, None, None] * np.einsum(
            'ead,ebd->eab', g, g)
        return _scalar_p1(layout, local)
    raise ValueError('Bad polynomial degree: {!r}'.format(degree))


def assemble_mass(layout):
    """Velocity mass matrix, block diagonal in the two components."""
    return _vector(assemble_scalar_mass(layout))


def assemble_stiffness(layout):
    """Velocity stiffness matrix (grad u, grad v), unit viscosity."""
    return _vector(assemble_scalar_stiffness(layout))


def assemble_divergence(layout):
    """
    Divergence matrix D with (D u)_i = (div u, psi_i), rows the P1
    pressure tests, columns the velocity unknowns.
    """
    rule = femspace.triangle_rule(2)
    table = femspace.eval_basis(rule)
    geometry = layout.geometry
    grad = geometry.grad_p2(rule)
    blocks = []
    for c in range(2):
        local = np.einsum('q,e,qi,eqa->eia', rule.weights, geometry.det,
                          table.p1, grad[..., c])
        rows = np.broadcast_to(layout.element_pressure[:, :, None],
                               local.shape)
        cols = np.broadcast_to(layout.element_nodes[:, None, :],
                               local.shape)
        blocks.append(_scatter(rows, cols, local,
                               (layout.n_pressure, layout.n_nodes)))
    return sparse.hstack(blocks, format='csr')


def assemble_boundary_loads(layout):
    """
    Returns the list [b_1, ..., b_L] with (b_i)_k = int_{Gamma_i}
    phi_k . n ds over the velocity basis.
    """
    mesh = layout.mesh
    rule = femspace.edge_rule(5)
    s = rule.points[:, 1]
    # Edge restriction of the P2 basis: end a, end b, midpoint
    shape = np.stack(((1 - s) * (1 - 2 * s), s * (2 * s - 1),
                      4 * s * (1 - s)), axis=1)
    integrals = rule.weights @ shape
    normal, length = mesh.edge_normals()
    mids = mesh.n_vertices + mesh.edge_index(mesh.boundary_edges)
    nodes = np.column_stack((mesh.boundary_edges, mids))
    loads = []
    for tag in range(1, mesh.n_segments + 1):
        sel = mesh.edge_tags == tag
        load = np.zeros(layout.n_velocity)
        for c in range(2):
            values = (length[sel, None] * normal[sel, c, None]
                      * integrals[None, :])
            np.add.at(load, nodes[sel] + c * layout.n_nodes, values)
        loads.append(load)
    return loads


def _convection_field(u, layout, rule):
    table = femspace.eval_basis(rule)
    uq = layout.at_points(u, rule)
    grad = layout.geometry.grad_p2(rule)
    return table, uq, grad


def assemble_convection(u, layout):
    """Matrix of w -> ((u . grad) w, v) for the velocity u."""
    rule = femspace.triangle_rule(CONVECTION_DEGREE)
    table, uq, grad = _convection_field(u, layout, rule)
    advect = np.einsum('eqc,eqbc->eqb', uq, grad)
    local = np.einsum('q,e,qa,eqb->eab', rule.weights, layout.geometry.det,
                      table.p2, advect)
    local *= _hooks['convection_sign']
    return _vector(_scalar_p2(layout, local))


def assemble_convection_transposed_linearization(u, layout):
    """Matrix of w -> ((w . grad) u, v) for the velocity u."""
    rule = femspace.triangle_rule(CONVECTION_DEGREE)
    table = femspace.eval_basis(rule)
    grad = layout.geometry.grad_p2(rule)
    # du[e, q, c, d] = d u_c / d x_d
    du = np.einsum('ekc,eqkd->eqcd', layout.element_values(u), grad)
    mass_q = np.einsum('q,qa,qb->qab', rule.weights, table.p2, table.p2)
    det = layout.geometry.det
    blocks = [[None, None], [None, None]]
    for c in range(2):
        for d in range(2):
            local = np.einsum('qab,e,eq->eab', mass_q, det, du[..., c, d])
            local *= _hooks['convection_sign']
            blocks[c][d] = _scalar_p2(layout, local)
    return sparse.bmat(blocks, format='csr')


def convection_action(u, w, layout):
    """The vector ((u . grad) w, v) over the velocity tests v."""
    rule = femspace.triangle_rule(CONVECTION_DEGREE)
    table, uq, grad = _convection_field(u, layout, rule)
    dw = np.einsum('ekc,eqkd->eqcd', layout.element_values(w), grad)
    advected = np.einsum('eqd,eqcd->eqc', uq, dw)
    local = np.einsum('q,e,qa,eqc->eac', rule.weights, layout.geometry.det,
                      table.p2, advected)
    local *= _hooks['convection_sign']
    out = np.zeros(layout.n_velocity)
    nodes = layout.element_nodes
    np.add.at(out, nodes, local[..., 0])
    np.add.at(out, nodes + layout.n_nodes, local[..., 1])
    return out


def tracking_rule():
    return femspace.triangle_rule(TRACKING_DEGREE)


def tracking_integral(u, target, layout):
    """
    The quadrature value of 1/4 int |u - u_d|^4.

    target: (nt, nq, 2) values of u_d at the points of `tracking_rule()`.
    """
    rule = tracking_rule()
    e = layout.at_points(u, rule) - target
    e2 = np.einsum('eqc,eqc->eq', e, e)
    return 0.25 * float(np.einsum('q,e,eq->', rule.weights,
                                  layout.geometry.det, e2 * e2))


def assemble_tracking_terms(u, target, layout):
    """
    Returns (r, H) where r_k = int |e|^2 e . phi_k with e = u - u_d is the
    gradient of `tracking_integral`, and H its derivative in u:
    (H w, v) = int |e|^2 (w . v) + 2 (e . w)(e . v).
    """
    rule = tracking_rule()
    table = femspace.eval_basis(rule)
    det = layout.geometry.det
    e = layout.at_points(u, rule) - target
    e2 = np.einsum('eqc,eqc->eq', e, e)
    local = np.einsum('q,e,qa,eqc->eac', rule.weights, det, table.p2,
                      e2[..., None] * e)
    r = np.zeros(layout.n_velocity)
    nodes = layout.element_nodes
    np.add.at(r, nodes, local[..., 0])
    np.add.at(r, nodes + layout.n_nodes, local[..., 1])
    mass_q = np.einsum('q,qa,qb->qab', rule.weights, table.p2, table.p2)
    blocks = [[None, None], [None, None]]
    for c in range(2):
        for d in range(2):
            weight = 2.0 * e[..., c] * e[..., d]
            if c == d:
                weight = weight + e2
            local = np.einsum('qab,e,eq->eab', mass_q, det, weight)
            blocks[c][d] = _scalar_p2(layout, local)
    return r, sparse.bmat(blocks, format='csr')
