"""
Do-Nothing channel flow: finite element Navier-Stokes solves with
blowup detection and optimal boundary pressure control.


Concepts
--------

The flow domain is a symmetric channel {0 <= x1 <= L, |x2| <= phi(x1)}
whose half-width phi widens smoothly from r at the inlet to R at the
outlet.  The walls x2 = +-phi(x1) carry the no-slip condition.  The two
ends are open boundaries: artificial cuts through a larger flow where
fluid may enter or leave.  On each open segment the Do-Nothing condition

    p n - du/dn = q_i n

prescribes only a (time-dependent) pressure level q_i.  These levels are
the controls.

The Do-Nothing condition does not control the kinetic energy that enters
through an open boundary, so for large initial velocities or large
pressure drops the discrete solution blows up in finite time.  The state
solver detects blowup (velocity norm threshold, Newton failure, or NaN)
and reports it as an outcome rather than failing.

Space is discretized with the Taylor-Hood pair (continuous quadratic
velocity, continuous linear pressure) on triangles, time with implicit
Euler and a full Newton iteration per step.  The flowrate through the
inlet, Q(u) = -int u . n ds, is the scalar diagnostic of every run.

The control problem tracks a target velocity u_d in the L4 norm,

    j(q) = 1/4 ||u(q) - u_d||^4 + alpha/2 ||q - q_d||^2,

over box-constrained controls.  Gradients come from the discrete adjoint
(exact for the discrete objective), curvature from the tangent and
second tangent equations, and the minimization from a projected gradient
method that treats controls whose state blows up as having j = inf.

Modules: `mesh` (geometry and meshes), `femspace` (quadrature, bases,
unknown layout), `assembly` (matrices and nonlinear terms), `linsolve`
(sparse direct solves), `timegrid` (time grids and controls), `state`
(forward solver), `sensitivity` (tangents), `adjoint`, `targets`,
`optimal` (objective and optimizer), `config`, `output`, `verify`, and
`cli`.


-----

Copyright (c) 2026 dnflow developers.

This is free software released under the MIT license.  See `LICENSE` for
details.
"""
# The above text is used by `setup.py`.


# Version
__version__ = '0.1.0'


# Expose core API at the top level
from .mesh import *
from .timegrid import *
from .state import *
from .optimal import *
from . import mesh, timegrid, state, optimal

__all__ = (
    *mesh.__all__,
    *timegrid.__all__,
    *state.__all__,
    *optimal.__all__,
)
