# Space-time target velocities u_d and the built-in target catalog

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import re

import numpy as np

from . import assembly
from . import femspace
from .state import make_w_field


# Export public API
__all__ = (
    'AnalyticTarget',
    'PoiseuilleFlow',
    'TrajectoryTarget',
    'make_target',
    'parse_target',
    'poiseuille',
    'poiseuille_flow',
    'scaled_w',
    'sine_w',
    'target_flowrates',
    'zero',
    'zeta',
    'zeta_w',
)


class AnalyticTarget:
    """
    A target given by a function field(t, x1, x2) -> (v1, v2) that
    accepts arrays of points.
    """

    __slots__ = ('_field', '_name', '_points')

    def __init__(self, field, name='field'):
        self._field = field
        self._name = name
        self._points = {}

    def __repr__(self):
        return 'AnalyticTarget({!r})'.format(self._name)

    @property
    def name(self):
        return self._name

    def __call__(self, t, x1, x2):
        return self._field(t, x1, x2)

    def sample(self, n, t, layout):
        """Values at the tracking quadrature points, (nt, nq, 2)."""
        key = id(layout)
        if key not in self._points:
            self._points[key] = layout.geometry.points(
                assembly.tracking_rule())
        x = self._points[key]
        v1, v2 = self._field(t, x[..., 0], x[..., 1])
        values = np.stack((np.broadcast_to(v1, x.shape[:2]),
                           np.broadcast_to(v2, x.shape[:2])), axis=-1)
        if not np.all(np.isfinite(values)):
            raise ValueError(
                'Bad target: non-finite value at t = {!r}'.format(t))
        return values

    def velocity(self, t, layout):
        """Nodal interpolant at time t."""
        return femspace.interpolate(
            lambda x1, x2: self._field(t, x1, x2), layout)


class TrajectoryTarget:
    """A discrete trajectory used as target, exact at every step."""

    __slots__ = ('_traj',)

    def __init__(self, traj):
        self._traj = traj

    def __repr__(self):
        return 'TrajectoryTarget({!r})'.format(self._traj)

    @property
    def name(self):
        return 'trajectory'

    def sample(self, n, t, layout):
        return layout.at_points(self._traj.u[n], assembly.tracking_rule())

    def velocity(self, t, layout):
        return np.array(self._traj.u[self._traj.grid.step_of(t)
                                     if t > 0 else 0])


def zeta(t):
    """
    Amplitude that steepens toward the singularity at 0.9; it is frozen
    at its value for t = 0.82 from there on.
    """
    s = np.minimum(t, 0.82)
    return 5.0 * (1.0 / (0.9 - s) - 1.0 / 0.9) + 15.0 * s


def zero(geom=None):
    return AnalyticTarget(lambda t, x1, x2: (0.0, 0.0), 'zero')


def scaled_w(geom, c):
    w = make_w_field(geom)

    def field(t, x1, x2):
        v1, v2 = w(x1, x2)
        return c * v1, c * v2
    return AnalyticTarget(field, 'scaled_w({!r})'.format(c))


def sine_w(geom, a):
    w = make_w_field(geom)

    def field(t, x1, x2):
        amp = a * np.sin(2.0 * np.pi * t)
        v1, v2 = w(x1, x2)
        return amp * v1, amp * v2
    return AnalyticTarget(field, 'sine_w({!r})'.format(a))


def zeta_w(geom):
    w = make_w_field(geom)

    def field(t, x1, x2):
        amp = zeta(t)
        v1, v2 = w(x1, x2)
        return amp * v1, amp * v2
    return AnalyticTarget(field, 'zeta_w')


class PoiseuilleFlow:
    """
    Steady flow in the straight channel |x2| <= r, 0 <= x1 <= L driven by
    the pressure drop dq = q_1 - q_2 between the open ends:
    u = (dq / (2 L) (r^2 - x2^2), 0), p = q_1 - dq x1 / L.
    """

    __slots__ = ('r', 'L', 'q1', 'q2')

    def __init__(self, r, L, q1, q2=0.0):
        self.r = r
        self.L = L
        self.q1 = q1
        self.q2 = q2

    @property
    def pressure_drop(self):
        return self.q1 - self.q2

    @property
    def flowrate(self):
        return 2.0 * self.pressure_drop * self.r**3 / (3.0 * self.L)

    def velocity(self, x1, x2):
        x2 = np.asarray(x2, dtype=float)
        u1 = self.pressure_drop / (2.0 * self.L) * (self.r**2 - x2**2)
        return u1, np.zeros_like(u1)

    def pressure(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        return self.q1 - self.pressure_drop * x1 / self.L + 0.0 * x2


def poiseuille_flow(geom, dq, q2=0.0):
    if not geom.is_straight():
        raise ValueError(
            'Bad geometry for Poiseuille flow: r = {} != R = {}'.format(
                geom.r, geom.R))
    return PoiseuilleFlow(geom.r, geom.L, q2 + dq, q2)


def poiseuille(geom, dq):
    flow = poiseuille_flow(geom, dq)
    return AnalyticTarget(lambda t, x1, x2: flow.velocity(x1, x2),
                          'poiseuille({!r})'.format(dq))


# Catalog entries: name -> (constructor, number of arguments)
_CATALOG = {
    'zero': (zero, 0),
    'scaled_w': (scaled_w, 1),
    'sine_w': (sine_w, 1),
    'zeta_w': (zeta_w, 0),
    'poiseuille': (poiseuille, 1),
}

_spec_pattern = re.compile(r'^\s*(\w+)\s*(?:\(\s*([^()]*?)\s*\))?\s*$')


def parse_target(text):
    """
    Parses a catalog entry such as 'scaled_w(10)', 'zeta_w', or
    'poiseuille(3)' into (name, args).
    """
    match = _spec_pattern.match(text) if isinstance(text, str) else None
    if match is None or match.group(1) not in _CATALOG:
        raise ValueError('Bad target: {!r} (expected one of {})'.format(
            text, ', '.join(sorted(_CATALOG))))
    name, arg_text = match.groups()
    args = ()
    if arg_text:
        try:
            args = tuple(float(a) for a in arg_text.split(','))
        except ValueError:
            raise ValueError('Bad target arguments: {!r}'.format(
                text)) from None
    if len(args) != _CATALOG[name][1] or not np.all(np.isfinite(args)):
        raise ValueError('Bad target arguments: {!r}'.format(text))
    return name, args


def make_target(text, geom):
    name, args = parse_target(text)
    return _CATALOG[name][0](geom, *args)


def target_flowrates(target, grid, disc):
    """Q(u_d(t_n)) for n = 0..N, using the discrete flowrate functional."""
    b = disc.loads[0]
    return np.array([-(b @ target.velocity(t, disc.layout))
                     for t in grid.times])
