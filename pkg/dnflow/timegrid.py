# Uniform time grids and piecewise-constant boundary controls

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import bisect

import numpy as np


# Export public API
__all__ = (
    'ControlVector',
    'TimeGrid',
    'inner',
    'norm',
)


class TimeGrid:
    """
    The grid t_n = n dt, n = 0..N, on [0, T].

    Step n (n >= 1) advances from t_{n-1} to t_n; its control interval
    is the left-open interval (t_{n-1}, t_n].
    """

    __slots__ = ('_T', '_N', '_times')

    def __init__(self, T=1.0, N=100):
        if not (np.isfinite(T) and T > 0):
            raise ValueError('Bad final time: {!r}'.format(T))
        if not (isinstance(N, (int, np.integer)) and N >= 1):
            raise ValueError('Bad number of time steps: {!r}'.format(N))
        self._T = float(T)
        self._N = int(N)
        self._times = self._T * np.arange(self._N + 1) / self._N
        self._times.setflags(write=False)

    def __repr__(self):
        return 'TimeGrid(T={!r}, N={!r})'.format(self._T, self._N)

    def __eq__(self, other):
        return (isinstance(other, TimeGrid) and self._T == other._T
                and self._N == other._N)

    def __hash__(self):
        return hash((self._T, self._N))

    @property
    def T(self):
        return self._T

    @property
    def N(self):
        return self._N

    @property
    def dt(self):
        return self._T / self._N

    @property
    def times(self):
        return self._times

    def step_of(self, t):
        """
        Returns the step n whose control interval (t_{n-1}, t_n]
        contains t.  Time 0 belongs to step 1 (right limit).
        """
        if not 0.0 <= t <= self._T:
            raise ValueError(
                'Bad time: {!r} outside [0, {}]'.format(t, self._T))
        # Tolerate round-off at the grid points
        slack = 1e-12 * self._T
        n = bisect.bisect_left(self._times, t - slack)
        return min(max(n, 1), self._N)

    def refined(self, factor=2):
        return TimeGrid(self._T, self._N * factor)


class ControlVector:
    """
    Time-dependent controls q_i, constant on each control interval.

    values: (L, N) array; column n - 1 holds q^n, the value on
        (t_{n-1}, t_n].
    lower, upper: Per-segment box bounds (may be infinite) with
        lower < upper.
    """

    __slots__ = ('_values', '_lower', '_upper')

    def __init__(self, values, lower=None, upper=None):
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise ValueError(
                'Bad control shape: {!r} (expected (L, N))'
                .format(values.shape))
        if not np.all(np.isfinite(values)):
            raise ValueError('Bad control values: non-finite entries')
        n_seg = values.shape[0]
        lower = (np.full(n_seg, -np.inf) if lower is None
                 else np.array(lower, dtype=float).reshape(n_seg))
        upper = (np.full(n_seg, np.inf) if upper is None
                 else np.array(upper, dtype=float).reshape(n_seg))
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValueError('Bad control bounds: NaN')
        if not np.all(lower < upper):
            raise ValueError(
                'Bad control bounds: lower {!r} </ upper {!r}'
                .format(lower.tolist(), upper.tolist()))
        self._values = values
        self._lower = lower
        self._upper = upper
        for array in (self._values, self._lower, self._upper):
            array.setflags(write=False)

    @classmethod
    def constant(cls, grid, levels, lower=None, upper=None):
        levels = np.asarray(levels, dtype=float).reshape(-1, 1)
        return cls(np.repeat(levels, grid.N, axis=1), lower, upper)

    @classmethod
    def from_function(cls, grid, function, n_segments, lower=None,
                      upper=None):
        """Samples function(t) -> (q_1, ..., q_L) at t_1..t_N."""
        values = np.array([function(t) for t in grid.times[1:]],
                          dtype=float)
        return cls(values.reshape(grid.N, n_segments).T, lower, upper)

    def __repr__(self):
        return 'ControlVector(L={}, N={})'.format(*self._values.shape)

    @property
    def values(self):
        return self._values

    @property
    def lower(self):
        return self._lower

    @property
    def upper(self):
        return self._upper

    @property
    def n_segments(self):
        return self._values.shape[0]

    @property
    def n_steps(self):
        return self._values.shape[1]

    def at_step(self, n):
        """Values (q_1^n, ..., q_L^n) for step n >= 1."""
        if not 1 <= n <= self.n_steps:
            raise IndexError(
                'Step out of bounds [1, {}]: {}'.format(self.n_steps, n))
        return self._values[:, n - 1]

    def with_values(self, values):
        return ControlVector(values, self._lower, self._upper)

    def is_feasible(self):
        return bool(np.all(self._values >= self._lower[:, None]) and
                    np.all(self._values <= self._upper[:, None]))

    def sampled(self):
        """
        Values at t_0..t_N as an (N + 1, L) array; t_0 takes the right
        limit q^1.
        """
        return np.vstack((self._values[:, :1].T, self._values.T))


def inner(a, b, dt):
    """L2(I) inner product of two (L, N) arrays of piecewise constants."""
    return dt * float(np.sum(np.asarray(a) * np.asarray(b)))


def norm(a, dt):
    return np.sqrt(inner(a, a, dt))
