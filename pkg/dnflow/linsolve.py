# Sparse direct solves of the saddle-point systems

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import logging

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as splinalg


# Export public API
__all__ = (
    'FactorizedSystem',
    'SingularSystemError',
    'factorize',
    'solve',
    'solve_transposed',
)


logger = logging.getLogger(__name__)


# Acceptance bound on the scaled residual of a solve
RESIDUAL_TOL = 1e-10

# Pivots below this fraction of the largest pivot count as zero
PIVOT_TOL = 1e-13


class SingularSystemError(Exception):

    def __init__(self, message, dof=None):
        super().__init__(message)
        self.dof = dof


def _norm_inf(matrix):
    return float(abs(matrix).sum(axis=1).max()) if matrix.nnz else 0.0


class FactorizedSystem:
    """
    LU factorization of a square sparse matrix, reusable for many right
    hand sides and for transposed solves.  Immutable once built.
    """

    __slots__ = ('_matrix', '_lu', '_norm')

    def __init__(self, matrix):
        matrix = sparse.csc_matrix(matrix)
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(
                'Bad matrix shape (not square): {!r}'.format(matrix.shape))
        try:
            lu = splinalg.splu(matrix)
        except RuntimeError as error:
            raise SingularSystemError(
                'Factorization failed: {}'.format(error)) from None
        pivots = np.abs(lu.U.diagonal())
        biggest = pivots.max() if len(pivots) else 0.0
        small = np.flatnonzero(pivots <= PIVOT_TOL * biggest)
        if len(small) or not np.isfinite(biggest):
            dof = int(lu.perm_c[small[0]]) if len(small) else None
            raise SingularSystemError(
                'Numerically singular matrix: zero pivot at dof {}'
                .format(dof), dof)
        self._matrix = matrix
        self._lu = lu
        self._norm = max(_norm_inf(matrix), _norm_inf(matrix.T))

    @property
    def shape(self):
        return self._matrix.shape

    @property
    def matrix(self):
        return self._matrix

    def _solve(self, rhs, trans):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.shape[0],):
            raise ValueError(
                'Bad right hand side length: {} (expected {})'
                .format(rhs.shape, self.shape[0]))
        if not np.all(np.isfinite(rhs)):
            raise ValueError('Bad right hand side: non-finite entries')
        matrix = self._matrix.T if trans == 'T' else self._matrix
        x = self._lu.solve(rhs, trans=trans)
        residual = self._residual(matrix, x, rhs)
        if residual > RESIDUAL_TOL:
            # One step of iterative refinement
            x = x + self._lu.solve(rhs - matrix @ x, trans=trans)
            residual = self._residual(matrix, x, rhs)
            logger.debug('Refined solve, scaled residual %.3e', residual)
        if not residual <= RESIDUAL_TOL:
            raise SingularSystemError(
                'Solve residual {:.3e} exceeds {:.0e}'.format(
                    residual, RESIDUAL_TOL))
        return x

    def _residual(self, matrix, x, rhs):
        scale = (self._norm * np.abs(x).max(initial=0.0)
                 + np.abs(rhs).max(initial=0.0))
        if scale == 0.0:
            return 0.0
        return float(np.abs(matrix @ x - rhs).max() / scale)

    def solve(self, rhs):
        return self._solve(rhs, 'N')

    def solve_transposed(self, rhs):
        return self._solve(rhs, 'T')


def factorize(matrix):
    return FactorizedSystem(matrix)


def solve(factorized, rhs):
    return factorized.solve(rhs)


def solve_transposed(factorized, rhs):
    return factorized.solve_transposed(rhs)
