# CSV and legacy VTK artifacts of runs

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import csv
import logging

import numpy as np


# Export public API
__all__ = (
    'read_control_csv',
    'write_checks_csv',
    'write_control_csv',
    'write_flowrate_csv',
    'write_iterations_csv',
    'write_vtk',
)


logger = logging.getLogger(__name__)


# VTK cell type of the 6-node quadratic triangle
VTK_QUADRATIC_TRIANGLE = 22

# Local P2 node order -> VTK node order (vertices, then edges 01, 12, 20)
_VTK_ORDER = (0, 1, 2, 5, 3, 4)


def _number(x):
    # repr is the shortest string that reads back to the same float
    return repr(float(x))


def write_flowrate_csv(path, times, flowrates, blowup_time=None):
    """
    Writes `time,Q` rows; a blown-up run ends with the line
    `# blowup t=<t*>`.
    """
    with open(path, 'wt', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(('time', 'Q'))
        for t, q in zip(times, flowrates):
            writer.writerow((_number(t), _number(q)))
        if blowup_time is not None:
            file.write('# blowup t={}\n'.format(_number(blowup_time)))
    logger.info('Wrote %s', path)


def write_control_csv(path, grid, q):
    """Writes `time,q1,...,qL` at t_0..t_N (row 0 repeats q^1)."""
    values = q.sampled()
    with open(path, 'wt', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(['time'] + ['q{}'.format(i + 1)
                                    for i in range(q.n_segments)])
        for t, row in zip(grid.times, values):
            writer.writerow([_number(t)] + [_number(v) for v in row])
    logger.info('Wrote %s', path)


def read_control_csv(path, grid, n_segments):
    """
    Reads a control file in the format of `write_control_csv` and returns
    the (L, N) array of values on the control intervals.  Row 0 (time 0)
    is ignored.
    """
    expected = ['time'] + ['q{}'.format(i + 1) for i in range(n_segments)]
    rows = []
    with open(path, 'rt', newline='') as file:
        reader = csv.reader(file)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise ValueError('{}: Bad header: {!r} (expected {!r})'.format(
                path, header, ','.join(expected)))
        for row in reader:
            lineno = reader.line_num
            if not row or row[0].startswith('#'):
                continue
            if len(row) != len(expected):
                raise ValueError('{}: Line {}: expected {} fields, got {}'
                                 .format(path, lineno, len(expected),
                                         len(row)))
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise ValueError('{}: Line {}: bad number in {!r}'.format(
                    path, lineno, row)) from None
    rows = np.array(rows, dtype=float).reshape(-1, len(expected))
    if len(rows) != grid.N + 1:
        raise ValueError('{}: Expected {} rows (t_0..t_N), got {}'.format(
            path, grid.N + 1, len(rows)))
    if not np.allclose(rows[:, 0], grid.times, rtol=0.0,
                       atol=1e-9 * grid.T):
        raise ValueError('{}: Times do not match the grid {!r}'.format(
            path, grid))
    if not np.all(np.isfinite(rows)):
        raise ValueError('{}: Non-finite control values'.format(path))
    return rows[1:, 1:].T.copy()


def write_iterations_csv(path, log):
    with open(path, 'wt', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(log.records[0].fields if log.records else ())
        for record in log:
            writer.writerow(
                [str(v) if isinstance(v, int) else _number(v)
                 for v in record.as_tuple()])
    logger.info('Wrote %s', path)


def write_checks_csv(path, results):
    with open(path, 'wt', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(('name', 'value', 'threshold', 'passed', 'seconds'))
        for result in results:
            writer.writerow((result.name, _number(result.value),
                             _number(result.threshold),
                             int(result.passed), '{:.3f}'.format(
                                 result.seconds)))
    logger.info('Wrote %s', path)


def write_vtk(path, disc, u, p, time=None):
    """
    Writes a velocity/pressure pair as a legacy ASCII VTK unstructured
    grid of quadratic triangles.  The linear pressure is evaluated at the
    edge midpoints.
    """
    layout = disc.layout
    mesh = disc.mesh
    coords = layout.node_coords
    u1, u2 = layout.split(u)
    edges = mesh.edges()
    pressure = np.concatenate((p, 0.5 * (p[edges[:, 0]] + p[edges[:, 1]])))
    cells = layout.element_nodes[:, _VTK_ORDER]
    n_nodes = len(coords)
    n_cells = len(cells)
    with open(path, 'wt') as file:
        file.write('# vtk DataFile Version 3.0\n')
        file.write('dnflow state' + (
            ' t={}'.format(_number(time)) if time is not None else '') + '\n')
        file.write('ASCII\nDATASET UNSTRUCTURED_GRID\n')
        file.write('POINTS {} double\n'.format(n_nodes))
        for x, y in coords:
            file.write('{} {} 0.0\n'.format(_number(x), _number(y)))
        file.write('CELLS {} {}\n'.format(n_cells, 7 * n_cells))
        for cell in cells:
            file.write('6 ' + ' '.join(str(int(k)) for k in cell) + '\n')
        file.write('CELL_TYPES {}\n'.format(n_cells))
        file.write('{}\n'.format(VTK_QUADRATIC_TRIANGLE) * n_cells)
        file.write('POINT_DATA {}\n'.format(n_nodes))
        file.write('VECTORS velocity double\n')
        for a, b in zip(u1, u2):
            file.write('{} {} 0.0\n'.format(_number(a), _number(b)))
        file.write('SCALARS pressure double 1\nLOOKUP_TABLE default\n')
        for value in pressure:
            file.write(_number(value) + '\n')
    logger.debug('Wrote %s', path)
