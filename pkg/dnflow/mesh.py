# Channel geometry, tagged triangle meshes, and the plain-text mesh format

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import logging

import numpy as np


# Export public API
__all__ = (
    'DIRICHLET',
    'ChannelGeometry',
    'Mesh',
    'MeshError',
    'generate_channel_mesh',
    'read_mesh',
    'write_mesh',
)


logger = logging.getLogger(__name__)


# Tag of the no-slip wall.  Open segments are numbered from 1.
DIRICHLET = 0


class MeshError(Exception):

    def __init__(self, message, line=None):
        if line is not None:
            message = 'Line {}: {}'.format(line, message)
        super().__init__(message)
        self.line = line


class ChannelGeometry:
    """
    Symmetric channel {0 <= x1 <= L, |x2| <= phi(x1)} whose half-width
    phi is the cubic with phi(0) = r, phi(L) = R, and vanishing slope at
    both ends.
    """

    __slots__ = ('_r', '_R', '_L')

    # Sample count for the positivity check
    _n_check = 2001

    def __init__(self, r=1.0, R=2.0, L=2.0):
        for name, value in (('r', r), ('R', R), ('L', L)):
            if not (np.isfinite(value) and value > 0):
                raise ValueError(
                    'Bad channel parameter: {} = {!r}'.format(name, value))
        self._r = float(r)
        self._R = float(R)
        self._L = float(L)
        s = np.linspace(0.0, self._L, self._n_check)
        lowest = self.phi(s).min()
        if not lowest > 0:
            raise ValueError(
                'Bad channel geometry: half-width reaches {!r} on [0, {}]'
                .format(lowest, self._L))

    def __repr__(self):
        return 'ChannelGeometry(r={!r}, R={!r}, L={!r})'.format(
            self._r, self._R, self._L)

    @property
    def r(self):
        return self._r

    @property
    def R(self):
        return self._R

    @property
    def L(self):
        return self._L

    def is_straight(self):
        return self._r == self._R

    def phi(self, s):
        r, R, L = self._r, self._R, self._L
        s = np.asarray(s, dtype=float)
        return (2.0 * (r - R) / L**3 * s**3
                + 3.0 * (R - r) / L**2 * s**2 + r)

    def dphi(self, s):
        r, R, L = self._r, self._R, self._L
        s = np.asarray(s, dtype=float)
        return (6.0 * (r - R) / L**3 * s**2
                + 6.0 * (R - r) / L**2 * s)

    def area(self):
        """Exact area, the integral of 2 phi over [0, L]."""
        return 2.0 * (self._r * self._L + (self._R - self._r) * self._L / 2)


class Mesh:
    """
    Triangle mesh with tagged boundary edges.

    vertices: (nv, 2) float array.
    triangles: (nt, 3) int array of counterclockwise vertex triples.
    boundary_edges: (ne, 2) int array of vertex pairs.
    edge_tags: (ne,) int array; 0 is the wall, 1..n_segments are the
        open segments.
    n_segments: Number of open segments.  Inferred from the tags when
        omitted.

    Meshes are immutable: the arrays are made read-only on construction.
    """

    __slots__ = ('_vertices', '_triangles', '_bedges', '_tags', '_nseg',
                 '_edges', '_tri_edges')

    def __init__(self, vertices, triangles, boundary_edges, edge_tags,
                 n_segments=None, validate=True):
        self._vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        self._triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        self._bedges = np.array(
            boundary_edges, dtype=np.int64).reshape(-1, 2)
        self._tags = np.array(edge_tags, dtype=np.int64).reshape(-1)
        if n_segments is None:
            n_segments = int(self._tags.max()) if len(self._tags) else 0
        self._nseg = int(n_segments)
        for array in (self._vertices, self._triangles, self._bedges,
                      self._tags):
            array.setflags(write=False)
        self._edges = None
        self._tri_edges = None
        if validate:
            self._validate()

    def __repr__(self):
        return 'Mesh(nv={}, nt={}, ne={}, n_segments={})'.format(
            self.n_vertices, self.n_triangles, len(self._bedges),
            self._nseg)

    @property
    def vertices(self):
        return self._vertices

    @property
    def triangles(self):
        return self._triangles

    @property
    def boundary_edges(self):
        return self._bedges

    @property
    def edge_tags(self):
        return self._tags

    @property
    def n_segments(self):
        return self._nseg

    @property
    def n_vertices(self):
        return len(self._vertices)

    @property
    def n_triangles(self):
        return len(self._triangles)

    def signed_areas(self):
        p = self._vertices[self._triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def area(self):
        return float(self.signed_areas().sum())

    def _build_edges(self):
        local = self._triangles[:, [[1, 2], [2, 0], [0, 1]]].reshape(-1, 2)
        local = np.sort(local, axis=1)
        edges, inverse = np.unique(local, axis=0, return_inverse=True)
        self._edges = edges
        self._tri_edges = inverse.reshape(-1, 3)
        self._edges.setflags(write=False)
        self._tri_edges.setflags(write=False)

    def edges(self):
        """Unique edges as sorted vertex pairs, in lexicographic order."""
        if self._edges is None:
            self._build_edges()
        return self._edges

    def triangle_edges(self):
        """
        (nt, 3) indices into `edges()`; local edge k is the edge opposite
        local vertex k.
        """
        if self._tri_edges is None:
            self._build_edges()
        return self._tri_edges

    def edge_index(self, pairs):
        """Returns the `edges()` indices of the given vertex pairs."""
        edges = self.edges()
        nv = self.n_vertices
        keys = edges[:, 0] * nv + edges[:, 1]
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
                        axis=1)
        wanted = pairs[:, 0] * nv + pairs[:, 1]
        idx = np.searchsorted(keys, wanted)
        idx = np.minimum(idx, len(keys) - 1)
        if not np.array_equal(keys[idx], wanted):
            raise MeshError('Vertex pairs are not edges of the mesh')
        return idx

    def edge_owner(self):
        """Index of the (unique) triangle containing each boundary edge."""
        tri_edges = self.triangle_edges()
        where = np.empty(len(self.edges()), dtype=np.int64)
        where[tri_edges.ravel()] = np.repeat(
            np.arange(self.n_triangles), 3)
        return where[self.edge_index(self._bedges)]

    def edge_normals(self):
        """Outward unit normals and lengths of the boundary edges."""
        p = self._vertices
        a = p[self._bedges[:, 0]]
        b = p[self._bedges[:, 1]]
        d = b - a
        length = np.hypot(d[:, 0], d[:, 1])
        normal = np.stack((d[:, 1], -d[:, 0]), axis=1) / length[:, None]
        # Orient away from the opposite vertex of the owning triangle
        tris = self._triangles[self.edge_owner()]
        centroid = p[tris].mean(axis=1)
        flip = np.einsum('ij,ij->i', normal, centroid - a) > 0
        normal[flip] *= -1.0
        return normal, length

    def segment_length(self, tag):
        _, length = self.edge_normals()
        return float(length[self._tags == tag].sum())

    def reflected(self):
        """Mirror image x2 -> -x2 (orientation restored)."""
        vertices = self._vertices * np.array([1.0, -1.0])
        return Mesh(vertices, self._triangles[:, [0, 2, 1]], self._bedges,
                    self._tags, self._nseg)

    def _validate(self):
        nv = self.n_vertices
        if self._triangles.size and (self._triangles.min() < 0 or
                                     self._triangles.max() >= nv):
            raise MeshError('Triangle vertex index out of range')
        if self._bedges.size and (self._bedges.min() < 0 or
                                  self._bedges.max() >= nv):
            raise MeshError('Boundary edge vertex index out of range')
        if len(self._tags) != len(self._bedges):
            raise MeshError('Expected one tag per boundary edge')
        if self._tags.size and (self._tags.min() < 0 or
                                self._tags.max() > self._nseg):
            raise MeshError(
                'Edge tags must lie in [0, {}]'.format(self._nseg))
        areas = self.signed_areas()
        if np.any(areas <= 0):
            raise MeshError(
                'Triangle {} is not counterclockwise'
                .format(int(np.argmax(areas <= 0))))
        # The boundary is made of the edges belonging to one triangle
        local = np.sort(self._triangles[:, [[1, 2], [2, 0], [0, 1]]]
                        .reshape(-1, 2), axis=1)
        _, counts = np.unique(local, axis=0, return_counts=True)
        edges = self.edges()
        boundary = edges[counts == 1]
        given = np.unique(np.sort(self._bedges, axis=1), axis=0)
        if len(given) != len(self._bedges):
            raise MeshError('Duplicate boundary edges')
        if not np.array_equal(boundary, given):
            raise MeshError(
                'Boundary edges do not match the triangulation boundary')
        # Open segments are vertical lines x1 = const
        extent = max(np.abs(self._vertices).max(), 1.0)
        for tag in range(1, self._nseg + 1):
            pts = self._vertices[self._bedges[self._tags == tag].ravel()]
            if len(pts) == 0:
                raise MeshError('Open segment {} has no edges'.format(tag))
            if np.ptp(pts[:, 0]) > 1e-12 * extent:
                raise MeshError(
                    'Bad open segment: {!r} (not a vertical line)'
                    .format(tag))


def generate_channel_mesh(geom, nx, ny):
    """
    Returns a structured mesh of the channel.

    The reference rectangle [0, L] x [-1, 1] is split into nx by ny
    cells; the vertex (x1, s) is mapped to (x1, s phi(x1)) and each cell
    is cut into two triangles.  The diagonals of the lower half mirror
    those of the upper half, so the mesh is symmetric about x2 = 0.
    The left end is tagged 1, the right end 2, the walls 0.
    """
    if not (isinstance(nx, (int, np.integer)) and nx >= 1):
        raise ValueError('Bad number of cells along x1: {!r}'.format(nx))
    if not (isinstance(ny, (int, np.integer)) and ny >= 2 and ny % 2 == 0):
        raise ValueError(
            'Bad number of cells along x2 (must be even): {!r}'.format(ny))
    i, j = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    i = i.ravel()
    j = j.ravel()
    x1 = geom.L * i / nx
    # Integer numerator keeps the mirrored coordinates exact negatives
    s = (2 * j - ny) / ny
    vertices = np.stack((x1, s * geom.phi(x1)), axis=1)

    def vid(ii, jj):
        return jj * (nx + 1) + ii

    triangles = []
    for jj in range(ny):
        for ii in range(nx):
            v00 = vid(ii, jj)
            v10 = vid(ii + 1, jj)
            v01 = vid(ii, jj + 1)
            v11 = vid(ii + 1, jj + 1)
            if 2 * jj >= ny:
                triangles.append((v00, v10, v11))
                triangles.append((v00, v11, v01))
            else:
                triangles.append((v00, v10, v01))
                triangles.append((v10, v11, v01))

    # Boundary edges in counterclockwise traversal
    edges = []
    tags = []
    for ii in range(nx):
        edges.append((vid(ii, 0), vid(ii + 1, 0)))
        tags.append(DIRICHLET)
    for jj in range(ny):
        edges.append((vid(nx, jj), vid(nx, jj + 1)))
        tags.append(2)
    for ii in range(nx, 0, -1):
        edges.append((vid(ii, ny), vid(ii - 1, ny)))
        tags.append(DIRICHLET)
    for jj in range(ny, 0, -1):
        edges.append((vid(0, jj), vid(0, jj - 1)))
        tags.append(1)

    mesh = Mesh(vertices, triangles, edges, tags, n_segments=2)
    logger.debug('Generated %r for %r', mesh, geom)
    return mesh


# Mesh file format:
#
#     nv nt ne [nseg]
#     x y                 (nv lines)
#     i j k               (nt lines, 0-based, counterclockwise)
#     i j tag             (ne lines)


def write_mesh(mesh, path):
    """Writes the mesh with shortest round-trip float formatting."""
    with open(path, 'w') as file:
        file.write('{} {} {} {}\n'.format(
            mesh.n_vertices, mesh.n_triangles, len(mesh.boundary_edges),
            mesh.n_segments))
        for x, y in mesh.vertices:
            file.write('{!r} {!r}\n'.format(float(x), float(y)))
        for a, b, c in mesh.triangles:
            file.write('{} {} {}\n'.format(a, b, c))
        for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags):
            file.write('{} {} {}\n'.format(a, b, tag))


def _fields(line, lineno, count, kind):
    fields = line.split()
    if len(fields) != count:
        raise MeshError(
            'Expected {} fields, found {}'.format(count, len(fields)),
            lineno)
    try:
        return [kind(f) for f in fields]
    except ValueError:
        raise MeshError('Malformed number in {!r}'.format(line.strip()),
                        lineno) from None


def read_mesh(path):
    """Reads a mesh file, validating counts, indices and tags."""
    with open(path) as file:
        lines = file.read().splitlines()
    if not lines:
        raise MeshError('Empty mesh file', 1)
    header = lines[0].split()
    if len(header) not in (3, 4):
        raise MeshError('Header must be "nv nt ne [nseg]"', 1)
    try:
        counts = [int(h) for h in header]
    except ValueError:
        raise MeshError('Malformed header {!r}'.format(lines[0]), 1) \
            from None
    nv, nt, ne = counts[:3]
    nseg = counts[3] if len(counts) == 4 else 2
    if min(counts) < 0:
        raise MeshError('Negative count in header', 1)
    if len(lines) - 1 < nv + nt + ne:
        raise MeshError(
            'Expected {} data lines, found {}'.format(
                nv + nt + ne, len(lines) - 1),
            len(lines))
    lineno = 1
    vertices = []
    for _ in range(nv):
        lineno += 1
        vertices.append(_fields(lines[lineno - 1], lineno, 2, float))
    triangles = []
    for _ in range(nt):
        lineno += 1
        tri = _fields(lines[lineno - 1], lineno, 3, int)
        if min(tri) < 0 or max(tri) >= nv:
            raise MeshError(
                'Triangle index out of range [0, {})'.format(nv), lineno)
        triangles.append(tri)
    edges = []
    tags = []
    for _ in range(ne):
        lineno += 1
        a, b, tag = _fields(lines[lineno - 1], lineno, 3, int)
        if min(a, b) < 0 or max(a, b) >= nv:
            raise MeshError(
                'Edge index out of range [0, {})'.format(nv), lineno)
        if not 0 <= tag <= nseg:
            raise MeshError(
                'Unknown edge tag {} (declared tags 0..{})'
                .format(tag, nseg), lineno)
        edges.append((a, b))
        tags.append(tag)
    extra = [l for l in lines[lineno:] if l.strip()]
    if extra:
        raise MeshError('Unexpected trailing data', lineno + 1)
    return Mesh(vertices, triangles, edges, tags, n_segments=nseg)
