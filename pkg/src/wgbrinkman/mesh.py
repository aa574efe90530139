"""Polygonal meshes of the unit square.

A mesh stores vertices, counter-clockwise cell loops and a table of unique
edges.  Each edge is oriented from its lower to its higher vertex index; the
two incident cells see it through their own outward normals.

Level ``l`` of every family is built on a ``2**(l-1) x 2**(l-1)`` grid of
squares, so level 1 is a single square and the mesh size halves per level.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PolygonalMesh",
    "MeshFamily",
    "build_uniform_triangle_mesh",
    "build_nonconvex_mesh",
    "build_mesh",
    "triangulate_polygon",
    "triangulate_cell",
    "outward_normal",
    "polygon_area",
    "reflex_vertices",
    "read_mesh",
    "write_mesh",
    "MeshError",
]


class MeshError(ValueError):
    """Raised for invalid or degenerate mesh input."""


class MeshFamily(str, enum.Enum):
    TRIANGLE = "triangle"
    CROSS_SPLIT = "cross_split"
    ZIGZAG = "zigzag"
    L_PAIR = "l_pair"


def polygon_area(pts):
    """Signed (shoelace) area of a closed polygon given as an (m, 2) array."""
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def reflex_vertices(pts, tol=1e-12):
    """Indices of vertices with interior angle > pi in a CCW polygon."""
    pts = np.asarray(pts, dtype=float)
    d_in = pts - np.roll(pts, 1, axis=0)
    d_out = np.roll(pts, -1, axis=0) - pts
    cross = d_in[:, 0] * d_out[:, 1] - d_in[:, 1] * d_out[:, 0]
    return np.flatnonzero(cross < -tol)


@dataclass(frozen=True, eq=False)
class PolygonalMesh:
    """Immutable 2D polygonal mesh.

    Parameters
    ----------
    vertices : (nv, 2) array
    cells : list of CCW vertex-index loops

    Attributes
    ----------
    edges : (ne, 2) int array, each row sorted ascending (global orientation)
    edge_cells : (ne, 2) int array, incident cells; -1 marks the boundary side
    boundary_edge : (ne,) bool array
    cell_edges : list of int arrays, edge ids in cell-loop order
        (edge ``i`` joins loop vertices ``i`` and ``i+1``)
    """

    vertices: np.ndarray
    cells: tuple
    edges: np.ndarray = field(init=False)
    edge_cells: np.ndarray = field(init=False)
    boundary_edge: np.ndarray = field(init=False)
    cell_edges: tuple = field(init=False)
    areas: np.ndarray = field(init=False)
    centroids: np.ndarray = field(init=False)
    diameters: np.ndarray = field(init=False)

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        cells = tuple(np.asarray(c, dtype=np.int64) for c in self.cells)
        if not cells:
            raise MeshError("mesh has no cells")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "cells", cells)

        edge_index = {}
        edges, edge_cells, cell_edges = [], [], []
        for ci, loop in enumerate(cells):
            if len(loop) < 3:
                raise MeshError(f"cell {ci} has fewer than 3 vertices")
            ids = np.empty(len(loop), dtype=np.int64)
            for i in range(len(loop)):
                a, b = int(loop[i]), int(loop[(i + 1) % len(loop)])
                key = (a, b) if a < b else (b, a)
                eid = edge_index.get(key)
                if eid is None:
                    eid = len(edges)
                    edge_index[key] = eid
                    edges.append(key)
                    edge_cells.append([ci, -1])
                else:
                    if edge_cells[eid][1] != -1:
                        raise MeshError(f"edge {key} shared by more than two cells")
                    edge_cells[eid][1] = ci
                ids[i] = eid
            cell_edges.append(ids)

        areas = np.empty(len(cells))
        cents = np.empty((len(cells), 2))
        diams = np.empty(len(cells))
        for ci, loop in enumerate(cells):
            p = verts[loop]
            a = polygon_area(p)
            if a <= 0.0:
                raise MeshError(f"cell {ci} is degenerate or not counter-clockwise (area {a:g})")
            x, y = p[:, 0], p[:, 1]
            xn, yn = np.roll(x, -1), np.roll(y, -1)
            w = x * yn - xn * y
            cents[ci] = [np.dot(x + xn, w), np.dot(y + yn, w)]
            cents[ci] /= 6.0 * a
            areas[ci] = a
            diff = p[:, None, :] - p[None, :, :]
            diams[ci] = np.sqrt((diff**2).sum(-1)).max()

        ec = np.array(edge_cells, dtype=np.int64)
        for name, val in [
            ("edges", np.array(edges, dtype=np.int64)),
            ("edge_cells", ec),
            ("boundary_edge", ec[:, 1] < 0),
            ("cell_edges", tuple(cell_edges)),
            ("areas", areas),
            ("centroids", cents),
            ("diameters", diams),
        ]:
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def h(self):
        """Mesh size, the largest cell diameter."""
        return float(self.diameters.max())

    def cell_points(self, cell_id):
        return self.vertices[self.cells[cell_id]]

    def edge_points(self, edge_id):
        return self.vertices[self.edges[edge_id]]

    def edge_length(self, edge_id):
        a, b = self.edge_points(edge_id)
        return float(np.hypot(*(b - a)))

    def shape_groups(self):
        """Group congruent cells (same shape up to translation, same edge
        orientations).  Returns a list of cell-id arrays."""
        groups = self.__dict__.get("_shape_groups")
        if groups is None:
            table = {}
            for c, loop in enumerate(self.cells):
                pts = self.vertices[loop]
                rel = (pts - pts[0]).ravel()
                signs = tuple(1 if loop[i] < loop[(i + 1) % len(loop)] else -1 for i in range(len(loop)))
                key = (tuple(np.round(rel * 2.0**40).astype(np.int64)), signs)
                table.setdefault(key, []).append(c)
            groups = [np.array(v, dtype=np.int64) for v in table.values()]
            object.__setattr__(self, "_shape_groups", groups)
        return groups

    def edge_sign(self, cell_id, local_edge):
        """+1 if the cell traverses the edge along its global orientation."""
        loop = self.cells[cell_id]
        return 1 if loop[local_edge] < loop[(local_edge + 1) % len(loop)] else -1


def outward_normal(mesh, cell_id, edge_id):
    """Outward unit normal of ``cell_id`` on ``edge_id``.

    The CCW tangent of the edge is rotated by -90 degrees.
    """
    local = np.flatnonzero(mesh.cell_edges[cell_id] == edge_id)
    if local.size == 0:
        raise MeshError(f"edge {edge_id} is not an edge of cell {cell_id}")
    loop = mesh.cells[cell_id]
    i = int(local[0])
    a = mesh.vertices[loop[i]]
    b = mesh.vertices[loop[(i + 1) % len(loop)]]
    t = b - a
    return np.array([t[1], -t[0]]) / np.hypot(*t)


# ---------------------------------------------------------------------------
# Triangulation


def _point_in_triangle(p, a, b, c, tol):
    d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
    d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
    return d1 >= -tol and d2 >= -tol and d3 >= -tol


def triangulate_polygon(pts):
    """Ear-clipping triangulation of a simple CCW polygon.

    Returns an (m-2, 3) array of indices into ``pts``.  Collinear vertices
    are clipped as zero-area ears only when nothing else is available, so
    every returned triangle has positive area for polygons without
    degenerate spikes.
    """
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    area = polygon_area(pts)
    if n < 3 or area <= 0.0:
        raise MeshError("cannot triangulate a degenerate or clockwise polygon")
    if n == 3:
        return np.array([[0, 1, 2]])
    scale = max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]))
    tol = 1e-12 * scale * scale

    idx = list(range(n))
    tris = []
    while len(idx) > 3:
        m = len(idx)
        clipped = False
        for j in range(m):
            i0, i1, i2 = idx[j - 1], idx[j], idx[(j + 1) % m]
            a, b, c = pts[i0], pts[i1], pts[i2]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= tol:
                continue
            if any(
                _point_in_triangle(pts[q], a, b, c, tol)
                for q in idx
                if q not in (i0, i1, i2) and not np.allclose(pts[q], b)
            ):
                continue
            tris.append((i0, i1, i2))
            del idx[j]
            clipped = True
            break
        if not clipped:
            # only collinear vertices remain convex; drop one
            for j in range(m):
                i0, i1, i2 = idx[j - 1], idx[j], idx[(j + 1) % m]
                a, b, c = pts[i0], pts[i1], pts[i2]
                cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                if abs(cross) <= tol:
                    del idx[j]
                    clipped = True
                    break
        if not clipped:
            raise MeshError("ear clipping failed; polygon is not simple")
    tris.append(tuple(idx))
    return np.array(tris, dtype=np.int64)


def triangulate_cell(mesh, cell_id):
    """Triangles (as (m, 3, 2) coordinate array) partitioning a cell."""
    pts = mesh.cell_points(cell_id)
    return pts[triangulate_polygon(pts)]


# ---------------------------------------------------------------------------
# Mesh families


def _grid(level):
    if int(level) != level or level < 1:
        raise MeshError(f"level must be a positive integer, got {level!r}")
    return 2 ** (int(level) - 1)


class _VertexPool:
    """Deduplicates vertices by rounded coordinates."""

    def __init__(self):
        self.index = {}
        self.coords = []

    def __call__(self, x, y):
        key = (round(x * 2**40), round(y * 2**40))
        i = self.index.get(key)
        if i is None:
            i = len(self.coords)
            self.index[key] = i
            self.coords.append((x, y))
        return i

    def array(self):
        return np.array(self.coords, dtype=float)


def build_uniform_triangle_mesh(level):
    """Unit square split into ``n x n`` squares, each cut by its
    bottom-left to top-right diagonal, with ``n = 2**(level-1)``."""
    n = _grid(level)
    xs = np.linspace(0.0, 1.0, n + 1)
    vid = lambda i, j: j * (n + 1) + i  # noqa: E731
    X, Y = np.meshgrid(xs, xs)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    cells = []
    for j in range(n):
        for i in range(n):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            cells.append([v00, v10, v11])
            cells.append([v00, v11, v01])
    return PolygonalMesh(verts, cells)


# Local cell templates on the reference square [0,1]^2, each CCW.
_CROSS_DELTA = 0.12
_ZIGZAG_DELTA = 0.1


def _cross_split_cells():
    d = _CROSS_DELTA
    c = (0.5, 0.5)
    mb, mr, mt, ml = (0.5, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 0.5)
    # each arm is kinked into the cell counter-clockwise of it (pinwheel)
    kb, kr, kt, kl = (0.5 + d, 0.25), (0.75, 0.5 + d), (0.5 - d, 0.75), (0.25, 0.5 - d)
    return [
        [(0.0, 0.0), mb, kb, c, kl, ml],
        [mb, (1.0, 0.0), mr, kr, c, kb],
        [mr, (1.0, 1.0), mt, kt, c, kr],
        [mt, (0.0, 1.0), ml, kl, c, kt],
    ]


def _zigzag_cells():
    d = _ZIGZAG_DELTA
    k1 = (1.0 / 3.0 + d, 1.0 / 3.0 - d)
    k2 = (2.0 / 3.0 - d, 2.0 / 3.0 + d)
    return [
        [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), k2, k1],
        [(0.0, 0.0), k1, k2, (1.0, 1.0), (0.0, 1.0)],
    ]


def _l_pair_cells(flip):
    lo, hi, mid = 0.25, 0.75, 0.5
    cells = [
        [(0.0, 0.0), (lo, 0.0), (lo, mid), (hi, mid), (hi, 1.0), (0.0, 1.0)],
        [(lo, 0.0), (1.0, 0.0), (1.0, 1.0), (hi, 1.0), (hi, mid), (lo, mid)],
    ]
    if flip:
        # mirror in y so that the cut endpoints on shared rows coincide
        cells = [[(x, 1.0 - y) for x, y in reversed(c)] for c in cells]
    return cells


def build_nonconvex_mesh(family, level):
    """Unit square mesh whose every cell is a simple non-convex polygon.

    Families
    --------
    CROSS_SPLIT : each square cut into four hexagons by a cross through its
        centre whose arms are kinked in a pinwheel pattern.
    ZIGZAG : each square cut into two pentagons by a two-kink zigzag along
        the diagonal.
    L_PAIR : each square cut into two L-shaped hexagons by a staircase;
        alternate rows are mirrored so cut endpoints match across rows.
    """
    try:
        family = MeshFamily(family.value if isinstance(family, MeshFamily) else str(family).lower())
    except ValueError:
        raise MeshError(
            f"unknown mesh family {family!r}; expected one of "
            f"{[f.value for f in MeshFamily if f is not MeshFamily.TRIANGLE]}"
        ) from None
    if family is MeshFamily.TRIANGLE:
        raise MeshError("TRIANGLE is a convex family; use build_uniform_triangle_mesh")
    n = _grid(level)
    hs = 1.0 / n
    pool = _VertexPool()
    cells = []
    for j in range(n):
        if family is MeshFamily.CROSS_SPLIT:
            template = _cross_split_cells()
        elif family is MeshFamily.ZIGZAG:
            template = _zigzag_cells()
        else:
            template = _l_pair_cells(flip=j % 2 == 1)
        for i in range(n):
            for loop in template:
                cells.append([pool((i + x) * hs, (j + y) * hs) for x, y in loop])
    return PolygonalMesh(pool.array(), cells)


def build_mesh(family, level):
    """Dispatch on family name, including the triangular family."""
    name = family.value if isinstance(family, MeshFamily) else str(family).lower()
    if name == MeshFamily.TRIANGLE.value:
        return build_uniform_triangle_mesh(level)
    return build_nonconvex_mesh(name, level)


# ---------------------------------------------------------------------------
# Plain-text I/O


def write_mesh(mesh, fh):
    """Write ``NV NC``, then ``x y`` per vertex, then ``m i1 .. im`` per cell."""
    fh.write(f"{mesh.n_vertices} {mesh.n_cells}\n")
    for x, y in mesh.vertices:
        fh.write(f"{float(x)!r} {float(y)!r}\n")
    for loop in mesh.cells:
        fh.write(" ".join([str(len(loop))] + [str(int(v)) for v in loop]) + "\n")


def read_mesh(fh):
    """Inverse of :func:`write_mesh`."""
    tokens = fh.read().split()
    try:
        nv, nc = int(tokens[0]), int(tokens[1])
        pos = 2
        verts = np.array(tokens[pos : pos + 2 * nv], dtype=float).reshape(nv, 2)
        pos += 2 * nv
        cells = []
        for _ in range(nc):
            m = int(tokens[pos])
            cells.append([int(t) for t in tokens[pos + 1 : pos + 1 + m]])
            pos += 1 + m
    except (IndexError, ValueError) as exc:
        raise MeshError(f"malformed mesh file: {exc}") from exc
    return PolygonalMesh(verts, cells)
