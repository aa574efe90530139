"""Discrete weak gradient and weak divergence on a single polygonal cell.

Local degrees of freedom of a vector weak function on a cell with ``m`` edges
are ordered

    [u0_x (dim P_k), u0_y (dim P_k), edge 0: ub_x, ub_y, ..., edge m-1: ub_x, ub_y]

with ``k + 1`` Legendre coefficients per edge component.  The weak gradient
is a 2x2 tensor in P_r; because its defining relation decouples row by row
it is computed as one scalar weak gradient per velocity component.

All local matrices depend only on the cell shape and the orientation of its
edges, so :class:`LocalOperatorCache` reuses them across congruent cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .polybasis import (
    MonomialBasis,
    cell_basis,
    dim_p,
    grad_div_coupling,
    mass_matrix,
    polygon_quadrature,
    segment_rule,
)
from numpy.polynomial import legendre

__all__ = [
    "LocalDofLayout",
    "LocalOperators",
    "local_operators",
    "LocalOperatorCache",
    "weak_gradient_matrix",
    "weak_divergence_matrix",
    "default_grad_degree",
]


@dataclass(frozen=True)
class LocalDofLayout:
    k: int
    n_edges: int

    @property
    def n_poly(self):
        return dim_p(self.k)

    @property
    def n_interior(self):
        return 2 * self.n_poly

    @property
    def n_edge(self):
        return 2 * (self.k + 1)

    @property
    def size(self):
        return self.n_interior + self.n_edges * self.n_edge

    def interior(self, comp):
        """Slice of the interior DOFs of velocity component ``comp``."""
        return slice(comp * self.n_poly, (comp + 1) * self.n_poly)

    def edge(self, local_edge, comp):
        start = self.n_interior + local_edge * self.n_edge + comp * (self.k + 1)
        return slice(start, start + self.k + 1)

    def component(self, comp):
        """Indices of all DOFs (interior + edge) of one velocity component."""
        idx = list(range(*self.interior(comp).indices(self.size)))
        for e in range(self.n_edges):
            idx.extend(range(*self.edge(e, comp).indices(self.size)))
        return np.array(idx, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class LocalOperators:
    """Cell matrices for one (shape, k, r) combination.

    Attributes
    ----------
    grad : (4 * dim P_r, nloc) array
        Weak gradient coefficients, row blocks ordered (xx, xy, yx, yy):
        block (i, j) holds d_j of velocity component i.
    div : (dim P_{k-1}, nloc) array
        Weak divergence coefficients in P_{k-1}.
    div_rhs : (dim P_{k-1}, nloc) array
        ``mass_km1 @ div``; rows are (div_w v, w_l)_T.
    stiffness : (nloc, nloc) array
        (grad_w u, grad_w v)_T.
    mass_k, mass_r, mass_km1 : cell mass matrices.
    """

    layout: LocalDofLayout
    r: int
    basis_k: MonomialBasis
    basis_r: MonomialBasis
    basis_km1: MonomialBasis
    mass_k: np.ndarray
    mass_r: np.ndarray
    mass_km1: np.ndarray
    grad: np.ndarray
    div: np.ndarray
    div_rhs: np.ndarray
    stiffness: np.ndarray
    scalar_grad: np.ndarray
    quad_points: np.ndarray
    quad_weights: np.ndarray
    area: float

    @property
    def k(self):
        return self.layout.k

    def interior_mass(self):
        """blkdiag(M_k, M_k) embedded in the full local layout."""
        n = self.layout.size
        out = np.zeros((n, n))
        for c in range(2):
            s = self.layout.interior(c)
            out[s, s] = self.mass_k
        return out

    def local_matrix(self, kappa_inv):
        return self.stiffness + kappa_inv * self.interior_mass()


def default_grad_degree(k, convex=True):
    """Weak-gradient degree used in the experiments: k+1 on convex cells,
    k+3 on non-convex ones."""
    return k + 1 if convex else k + 3


def _cholesky_solve(M, rhs, what):
    try:
        factor = linalg.cho_factor(M, lower=True)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular {what} mass matrix") from exc
    return linalg.cho_solve(factor, rhs)


def local_operators(pts, signs, k, r, quad_degree=None):
    """Build :class:`LocalOperators` for a polygon.

    Parameters
    ----------
    pts : (m, 2) array
        CCW vertices.
    signs : sequence of +-1
        ``signs[i]`` is +1 when edge ``i`` (from vertex ``i`` to ``i+1``)
        runs along its global orientation.
    k : int
        Velocity degree, >= 1.
    r : int
        Weak gradient degree, >= k - 1.
    quad_degree : int, optional
        Cell quadrature exactness; default ``2 * max(r, k) + 2``.
    """
    if k < 1:
        raise ValueError(f"velocity degree k must be >= 1, got {k}")
    if r < k - 1:
        raise ValueError(f"weak gradient degree r={r} must be >= k-1={k - 1}")
    pts = np.asarray(pts, dtype=float)
    m = len(pts)
    layout = LocalDofLayout(k, m)
    qdeg = 2 * max(r, k) + 2 if quad_degree is None else int(quad_degree)
    quad = polygon_quadrature(pts, qdeg)

    bk = cell_basis(pts, k)
    br = MonomialBasis(r, bk.center, bk.scale)
    bkm1 = MonomialBasis(k - 1, bk.center, bk.scale)
    Mk = mass_matrix(quad, bk)
    Mr = mass_matrix(quad, br)
    Mkm1 = mass_matrix(quad, bkm1)
    nk, nr, nkm1, nb = bk.dim, br.dim, bkm1.dim, k + 1

    # scalar layout: [v0 (nk), edge 0 (nb), ..., edge m-1 (nb)]
    nscalar = nk + m * nb
    rx = np.zeros((nr, nscalar))
    ry = np.zeros((nr, nscalar))
    Cx, Cy = grad_div_coupling(quad, bk, br)
    rx[:, :nk] = -Cx.T
    ry[:, :nk] = -Cy.T

    div_rhs = np.zeros((nkm1, layout.size))
    Dx, Dy = grad_div_coupling(quad, bk, bkm1)
    div_rhs[:, layout.interior(0)] = -Dx.T
    div_rhs[:, layout.interior(1)] = -Dy.T

    for i in range(m):
        a, b = pts[i], pts[(i + 1) % m]
        t = b - a
        normal = np.array([t[1], -t[0]]) / np.hypot(*t)
        epts, w, s = segment_rule(a, b, k + r)
        tpar = 2.0 * s - 1.0 if signs[i] > 0 else 1.0 - 2.0 * s
        beta = legendre.legvander(tpar, k) * w[:, None]
        Er = beta.T @ br.eval(epts)  # (nb, nr)
        Ekm1 = beta.T @ bkm1.eval(epts)
        cols = slice(nk + i * nb, nk + (i + 1) * nb)
        rx[:, cols] = normal[0] * Er.T
        ry[:, cols] = normal[1] * Er.T
        div_rhs[:, layout.edge(i, 0)] = normal[0] * Ekm1.T
        div_rhs[:, layout.edge(i, 1)] = normal[1] * Ekm1.T

    factor = linalg.cho_factor(Mr, lower=True)
    sx = linalg.cho_solve(factor, rx)
    sy = linalg.cho_solve(factor, ry)
    scalar_grad = np.vstack([sx, sy])
    scalar_stiff = rx.T @ sx + ry.T @ sy
    scalar_stiff = 0.5 * (scalar_stiff + scalar_stiff.T)

    grad = np.zeros((4 * nr, layout.size))
    stiffness = np.zeros((layout.size, layout.size))
    for c in range(2):
        idx = layout.component(c)
        grad[(2 * c) * nr : (2 * c + 1) * nr, idx] = sx
        grad[(2 * c + 1) * nr : (2 * c + 2) * nr, idx] = sy
        stiffness[np.ix_(idx, idx)] = scalar_stiff

    div = _cholesky_solve(Mkm1, div_rhs, "P_{k-1}") if nkm1 else np.zeros((0, layout.size))

    return LocalOperators(
        layout=layout,
        r=r,
        basis_k=bk,
        basis_r=br,
        basis_km1=bkm1,
        mass_k=Mk,
        mass_r=Mr,
        mass_km1=Mkm1,
        grad=grad,
        div=div,
        div_rhs=div_rhs,
        stiffness=stiffness,
        scalar_grad=scalar_grad,
        quad_points=quad.points,
        quad_weights=quad.weights,
        area=float(quad.weights.sum()),
    )


class LocalOperatorCache:
    """Per-mesh store of local operators, shared among congruent cells.

    Cells are grouped by :meth:`PolygonalMesh.shape_groups`.  Operators are
    built on coordinates relative to the first vertex of the cell loop, so
    cached quadrature points and basis centres are relative too; use
    :meth:`quadrature` for absolute coordinates.  Polynomial coefficients
    are translation invariant and need no adjustment.
    """

    def __init__(self, mesh, k, r, quad_degree=None):
        self.mesh = mesh
        self.k = int(k)
        self.r = int(r)
        self.quad_degree = quad_degree
        self._ops = []
        self._cell_group = np.empty(mesh.n_cells, dtype=np.int64)
        self._groups = mesh.shape_groups()
        for g, cells in enumerate(self._groups):
            c = int(cells[0])
            pts = mesh.cell_points(c)
            self._ops.append(local_operators(pts - pts[0], _cell_signs(mesh, c), self.k, self.r, quad_degree))
            self._cell_group[cells] = g

    def __getitem__(self, cell_id):
        return self._ops[self._cell_group[cell_id]]

    def __len__(self):
        return self.mesh.n_cells

    @property
    def n_shapes(self):
        return len(self._ops)

    def origin(self, cell_id):
        return self.mesh.vertices[self.mesh.cells[cell_id][0]]

    def quadrature(self, cell_id):
        """(points, weights) of the cell rule in absolute coordinates."""
        ops = self[cell_id]
        return ops.quad_points + self.origin(cell_id), ops.quad_weights

    def groups(self):
        """List of (operators, cell ids) pairs."""
        return list(zip(self._ops, self._groups))


def _cell_signs(mesh, cell_id):
    return [mesh.edge_sign(cell_id, i) for i in range(len(mesh.cells[cell_id]))]


def weak_gradient_matrix(mesh, cell_id, k, r):
    """Weak gradient matrix of a mesh cell, shape (4 * dim P_r, nloc).

    Absolute coordinates are used, so the monomial basis is centred at the
    true cell centroid.
    """
    return local_operators(mesh.cell_points(cell_id), _cell_signs(mesh, cell_id), k, r).grad


def weak_divergence_matrix(mesh, cell_id, k):
    """Weak divergence matrix of a mesh cell into P_{k-1}, shape
    (dim P_{k-1}, nloc)."""
    return local_operators(mesh.cell_points(cell_id), _cell_signs(mesh, cell_id), k, max(k - 1, 0)).div
