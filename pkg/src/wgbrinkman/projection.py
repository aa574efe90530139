"""L2 projections of exact fields onto cell and edge polynomial spaces.

Field callables take coordinate arrays ``(x, y)`` and return an array of
shape ``(npts,)`` for scalars or ``(ncomp, npts)`` (any leading shape) for
vector and tensor fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre
from scipy import linalg

from .polybasis import cell_basis, mass_matrix, polygon_quadrature

__all__ = [
    "ProjectedField",
    "evaluate_field",
    "project_cell",
    "project_edge",
    "project_cells",
    "project_edges",
    "project_velocity",
]


def evaluate_field(f, pts):
    """Evaluate ``f`` at ``pts`` ((n, 2) array); returns (..., n)."""
    pts = np.asarray(pts, dtype=float)
    val = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
    if val.ndim == 0:
        val = np.full(len(pts), float(val))
    elif val.shape[-1] != len(pts):
        val = np.broadcast_to(val[..., None], val.shape + (len(pts),))
    return val


@dataclass
class ProjectedField:
    """Coefficients of a (vector) weak function.

    cell : (n_cells, ncomp, dim P_degree) array
    edge : (n_edges, ncomp, k + 1) array or None
        One record per global edge, Legendre coefficients along the edge's
        global orientation.
    """

    cell: np.ndarray
    edge: np.ndarray | None
    degree: int

    @property
    def ncomp(self):
        return self.cell.shape[1]


def project_cell(f, mesh, cell_id, degree, quad_degree=None):
    """Coefficients of the L2 projection of ``f`` onto P_degree(cell).

    Returns shape (dim,) for a scalar field, (..., dim) otherwise.
    """
    pts = mesh.cell_points(cell_id)
    quad = polygon_quadrature(pts, 2 * degree + 2 if quad_degree is None else quad_degree)
    basis = cell_basis(pts, degree)
    M = mass_matrix(quad, basis, label=f"cell {cell_id}")
    B = basis.eval(quad.points)
    vals = evaluate_field(f, quad.points)
    rhs = (vals * quad.weights) @ B
    return linalg.solve(M, rhs.reshape(-1, basis.dim).T, assume_a="pos").T.reshape(rhs.shape)


def project_edge(f, mesh, edge_id, k, n_points=None):
    """Legendre coefficients of the L2 projection of ``f`` onto P_k(edge).

    The edge mass matrix is diagonal, so each coefficient is an independent
    quotient.
    """
    a, b = mesh.edge_points(edge_id)
    return _edge_projection(f, a[None], b[None], k, n_points)[..., 0, :]


def _edge_projection(f, A, B, k, n_points=None):
    n = n_points if n_points is not None else k + 3
    x, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (x + 1.0)
    P = legendre.legvander(x, k)  # (nq, k+1)
    pts = A[:, None, :] + s[None, :, None] * (B - A)[:, None, :]  # (ne, nq, 2)
    vals = evaluate_field(f, pts.reshape(-1, 2))
    vals = vals.reshape(vals.shape[:-1] + (len(A), n))
    # c_j = (2j+1)/2 * integral over [-1,1] of f P_j
    coef = 0.5 * (2 * np.arange(k + 1) + 1)
    return (vals * w) @ P * coef


def project_edges(f, mesh, k, n_points=None):
    """Edge projections of ``f`` for every mesh edge; shape (ne, ..., k+1)."""
    E = mesh.vertices[mesh.edges]
    out = _edge_projection(f, E[:, 0], E[:, 1], k, n_points)
    return np.moveaxis(out, -2, 0)


def project_cells(f, mesh, degree, quad_degree=None):
    """Cell projections of ``f`` on every cell; shape (nc, ..., dim).

    Congruent cells share their quadrature and mass matrix, and ``f`` is
    evaluated once per group of congruent cells.
    """
    qdeg = 2 * degree + 2 if quad_degree is None else quad_degree
    out = None
    for cells in mesh.shape_groups():
        pts0 = mesh.cell_points(cells[0])
        origin0 = pts0[0]
        rel = pts0 - origin0
        quad = polygon_quadrature(rel, qdeg)
        basis = cell_basis(rel, degree)
        M = mass_matrix(quad, basis)
        Bw = basis.eval(quad.points) * quad.weights[:, None]
        origins = mesh.vertices[[mesh.cells[c][0] for c in cells]]
        allpts = (origins[:, None, :] + quad.points[None]).reshape(-1, 2)
        vals = evaluate_field(f, allpts)
        vals = vals.reshape(vals.shape[:-1] + (len(cells), len(quad.weights)))
        rhs = vals @ Bw  # (..., ncells, dim)
        lead = rhs.shape[:-2]
        flat = np.moveaxis(rhs, -2, 0).reshape(len(cells), -1, basis.dim)
        coef = linalg.solve(M, flat.reshape(-1, basis.dim).T, assume_a="pos").T
        coef = coef.reshape((len(cells),) + lead + (basis.dim,))
        if out is None:
            out = np.empty((mesh.n_cells,) + lead + (basis.dim,))
        out[cells] = coef
    return out


def project_velocity(u, mesh, k):
    """Q_h u = {Q_0 u, Q_b u} for a vector field ``u``."""
    cell = project_cells(u, mesh, k)
    edge = project_edges(u, mesh, k)
    if cell.ndim == 2:
        cell = cell[:, None, :]
        edge = edge[:, None, :]
    return ProjectedField(cell, edge, k)


def basis_for(mesh, cell_id, degree):
    """Scaled monomial basis of a mesh cell in absolute coordinates."""
    return cell_basis(mesh.cell_points(cell_id), degree)

