"""Global saddle-point system for the weak Galerkin Brinkman scheme.

Unknowns are ordered in contiguous blocks

    [interior velocity | interior-edge velocity | pressure | mean multiplier]

and the system matrix is

    [[A,  B^T, 0],
     [B,  0,   m],
     [0,  m^T, 0]]

with A the weak-gradient stiffness plus kappa^{-1} times the interior mass,
B the (negated) weak divergence tested against piecewise P_{k-1}, and m the
vector of pressure basis integrals.  Boundary edges carry no unknowns
(homogeneous Dirichlet data).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .projection import ProjectedField, evaluate_field
from .weak_ops import LocalOperatorCache

__all__ = ["DofMap", "SaddleSystem", "assemble", "load_vector", "export_matrix_market"]


class DofMap:
    """Global numbering of WG unknowns on a mesh.

    Attributes
    ----------
    n_velocity_interior, n_velocity_edge, n_pressure : block sizes
    interior_edge_index : (ne,) int array, -1 on boundary edges
    """

    def __init__(self, mesh, k):
        if k < 1:
            raise ValueError(f"velocity degree k must be >= 1, got {k}")
        self.mesh = mesh
        self.k = int(k)
        self.nk = (k + 1) * (k + 2) // 2
        self.nkm1 = k * (k + 1) // 2
        self.nb = k + 1
        nc = mesh.n_cells
        interior = ~mesh.boundary_edge
        self.interior_edge_index = np.full(mesh.n_edges, -1, dtype=np.int64)
        self.interior_edge_index[interior] = np.arange(int(interior.sum()))
        self.n_velocity_interior = 2 * self.nk * nc
        self.n_velocity_edge = 2 * self.nb * int(interior.sum())
        self.n_pressure = self.nkm1 * nc
        self.edge_offset = self.n_velocity_interior
        self.pressure_offset = self.n_velocity_interior + self.n_velocity_edge
        self.multiplier_index = self.pressure_offset + self.n_pressure

    @property
    def n_velocity(self):
        return self.n_velocity_interior + self.n_velocity_edge

    @property
    def size(self):
        return self.multiplier_index + 1

    def velocity_slice(self):
        return slice(0, self.n_velocity)

    def pressure_slice(self):
        return slice(self.pressure_offset, self.multiplier_index)

    def cell_velocity_dofs(self, cells):
        """(len(cells), nloc) global velocity indices, -1 for boundary DOFs.

        All ``cells`` must have the same number of edges.
        """
        cells = np.atleast_1d(cells)
        nk, nb = self.nk, self.nb
        edges = np.array([self.mesh.cell_edges[c] for c in cells])  # (n, m)
        base = (cells * 2 * nk)[:, None] + np.arange(2 * nk)[None]
        ie = self.interior_edge_index[edges]  # (n, m)
        eoff = self.edge_offset + ie[:, :, None] * 2 * nb + np.arange(2 * nb)[None, None]
        eoff = np.where(ie[:, :, None] >= 0, eoff, -1)
        return np.concatenate([base, eoff.reshape(len(cells), -1)], axis=1)

    def cell_pressure_dofs(self, cells):
        cells = np.atleast_1d(cells)
        return self.pressure_offset + (cells * self.nkm1)[:, None] + np.arange(self.nkm1)[None]

    def local_vectors(self, field, cells):
        """Local DOF vectors (len(cells), nloc) of a :class:`ProjectedField`."""
        cells = np.atleast_1d(cells)
        edges = np.array([self.mesh.cell_edges[c] for c in cells])
        interior = field.cell[cells].reshape(len(cells), -1)
        edge = field.edge[edges].reshape(len(cells), -1)
        return np.concatenate([interior, edge], axis=1)

    def velocity_field(self, x):
        """Unpack the velocity block of a global vector into a
        :class:`ProjectedField`; boundary edges get exact zeros."""
        nc, ne = self.mesh.n_cells, self.mesh.n_edges
        cell = np.asarray(x[: self.n_velocity_interior]).reshape(nc, 2, self.nk).copy()
        edge = np.zeros((ne, 2, self.nb))
        inner = self.interior_edge_index >= 0
        edge[inner] = np.asarray(x[self.edge_offset : self.pressure_offset]).reshape(-1, 2, self.nb)
        return ProjectedField(cell, edge, self.k)

    def velocity_vector(self, field):
        """Inverse of :meth:`velocity_field` (boundary coefficients dropped)."""
        x = np.zeros(self.n_velocity)
        x[: self.n_velocity_interior] = field.cell.reshape(-1)
        x[self.edge_offset :] = field.edge[self.interior_edge_index >= 0].reshape(-1)
        return x


@dataclass(eq=False)
class SaddleSystem:
    """Assembled system with its blocks.

    ``matrix`` is the full CSC matrix; ``A``, ``B`` are CSR blocks and ``m``
    the dense pressure-mean vector.
    """

    matrix: sp.csc_matrix
    rhs: np.ndarray
    A: sp.csr_matrix
    B: sp.csr_matrix
    m: np.ndarray
    dofmap: DofMap
    operators: LocalOperatorCache
    kappa_inv: float

    @property
    def k(self):
        return self.dofmap.k

    @property
    def r(self):
        return self.operators.r


def _scatter(rows, cols, vals, shape):
    mask = (rows >= 0) & (cols >= 0)
    return sp.coo_matrix((vals[mask], (rows[mask], cols[mask])), shape=shape).tocsr()


def load_vector(mesh, k, f, operators=None, dofmap=None):
    """Velocity load vector (f, v_0); edge entries are zero."""
    dofmap = dofmap or DofMap(mesh, k)
    operators = operators or LocalOperatorCache(mesh, k, k + 1)
    out = np.zeros(dofmap.n_velocity)
    for ops, cells in operators.groups():
        origins = mesh.vertices[[mesh.cells[c][0] for c in cells]]
        pts = (origins[:, None, :] + ops.quad_points[None]).reshape(-1, 2)
        vals = evaluate_field(f, pts)
        if vals.ndim == 1:
            raise ValueError("load must be a 2-vector field")
        vals = vals.reshape(2, len(cells), -1)
        Bw = ops.basis_k.eval(ops.quad_points) * ops.quad_weights[:, None]
        loc = np.einsum("cnq,qi->nci", vals, Bw)  # (ncells, 2, nk)
        idx = (cells * 2 * dofmap.nk)[:, None] + np.arange(2 * dofmap.nk)[None]
        out[idx] = loc.reshape(len(cells), -1)
    return out


def assemble(mesh, k, r, kappa_inv, f, *, quad_degree=None, operators=None):
    """Assemble the saddle system of the stabilizer-free WG scheme.

    Parameters
    ----------
    mesh : PolygonalMesh
    k : int
        Velocity degree (pressure degree k - 1).
    r : int
        Weak gradient degree, ``r >= k - 1``.
    kappa_inv : float
        Inverse permeability, >= 0 (0 is the Stokes limit).
    f : callable or None
        Momentum source; ``None`` means zero load.
    operators : LocalOperatorCache, optional
        Reuse precomputed local operators for (mesh, k, r).

    Returns
    -------
    SaddleSystem
    """
    if mesh is None or mesh.n_cells == 0:
        raise ValueError("cannot assemble on an empty mesh")
    if k < 1:
        raise ValueError(f"velocity degree k must be >= 1, got {k}")
    if r < k - 1:
        raise ValueError(f"weak gradient degree r={r} must be >= k-1={k - 1}")
    if not np.isfinite(kappa_inv) or kappa_inv < 0:
        raise ValueError(f"kappa_inv must be a nonnegative number, got {kappa_inv}")

    dofmap = DofMap(mesh, k)
    if operators is None:
        operators = LocalOperatorCache(mesh, k, r, quad_degree)
    elif (operators.mesh is not mesh) or operators.k != k or operators.r != r:
        raise ValueError("operator cache does not match (mesh, k, r)")

    nv, npr = dofmap.n_velocity, dofmap.n_pressure
    a_rows, a_cols, a_vals = [], [], []
    b_rows, b_cols, b_vals = [], [], []
    m = np.zeros(npr)
    for ops, cells in operators.groups():
        L = dofmap.cell_velocity_dofs(cells)  # (n, nloc)
        Aloc = ops.local_matrix(kappa_inv)
        n, nloc = L.shape
        a_rows.append(np.repeat(L, nloc, axis=1).ravel())
        a_cols.append(np.tile(L, (1, nloc)).ravel())
        a_vals.append(np.broadcast_to(Aloc.ravel(), (n, nloc * nloc)).ravel())
        P = dofmap.cell_pressure_dofs(cells) - dofmap.pressure_offset  # (n, nkm1)
        Bloc = -ops.div_rhs
        nq = P.shape[1]
        b_rows.append(np.repeat(P, nloc, axis=1).ravel())
        b_cols.append(np.tile(L, (1, nq)).ravel())
        b_vals.append(np.broadcast_to(Bloc.ravel(), (n, nq * nloc)).ravel())
        if nq:
            m[P] = ops.mass_km1[0]
    A = _scatter(np.concatenate(a_rows), np.concatenate(a_cols), np.concatenate(a_vals), (nv, nv))
    B = _scatter(np.concatenate(b_rows), np.concatenate(b_cols), np.concatenate(b_vals), (npr, nv))
    A = 0.5 * (A + A.T)
    A.sum_duplicates()

    mcol = sp.csr_matrix(m[:, None])
    K = sp.bmat(
        [
            [A, B.T, None],
            [B, None, mcol],
            [None, mcol.T, sp.csr_matrix((1, 1))],
        ],
        format="csc",
    )
    K.sum_duplicates()
    K.sort_indices()

    rhs = np.zeros(dofmap.size)
    if f is not None:
        rhs[:nv] = load_vector(mesh, k, f, operators, dofmap)
    return SaddleSystem(K, rhs, A.tocsr(), B.tocsr(), m, dofmap, operators, float(kappa_inv))


def export_matrix_market(system, path):
    """Write the full system matrix in Matrix Market coordinate format."""
    scipy.io.mmwrite(str(path), system.matrix, comment="weak Galerkin Brinkman saddle system", symmetry="symmetric")
