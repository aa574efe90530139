"""Error norms and observed convergence orders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .projection import ProjectedField, evaluate_field
from .polybasis import polygon_quadrature, segment_rule
from numpy.polynomial import legendre

__all__ = [
    "l2_velocity_error",
    "energy_error",
    "energy_norm",
    "l2_pressure_error",
    "discrete_h1_norm",
    "LevelErrors",
    "ErrorReport",
    "convergence_orders",
    "observed_order",
]


def _difference(a, b):
    if a.degree != b.degree or a.cell.shape != b.cell.shape:
        raise ValueError(f"degree mismatch: {a.degree} vs {b.degree}")
    edge = None
    if a.edge is not None and b.edge is not None:
        edge = a.edge - b.edge
    return ProjectedField(a.cell - b.cell, edge, a.degree)


def _field(x):
    return x.velocity if hasattr(x, "velocity") else x


def l2_velocity_error(solution, projected, operators):
    """||Q_0 u - u_0|| summed over cells, via cell mass matrices."""
    diff = _difference(_field(projected), _field(solution))
    total = 0.0
    for ops, cells in operators.groups():
        d = diff.cell[cells]  # (n, 2, nk)
        total += float(np.einsum("nci,ij,ncj->", d, ops.mass_k, d))
    return math.sqrt(max(total, 0.0))


def energy_norm(field_, operators, kappa_inv, dofmap):
    """|||v||| = (sum_T (grad_w v, grad_w v)_T + kappa_inv (v_0, v_0)_T)^(1/2)."""
    total = 0.0
    for ops, cells in operators.groups():
        V = dofmap.local_vectors(field_, cells)
        G = V @ ops.grad.T  # (n, 4 nr)
        nr = ops.basis_r.dim
        G = G.reshape(len(cells), 4, nr)
        total += float(np.einsum("nai,ij,naj->", G, ops.mass_r, G))
        if kappa_inv:
            d = field_.cell[cells]
            total += kappa_inv * float(np.einsum("nci,ij,ncj->", d, ops.mass_k, d))
    return math.sqrt(max(total, 0.0))


def energy_error(solution, projected, operators, kappa_inv, dofmap, r=None):
    """|||Q_h u - u_h||| with the scheme's weak gradient degree."""
    if r is not None and r != operators.r:
        raise ValueError(f"energy norm requested with r={r} but operators use r={operators.r}")
    diff = _difference(_field(projected), _field(solution))
    return energy_norm(diff, operators, kappa_inv, dofmap)


def l2_pressure_error(solution, p_exact, operators, quad_degree=None):
    """||p - p_h|| with a quadrature of exactness >= 2k + 4."""
    mesh = operators.mesh
    k = operators.k
    qdeg = 2 * k + 4 if quad_degree is None else quad_degree
    ph = solution.pressure if hasattr(solution, "pressure") else np.asarray(solution)
    total = 0.0
    for ops, cells in operators.groups():
        pts0 = mesh.cell_points(cells[0])
        quad = polygon_quadrature(pts0 - pts0[0], qdeg)
        origins = mesh.vertices[[mesh.cells[c][0] for c in cells]]
        pts = (origins[:, None, :] + quad.points[None]).reshape(-1, 2)
        pv = evaluate_field(p_exact, pts).reshape(len(cells), -1)
        B = ops.basis_km1.eval(quad.points)  # (nq, nkm1), relative coords
        phv = ph[cells] @ B.T
        total += float(((pv - phv) ** 2 @ quad.weights).sum())
    return math.sqrt(max(total, 0.0))


def discrete_h1_norm(field_, operators, kappa_inv):
    """(sum_T ||grad v_0||^2 + kappa_inv ||v_0||^2 + h_T^{-1} ||v_0 - v_b||^2_{dT})^(1/2)."""
    mesh = operators.mesh
    k = operators.k
    total = 0.0
    for ops, cells in operators.groups():
        bk = ops.basis_k
        q, w = ops.quad_points, ops.quad_weights
        G = bk.grad(q)  # (2, nq, nk)
        c = field_.cell[cells]  # (n, 2, nk)
        grads = np.einsum("dqi,nci->ncdq", G, c)
        total += float((grads**2 @ w).sum())
        if kappa_inv:
            total += kappa_inv * float(np.einsum("nci,ij,ncj->", c, ops.mass_k, c))
        pts0 = mesh.cell_points(cells[0]) - mesh.cell_points(cells[0])[0]
        m = len(pts0)
        edges = np.array([mesh.cell_edges[cc] for cc in cells])
        htinv = 1.0 / mesh.diameters[cells]
        for i in range(m):
            a, b = pts0[i], pts0[(i + 1) % m]
            epts, ew, s = segment_rule(a, b, 2 * k + 2)
            sign = mesh.edge_sign(int(cells[0]), i)
            tpar = 2.0 * s - 1.0 if sign > 0 else 1.0 - 2.0 * s
            trace = np.einsum("qi,nci->ncq", bk.eval(epts), c)
            vb = np.einsum("qj,ncj->ncq", legendre.legvander(tpar, k), field_.edge[edges[:, i]])
            jump = ((trace - vb) ** 2 @ ew).sum(axis=1)
            total += float((htinv * jump).sum())
    return math.sqrt(max(total, 0.0))


# ---------------------------------------------------------------------------
# Reports


@dataclass
class LevelErrors:
    level: int
    h: float
    velocity_l2: float
    energy: float
    pressure_l2: float
    div_residual: float = 0.0
    n_dofs: int = 0
    diagnostic: str = ""


@dataclass
class ErrorReport:
    levels: list = field(default_factory=list)
    orders: list = field(default_factory=list)  # one dict per level, None for the first
    label: str = ""

    COLUMNS = ("velocity_l2", "energy", "pressure_l2")

    def finest_orders(self):
        """Orders of the last consecutive pair as a dict."""
        for o in reversed(self.orders):
            if o is not None:
                return o
        return None


def observed_order(e_prev, e_cur, h_prev=None, h_cur=None):
    """log(e_prev / e_cur) / log(h_prev / h_cur); h ratio 2 by default.

    Returns NaN when either error is zero or non-finite.
    """
    if not (np.isfinite(e_prev) and np.isfinite(e_cur)) or e_prev <= 0 or e_cur <= 0:
        return math.nan
    ratio = 2.0 if h_prev is None or h_cur is None else h_prev / h_cur
    return math.log(e_prev / e_cur) / math.log(ratio)


def convergence_orders(report):
    """Fill ``report.orders`` from consecutive levels (in place); returns it."""
    orders = []
    prev = None
    for lev in report.levels:
        if prev is None or lev.diagnostic or prev.diagnostic:
            orders.append(None)
        else:
            orders.append({c: observed_order(getattr(prev, c), getattr(lev, c), prev.h, lev.h) for c in report.COLUMNS})
        prev = lev
    report.orders = orders
    return report
