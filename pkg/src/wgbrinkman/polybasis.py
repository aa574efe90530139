"""Polynomial bases, quadrature and elementary integrals on polygons.

Cell polynomials use monomials centred at the cell centroid and scaled by
the cell diameter,

    b_(a,b)(x, y) = ((x - xc) / h)**a * ((y - yc) / h)**b,   a + b <= r,

ordered by total degree and, within a degree, by decreasing power of x.
Edge polynomials are Legendre polynomials in the arclength parameter mapped
to [-1, 1], running from the edge's lower to higher global vertex index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre
from scipy import linalg
from scipy.special import roots_jacobi

from .mesh import triangulate_polygon

__all__ = [
    "dim_p",
    "monomial_exponents",
    "MonomialBasis",
    "EdgeBasis",
    "QuadratureRule",
    "triangle_rule",
    "polygon_quadrature",
    "cell_quadrature",
    "segment_rule",
    "cell_basis",
    "OrthonormalBasis",
    "orthonormalize",
    "mass_matrix",
    "grad_div_coupling",
    "edge_coupling",
    "edge_mass_matrix",
    "triangle_monomial_integral",
    "polygon_monomial_integral",
    "SingularMassError",
]


class SingularMassError(np.linalg.LinAlgError):
    """A cell mass matrix failed to factorize."""


def dim_p(r):
    """Dimension of bivariate polynomials of total degree <= r."""
    return 0 if r < 0 else (r + 1) * (r + 2) // 2


@lru_cache(maxsize=None)
def monomial_exponents(r):
    """(dim, 2) array of exponent pairs (a, b) in basis order."""
    out = [(d - j, j) for d in range(r + 1) for j in range(d + 1)]
    return np.array(out, dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True)
class MonomialBasis:
    """Scaled monomials of degree <= ``degree`` about ``center``."""

    degree: int
    center: tuple
    scale: float

    @property
    def dim(self):
        return dim_p(self.degree)

    @property
    def exponents(self):
        return monomial_exponents(self.degree)

    def _scaled(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (pts[:, 0] - self.center[0]) / self.scale, (pts[:, 1] - self.center[1]) / self.scale

    def _powers(self, s):
        p = np.ones((self.degree + 2, len(s)))
        for i in range(1, self.degree + 2):
            p[i] = p[i - 1] * s
        return p

    def eval(self, pts):
        """Values, shape (npts, dim)."""
        if self.degree < 0:
            return np.zeros((len(np.atleast_2d(pts)), 0))
        s, t = self._scaled(pts)
        ps, pt = self._powers(s), self._powers(t)
        e = self.exponents
        return (ps[e[:, 0]] * pt[e[:, 1]]).T

    def grad(self, pts):
        """Gradients, shape (2, npts, dim)."""
        if self.degree < 0:
            n = len(np.atleast_2d(pts))
            return np.zeros((2, n, 0))
        s, t = self._scaled(pts)
        ps, pt = self._powers(s), self._powers(t)
        e = self.exponents
        a, b = e[:, 0], e[:, 1]
        dx = (a[:, None] * ps[np.maximum(a - 1, 0)] * pt[b]).T / self.scale
        dy = (b[:, None] * ps[a] * pt[np.maximum(b - 1, 0)]).T / self.scale
        return np.stack([dx, dy])

    def evaluate(self, coeffs, pts):
        """Evaluate the polynomial(s) with coefficient vector(s) ``coeffs``
        (trailing axis = dim) at ``pts``."""
        return np.asarray(coeffs) @ self.eval(pts).T


@dataclass(frozen=True)
class EdgeBasis:
    """Legendre polynomials of degree <= ``degree`` on the segment a -> b."""

    degree: int
    start: tuple
    end: tuple

    @property
    def dim(self):
        return self.degree + 1

    @property
    def length(self):
        return float(np.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1]))

    def parameter(self, pts):
        """Map points on the edge to t in [-1, 1]."""
        a = np.asarray(self.start)
        d = np.asarray(self.end) - a
        pts = np.atleast_2d(pts)
        return 2.0 * ((pts - a) @ d) / (d @ d) - 1.0

    def eval_t(self, t):
        return legendre.legvander(np.asarray(t, dtype=float), self.degree)

    def eval(self, pts):
        """Values, shape (npts, dim)."""
        return self.eval_t(self.parameter(pts))

    def mass_diagonal(self):
        j = np.arange(self.dim)
        return self.length / (2 * j + 1)


def cell_basis(pts, degree):
    """Scaled monomial basis for the polygon with vertices ``pts``."""
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    w = x * yn - xn * y
    a = 0.5 * w.sum()
    c = (float(np.dot(x + xn, w) / (6 * a)), float(np.dot(y + yn, w) / (6 * a)))
    diff = pts[:, None, :] - pts[None, :, :]
    h = float(np.sqrt((diff**2).sum(-1)).max())
    return MonomialBasis(int(degree), c, h)


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """A monomial basis mixed by ``transform`` into an L2-orthonormal one.

    ``eval`` returns ``monomials.eval(pts) @ transform``; the transform is
    upper triangular, so span(first j functions) is unchanged.
    """

    monomials: MonomialBasis
    transform: np.ndarray

    @property
    def degree(self):
        return self.monomials.degree

    @property
    def dim(self):
        return self.monomials.dim

    def eval(self, pts):
        return self.monomials.eval(pts) @ self.transform

    def grad(self, pts):
        return self.monomials.grad(pts) @ self.transform

    def evaluate(self, coeffs, pts):
        return np.asarray(coeffs) @ self.eval(pts).T


def orthonormalize(quad, basis):
    """Gram-Schmidt hook for high degrees.

    Scaled monomials lose conditioning quickly beyond degree 4 on thin
    cells.  The weighted Vandermonde matrix is factored by Householder QR,
    which orthonormalizes without forming the (ill-conditioned) mass matrix.
    """
    sw = np.sqrt(quad.weights)
    _, R = linalg.qr(basis.eval(quad.points) * sw[:, None], mode="economic")
    R = R * np.sign(np.diag(R))[:, None]  # positive constant mode first
    T = linalg.solve_triangular(R, np.eye(basis.dim))
    return OrthonormalBasis(basis, T)


# ---------------------------------------------------------------------------
# Quadrature


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values):
        """Sum over the leading point axis of ``values`` times weights."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))

    def shifted(self, offset):
        return QuadratureRule(self.points + np.asarray(offset), self.weights, self.degree)


@lru_cache(maxsize=None)
def _collapsed_reference(degree):
    """Conical-product rule on the unit right triangle, exact to ``degree``.

    Gauss-Legendre in the radial-free direction and Gauss-Jacobi(1, 0) in the
    collapsed direction; all weights are positive.
    """
    n = max(1, (degree + 2) // 2)
    xg, wg = np.polynomial.legendre.leggauss(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (xg + 1.0)
    t = 0.5 * (xj + 1.0)
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(0.5 * wg, 0.25 * wj)
    pts = np.column_stack([(S * (1.0 - T)).ravel(), T.ravel()])
    return pts, W.ravel()


def triangle_rule(tri, degree):
    """Quadrature rule on the triangle ``tri`` ((3, 2) array)."""
    tri = np.asarray(tri, dtype=float)
    ref_pts, ref_w = _collapsed_reference(int(degree))
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    jac = e1[0] * e2[1] - e1[1] * e2[0]
    pts = tri[0] + ref_pts[:, :1] * e1 + ref_pts[:, 1:] * e2
    return QuadratureRule(pts, ref_w * abs(jac), int(degree))


def polygon_quadrature(pts, degree):
    """Composite rule on a simple polygon via ear-clipping triangulation."""
    if degree < 0:
        raise ValueError("quadrature exactness must be >= 0")
    pts = np.asarray(pts, dtype=float)
    tris = pts[triangulate_polygon(pts)]
    rules = [triangle_rule(t, degree) for t in tris]
    return QuadratureRule(
        np.concatenate([q.points for q in rules]),
        np.concatenate([q.weights for q in rules]),
        int(degree),
    )


def cell_quadrature(mesh, cell_id, exactness):
    """Rule integrating polynomials of degree <= ``exactness`` over a cell."""
    return polygon_quadrature(mesh.cell_points(cell_id), exactness)


@lru_cache(maxsize=None)
def _gauss_unit(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def segment_rule(a, b, degree):
    """Gauss-Legendre rule on segment a -> b, exact to ``degree``; returns
    (points, weights, s) with s in [0, 1] the fractional arclength."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s, w = _gauss_unit(max(1, (int(degree) + 2) // 2))
    length = float(np.hypot(*(b - a)))
    return a + s[:, None] * (b - a), w * length, s


# ---------------------------------------------------------------------------
# Elementary integrals


def mass_matrix(quad, basis, *, label="cell"):
    """Mass matrix of ``basis`` under ``quad``; checked SPD by Cholesky."""
    B = basis.eval(quad.points)
    M = (B * quad.weights[:, None]).T @ B
    M = 0.5 * (M + M.T)
    if M.size:
        try:
            linalg.cholesky(M, lower=True)
        except linalg.LinAlgError as exc:
            raise SingularMassError(
                f"mass matrix of degree {basis.degree} on {label} is not positive definite "
                "(degenerate geometry or insufficient quadrature)"
            ) from exc
    return M


def grad_div_coupling(quad, trial, test):
    """(Cx, Cy) with C?[i, j] = integral of trial_i * d?(test_j)."""
    B = trial.eval(quad.points) * quad.weights[:, None]
    G = test.grad(quad.points)
    return B.T @ G[0], B.T @ G[1]


def edge_coupling(a, b, edge_basis, cell_basis_, normal_component):
    """E[i, j] = integral over segment a->b of beta_i * q_j * n_c.

    ``normal_component`` is the scalar n_x or n_y of the outward normal of
    the cell owning ``cell_basis_``.
    """
    deg = edge_basis.degree + cell_basis_.degree
    pts, w, _ = segment_rule(a, b, deg)
    beta = edge_basis.eval(pts)
    q = cell_basis_.eval(pts)
    return normal_component * (beta * w[:, None]).T @ q


def edge_mass_matrix(edge_basis):
    pts, w, _ = segment_rule(edge_basis.start, edge_basis.end, 2 * edge_basis.degree)
    beta = edge_basis.eval(pts)
    return (beta * w[:, None]).T @ beta


# ---------------------------------------------------------------------------
# Analytic moments (oracle path, independent of the quadrature rules)


def triangle_monomial_integral(tri, a, b):
    """Exact integral of x**a * y**b over a triangle.

    Uses the closed form for barycentric monomials,
    integral of l1^i l2^j l3^k = 2|T| i! j! k! / (i+j+k+2)!,
    after multinomial expansion of x and y in barycentric coordinates.
    """
    from math import factorial

    tri = np.asarray(tri, dtype=float)
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    X, Y = tri[:, 0], tri[:, 1]

    def expand(coef, n):
        # (c0 l0 + c1 l1 + c2 l2)^n as dict (i, j, k) -> coefficient
        out = {}
        for i in range(n + 1):
            for j in range(n - i + 1):
                k = n - i - j
                m = factorial(n) // (factorial(i) * factorial(j) * factorial(k))
                out[(i, j, k)] = m * coef[0] ** i * coef[1] ** j * coef[2] ** k
        return out

    px, py = expand(X, a), expand(Y, b)
    total = 0.0
    for (i1, j1, k1), cx in px.items():
        for (i2, j2, k2), cy in py.items():
            i, j, k = i1 + i2, j1 + j2, k1 + k2
            total += cx * cy * factorial(i) * factorial(j) * factorial(k) / factorial(i + j + k + 2)
    return 2.0 * area * total


def polygon_monomial_integral(pts, a, b):
    """Exact integral of x**a y**b over a simple polygon, via a fan of signed
    triangles from the origin (shoelace-style; no triangulation needed)."""
    pts = np.asarray(pts, dtype=float)
    total = 0.0
    o = np.zeros(2)
    for i in range(len(pts)):
        p, q = pts[i], pts[(i + 1) % len(pts)]
        sign = np.sign(p[0] * q[1] - p[1] * q[0])
        if sign == 0:
            continue
        total += sign * triangle_monomial_integral(np.array([o, p, q]), a, b)
    return total
