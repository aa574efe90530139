import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgbrinkman.mesh import build_mesh
from wgbrinkman.polybasis import (
    EdgeBasis,
    MonomialBasis,
    SingularMassError,
    cell_basis,
    cell_quadrature,
    dim_p,
    edge_coupling,
    edge_mass_matrix,
    grad_div_coupling,
    mass_matrix,
    monomial_exponents,
    orthonormalize,
    polygon_monomial_integral,
    polygon_quadrature,
    triangle_monomial_integral,
)

from oracles import (
    L_HEXAGON,
    UNIT_SQUARE,
    UNIT_TRIANGLE,
    green_monomial_integral,
    polygon_centroid_diameter,
    romberg_edge_integral,
    scaled_monomials,
    slab_integrate,
)


@pytest.mark.parametrize("r", range(9))
def test_dim_and_first_basis_function(r):
    assert dim_p(r) == (r + 1) * (r + 2) // 2
    assert monomial_exponents(r).shape == (dim_p(r), 2)
    b = MonomialBasis(r, (0.3, 0.2), 0.7)
    vals = b.eval(np.random.default_rng(r).random((5, 2)))
    assert np.allclose(vals[:, 0], 1.0)


def test_monomial_gradient_matches_finite_difference():
    b = MonomialBasis(4, (0.4, 0.6), 0.5)
    p = np.array([[0.31, 0.72], [0.55, 0.41]])
    eps = 1e-6
    g = b.grad(p)
    fdx = (b.eval(p + [eps, 0]) - b.eval(p - [eps, 0])) / (2 * eps)
    fdy = (b.eval(p + [0, eps]) - b.eval(p - [0, eps])) / (2 * eps)
    assert np.allclose(g[0], fdx, atol=1e-7)
    assert np.allclose(g[1], fdy, atol=1e-7)


# ---------------------------------------------------------------- quadrature


def test_unit_triangle_area():
    q = polygon_quadrature(UNIT_TRIANGLE, 0)
    assert q.integrate(np.ones(len(q.weights))) == pytest.approx(0.5, abs=1e-15)


def test_xy_over_unit_square():
    q = polygon_quadrature(UNIT_SQUARE, 2)
    x, y = q.points.T
    assert q.integrate(x * y) == pytest.approx(0.25, abs=1e-15)


def test_x2_over_l_hexagon():
    # 15/48: the [0,1]x[0,1/2] rectangle gives 1/6 and [1/2,1]x[1/2,1] gives 7/48
    q = polygon_quadrature(L_HEXAGON, 2)
    val = q.integrate(q.points[:, 0] ** 2)
    assert val == pytest.approx(15 / 48, abs=1e-14)
    assert green_monomial_integral(L_HEXAGON, 2, 0) == pytest.approx(15 / 48, abs=1e-14)
    assert slab_integrate(lambda x, y: x**2, L_HEXAGON) == pytest.approx(15 / 48, abs=1e-14)


@pytest.mark.parametrize("degree", [0, 1, 3, 6, 10, 14, 20, 24])
@pytest.mark.parametrize("poly", ["square", "triangle", "l_hexagon", "cross", "zigzag"])
def test_quadrature_exactness_against_green(degree, poly):
    if poly in ("cross", "zigzag"):
        m = build_mesh("cross_split" if poly == "cross" else "zigzag", 2)
        pts = m.cell_points(1)
    else:
        pts = {"square": UNIT_SQUARE, "triangle": UNIT_TRIANGLE, "l_hexagon": L_HEXAGON}[poly]
    # shift so that monomials are not symmetric about the origin
    pts = np.asarray(pts) + [0.15, -0.05]
    q = polygon_quadrature(pts, degree)
    assert np.all(q.weights > 0)
    assert q.weights.sum() == pytest.approx(abs(green_monomial_integral(pts, 0, 0)), abs=1e-13)
    x, y = q.points.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            exact = green_monomial_integral(pts, a, b)
            assert abs(q.integrate(x**a * y**b) - exact) < 1e-12 * max(1.0, abs(exact))


def test_analytic_moments_agree_with_green():
    for a, b in [(0, 0), (3, 1), (2, 5)]:
        assert polygon_monomial_integral(L_HEXAGON, a, b) == pytest.approx(green_monomial_integral(L_HEXAGON, a, b), abs=1e-14)
        assert triangle_monomial_integral(UNIT_TRIANGLE, a, b) == pytest.approx(
            green_monomial_integral(UNIT_TRIANGLE, a, b), abs=1e-15
        )


def test_cell_quadrature_on_mesh_cells():
    m = build_mesh("l_pair", 2)
    for c in range(m.n_cells):
        q = cell_quadrature(m, c, 5)
        x, y = q.points.T
        assert q.integrate(x**3 * y**2) == pytest.approx(green_monomial_integral(m.cell_points(c), 3, 2), abs=1e-14)


def test_negative_exactness_rejected():
    with pytest.raises(ValueError):
        polygon_quadrature(UNIT_SQUARE, -1)


# ---------------------------------------------------------------- mass matrices


def test_mass_r0_is_area():
    b = cell_basis(L_HEXAGON, 0)
    M = mass_matrix(polygon_quadrature(L_HEXAGON, 2), b)
    assert M.shape == (1, 1)
    assert M[0, 0] == pytest.approx(0.75, abs=1e-15)


def test_mass_unit_square_r1():
    b = cell_basis(UNIT_SQUARE, 1)
    assert b.scale == pytest.approx(math.sqrt(2))
    M = mass_matrix(polygon_quadrature(UNIT_SQUARE, 4), b)
    assert np.allclose(M, np.diag([1.0, 1 / 24, 1 / 24]), atol=1e-15)


def test_mass_matrix_against_independent_rule():
    pts = build_mesh("zigzag", 1).cell_points(0)
    center, diam, _ = polygon_centroid_diameter(pts)
    b = cell_basis(pts, 3)
    assert np.allclose(b.center, center, atol=1e-14) and b.scale == pytest.approx(diam)
    M = mass_matrix(polygon_quadrature(pts, 8), b)
    fs = scaled_monomials(center, diam, 3)
    ref = slab_integrate(lambda x, y: np.array([[fi(x, y) * fj(x, y) for fj in fs] for fi in fs]), pts)
    assert np.abs(M - ref).max() < 1e-13


@pytest.mark.parametrize("r", range(9))
@pytest.mark.parametrize("fam", ["triangle", "cross_split", "zigzag", "l_pair"])
def test_mass_symmetric_and_spd(r, fam):
    pts = build_mesh(fam, 2).cell_points(0)
    M = mass_matrix(polygon_quadrature(pts, 2 * r + 2), cell_basis(pts, r))
    assert np.abs(M - M.T).max() < 1e-13
    np.linalg.cholesky(M)


@pytest.mark.parametrize("r", range(4))
@pytest.mark.parametrize("fam", ["triangle", "cross_split", "zigzag", "l_pair"])
def test_scaled_monomial_conditioning(r, fam):
    # raw scaled monomials stay below 1e8 only up to degree 3 on these
    # cells (about 1e8 at r=4 and 3e16 at r=8 on the right triangles)
    for level in (1, 3):
        pts = build_mesh(fam, level).cell_points(0)
        M = mass_matrix(polygon_quadrature(pts, 2 * r + 2), cell_basis(pts, r))
        assert np.linalg.cond(M) < 1e8


@pytest.mark.parametrize("r", range(9))
@pytest.mark.parametrize("fam", ["triangle", "cross_split", "zigzag", "l_pair"])
def test_orthonormalized_conditioning(r, fam):
    pts = build_mesh(fam, 3).cell_points(0)
    q = polygon_quadrature(pts, 2 * r + 2)
    ob = orthonormalize(q, cell_basis(pts, r))
    M = mass_matrix(q, ob)
    assert np.linalg.cond(M) < 1e8
    assert np.abs(M - np.eye(ob.dim)).max() < 1e-10
    # same span: the first function is a positive constant
    v = ob.eval(q.points)[:, 0]
    assert np.ptp(v) < 1e-12 * abs(v[0]) and v[0] > 0


def test_singular_mass_reported():
    # a one-point rule cannot resolve degree-2 mass matrices
    with pytest.raises(SingularMassError, match="cell 7"):
        mass_matrix(polygon_quadrature(UNIT_TRIANGLE, 0), cell_basis(UNIT_TRIANGLE, 2), label="cell 7")


# ---------------------------------------------------------------- couplings


def test_grad_coupling_constants():
    pts = L_HEXAGON
    q = polygon_quadrature(pts, 6)
    trial, test = cell_basis(pts, 2), cell_basis(pts, 3)
    Cx, Cy = grad_div_coupling(q, trial, test)
    assert np.all(Cx[:, 0] == 0) and np.all(Cy[:, 0] == 0)
    # int 1 * d/dx ((x - x_T) / h_T) = |T| / h_T
    assert Cx[0, 1] == pytest.approx(0.75 / test.scale, abs=1e-15)
    assert Cy[0, 2] == pytest.approx(0.75 / test.scale, abs=1e-15)


@settings(max_examples=20, deadline=None)
@given(
    st.integers(1, 3),
    st.integers(0, 4),
    st.lists(st.floats(-1, 1), min_size=10, max_size=10),
    st.lists(st.floats(-1, 1), min_size=15, max_size=15),
)
def test_grad_coupling_random_polynomials(k, r, ca, cb):
    pts = build_mesh("cross_split", 1).cell_points(2)
    trial, test = cell_basis(pts, k), cell_basis(pts, r)
    a = np.array(ca[: trial.dim])
    b = np.array(cb[: test.dim])
    Cx, Cy = grad_div_coupling(polygon_quadrature(pts, k + r), trial, test)

    def integrand(x, y):
        p = np.column_stack([x, y])
        return np.stack([(trial.eval(p) @ a) * (test.grad(p)[d] @ b) for d in (0, 1)])

    ref = slab_integrate(integrand, pts, n=10)
    assert abs(a @ Cx @ b - ref[0]) < 1e-12
    assert abs(a @ Cy @ b - ref[1]) < 1e-12


def test_edge_coupling_constant_bottom_edge():
    cb = cell_basis(UNIT_SQUARE, 0)
    eb = EdgeBasis(0, (0.0, 0.0), (1.0, 0.0))
    E = edge_coupling((0.0, 0.0), (1.0, 0.0), eb, cb, normal_component=-1.0)
    assert E[0, 0] == pytest.approx(-1.0, abs=1e-15)


def test_edge_coupling_odd_legendre_vs_constant():
    cb = cell_basis(UNIT_SQUARE, 0)
    eb = EdgeBasis(3, (1.0, 0.0), (1.0, 1.0))
    E = edge_coupling((1.0, 0.0), (1.0, 1.0), eb, cb, normal_component=1.0)
    assert abs(E[1, 0]) < 1e-15 and abs(E[3, 0]) < 1e-15


def test_edge_coupling_random_against_romberg():
    rng = np.random.default_rng(4)
    cb = cell_basis(L_HEXAGON, 3)
    # edge (1/2,1/2) -> (0,1/2) of the L; outward normal (0, 1)
    a, b = np.array([0.5, 0.5]), np.array([0.0, 0.5])
    t = b - a
    n = np.array([t[1], -t[0]]) / np.hypot(*t)
    assert np.allclose(n, [0.0, 1.0])
    eb = EdgeBasis(2, tuple(a), tuple(b))
    coef_e, coef_c = rng.standard_normal(3), rng.standard_normal(cb.dim)
    E = edge_coupling(a, b, eb, cb, normal_component=n[1])

    def g(x, y):
        p = np.column_stack([x, y])
        return (eb.eval(p) @ coef_e) * (cb.eval(p) @ coef_c) * n[1]

    assert coef_e @ E @ coef_c == pytest.approx(romberg_edge_integral(g, a, b), abs=1e-12)


def test_edge_mass_diagonal():
    eb = EdgeBasis(5, (0.1, 0.2), (0.7, 0.9))
    M = edge_mass_matrix(eb)
    assert np.abs(M - np.diag(np.diag(M))).max() < 1e-12
    assert np.allclose(np.diag(M), eb.mass_diagonal(), atol=1e-14)


def test_cell_basis_translation_invariant_values():
    pts = L_HEXAGON
    b0, b1 = cell_basis(pts, 3), cell_basis(pts + [2.0, -1.0], 3)
    p = np.array([[0.3, 0.2], [0.8, 0.7]])
    assert np.allclose(b0.eval(p), b1.eval(p + [2.0, -1.0]), atol=1e-13)
