import numpy as np
import pytest

from wgbrinkman.assembly import DofMap
from wgbrinkman.mesh import PolygonalMesh, build_mesh, outward_normal
from wgbrinkman.polybasis import dim_p, monomial_exponents
from wgbrinkman.projection import ProjectedField, project_cells, project_edges
from wgbrinkman.weak_ops import (
    LocalDofLayout,
    LocalOperatorCache,
    local_operators,
    weak_divergence_matrix,
    weak_gradient_matrix,
)

from oracles import L_HEXAGON, UNIT_SQUARE

HIGH_Q = 26  # cell quadrature for non-polynomial fields
HIGH_E = 24  # edge Gauss points


def _single(poly):
    return PolygonalMesh(np.asarray(poly, dtype=float), [list(range(len(poly)))])


def _weak(f, mesh, k, exact=True):
    """Q_h f with projections accurate to roundoff."""
    cell = project_cells(f, mesh, k, quad_degree=HIGH_Q if exact else None)
    edge = project_edges(f, mesh, k, n_points=HIGH_E if exact else None)
    return ProjectedField(cell, edge, k)


def _local(field, mesh, k, cell=0):
    return DofMap(mesh, k).local_vectors(field, [cell])[0]


def _grad_coeffs(mesh, cell, k, r, v):
    G = weak_gradient_matrix(mesh, cell, k, r)
    return (G @ v).reshape(2, 2, dim_p(r))


def test_layout_sizes():
    lay = LocalDofLayout(2, 5)
    assert lay.size == 2 * 6 + 5 * 2 * 3
    assert lay.edge(1, 1) == slice(12 + 6 + 3, 12 + 6 + 6)
    assert len(lay.component(0)) == lay.size // 2


@pytest.mark.parametrize("poly", [UNIT_SQUARE, L_HEXAGON])
@pytest.mark.parametrize("k,r", [(1, 0), (1, 2), (2, 3), (3, 6)])
def test_constant_weak_function_has_zero_gradient(poly, k, r):
    m = _single(poly)
    v = _local(_weak(lambda x, y: np.array([0.7 + 0 * x, -1.3 + 0 * y]), m, k), m, k)
    o = local_operators(m.cell_points(0), [m.edge_sign(0, i) for i in range(len(poly))], k, r)
    g = (o.grad @ v).reshape(4, -1)
    # measured as polynomials; raw coefficients carry the monomial
    # conditioning at high r
    assert np.sqrt(np.einsum("ai,ij,aj->", g, o.mass_r, g)) < 1e-12
    if r <= 3:
        assert np.abs(g).max() < 1e-11


@pytest.mark.parametrize("poly", [UNIT_SQUARE, L_HEXAGON])
def test_linear_field_reproduces_identity_entry(poly):
    m = _single(poly)
    k, r = 1, 2
    v = _local(_weak(lambda x, y: np.array([x, 0 * y]), m, k), m, k)
    g = _grad_coeffs(m, 0, k, r, v)
    expected = np.zeros_like(g)
    expected[0, 0, 0] = 1.0
    assert np.abs(g - expected).max() < 1e-12


@pytest.mark.parametrize("poly", [UNIT_SQUARE, L_HEXAGON, build_mesh("zigzag", 1).cell_points(0)])
def test_single_edge_trace_r0(poly):
    # (grad_w v, phi) = <v_b, phi n>_e with constant phi gives |e|/|T| n
    m = _single(poly)
    k = 1
    lay = LocalDofLayout(k, len(poly))
    area = m.areas[0]
    for i in range(len(poly)):
        e = m.cell_edges[0][i]
        v = np.zeros(lay.size)
        v[lay.edge(i, 0).start] = 1.0  # u_b^x = 1 (constant Legendre mode)
        g = _grad_coeffs(m, 0, k, 0, v)
        n = outward_normal(m, 0, e)
        assert np.allclose(g[0, :, 0], m.edge_length(e) / area * n, atol=1e-13)
        assert np.abs(g[1]).max() == 0.0


def test_row_blocks_decouple():
    m = build_mesh("l_pair", 1)
    lay = LocalDofLayout(2, len(m.cells[0]))
    G = weak_gradient_matrix(m, 0, 2, 4)
    nr = dim_p(4)
    y_dofs = lay.component(1)
    x_dofs = lay.component(0)
    assert np.all(G[: 2 * nr][:, y_dofs] == 0)
    assert np.all(G[2 * nr :][:, x_dofs] == 0)


def test_divergence_of_position_is_two():
    m = _single(L_HEXAGON)
    for k in (1, 2, 3):
        v = _local(_weak(lambda x, y: np.array([x, y]), m, k), m, k)
        d = weak_divergence_matrix(m, 0, k) @ v
        assert d[0] == pytest.approx(2.0, abs=1e-12)
        assert np.abs(d[1:]).max(initial=0) < 1e-12


def test_rotation_is_divergence_free():
    m = _single(L_HEXAGON)
    for k in (1, 2):
        v = _local(_weak(lambda x, y: np.array([-y, x]), m, k), m, k)
        assert np.abs(weak_divergence_matrix(m, 0, k) @ v).max() < 1e-12


def test_normal_trace_on_square_gives_perimeter_over_area():
    m = _single(UNIT_SQUARE)
    k = 2
    lay = LocalDofLayout(k, 4)
    v = np.zeros(lay.size)
    for i, e in enumerate(m.cell_edges[0]):
        n = outward_normal(m, 0, e)
        v[lay.edge(i, 0).start] = n[0]
        v[lay.edge(i, 1).start] = n[1]
    d = weak_divergence_matrix(m, 0, k) @ v
    assert d[0] == pytest.approx(4.0, abs=1e-13)
    assert np.abs(d[1:]).max() < 1e-13
    # k=1 from the worked example
    lay1 = LocalDofLayout(1, 4)
    v1 = np.zeros(lay1.size)
    for i, e in enumerate(m.cell_edges[0]):
        n = outward_normal(m, 0, e)
        v1[lay1.edge(i, 0).start], v1[lay1.edge(i, 1).start] = n
    assert (weak_divergence_matrix(m, 0, 1) @ v1)[0] == pytest.approx(4.0, abs=1e-13)


@pytest.mark.parametrize("family", ["triangle", "cross_split", "l_pair"])
@pytest.mark.parametrize("k,r", [(1, 0), (1, 2), (2, 1), (2, 4), (3, 5)])
def test_polynomial_exactness(family, k, r):
    m = build_mesh(family, 2)
    rng = np.random.default_rng(k * 10 + r)
    A = rng.standard_normal((2, dim_p(k)))
    ex = monomial_exponents(k)

    def u(x, y):
        mon = np.array([x**a * y**b for a, b in ex])
        return A @ mon

    def grad_u(x, y):
        dx = np.array([a * x ** max(a - 1, 0) * y**b for a, b in ex])
        dy = np.array([b * x**a * y ** max(b - 1, 0) for a, b in ex])
        return np.stack([np.stack([A[i] @ dx, A[i] @ dy]) for i in range(2)])

    Qu = _weak(u, m, k)
    G = project_cells(grad_u, m, r, quad_degree=HIGH_Q)
    D = project_cells(lambda x, y: grad_u(x, y)[0, 0] + grad_u(x, y)[1, 1], m, k - 1, quad_degree=HIGH_Q)
    ops = LocalOperatorCache(m, k, r)
    dm = DofMap(m, k)
    for o, cells in ops.groups():
        V = dm.local_vectors(Qu, cells)
        dg = (V @ o.grad.T).reshape(len(cells), 4, -1) - G[cells].reshape(len(cells), 4, -1)
        dd = V @ o.div.T - D[cells]
        assert np.sqrt(np.einsum("nai,ij,naj->n", dg, o.mass_r, dg)).max() < 1e-12
        assert np.sqrt(np.einsum("ni,ij,nj->n", dd, o.mass_km1, dd)).max() < 1e-12


def _smooth():
    u = lambda x, y: np.array([np.sin(2 * x + 0.3) * np.cos(y), np.exp(0.5 * x - y)])  # noqa: E731

    def gu(x, y):
        return np.array(
            [
                [2 * np.cos(2 * x + 0.3) * np.cos(y), -np.sin(2 * x + 0.3) * np.sin(y)],
                [0.5 * np.exp(0.5 * x - y), -np.exp(0.5 * x - y)],
            ]
        )

    du = lambda x, y: 2 * np.cos(2 * x + 0.3) * np.cos(y) - np.exp(0.5 * x - y)  # noqa: E731
    return u, gu, du


def _commuting_discrepancy(family, level, k, r):
    u, gu, du = _smooth()
    m = build_mesh(family, level)
    ops = LocalOperatorCache(m, k, r, quad_degree=HIGH_Q)
    dm = DofMap(m, k)
    Qu = _weak(u, m, k)
    G = project_cells(gu, m, r, quad_degree=HIGH_Q)
    D = project_cells(du, m, k - 1, quad_degree=HIGH_Q)
    e_grad = e_div = 0.0
    for o, cells in ops.groups():
        V = dm.local_vectors(Qu, cells)
        g = (V @ o.grad.T).reshape(len(cells), 2, 2, -1)
        e_grad = max(e_grad, float(np.abs(g - G[cells]).max()))
        e_div = max(e_div, float(np.abs(V @ o.div.T - D[cells]).max()))
    return e_grad, e_div


@pytest.mark.parametrize("family", ["triangle", "l_pair", "zigzag"])
@pytest.mark.parametrize("k,r", [(1, 2), (2, 5), (2, 3), (3, 4)])
def test_divergence_commutes_with_projection(family, k, r):
    # div_w Q_h u = Q^{k-1}(div u) for smooth u
    _, e_div = _commuting_discrepancy(family, 2, k, r)
    assert e_div < 1e-10


@pytest.mark.parametrize("family", ["triangle", "l_pair"])
@pytest.mark.parametrize("k,r", [(1, 0), (1, 1), (2, 1), (2, 2), (3, 3)])
def test_gradient_commutes_when_r_le_k(family, k, r):
    e_grad, _ = _commuting_discrepancy(family, 2, k, r)
    assert e_grad < 1e-10


@pytest.mark.parametrize("family", ["triangle", "l_pair"])
@pytest.mark.parametrize("k,r", [(1, 2), (2, 5)])
def test_gradient_does_not_commute_when_r_gt_k(family, k, r):
    # for r > k, phi.n on an edge has degree r > k, and Q_b u - u is not
    # orthogonal to it; the gradient identity holds only up to O(h^{k+1})
    e2, _ = _commuting_discrepancy(family, 2, k, r)
    e3, _ = _commuting_discrepancy(family, 3, k, r)
    assert e2 > 1e-3 and e3 > 1e-3


def test_translation_invariance():
    pts = np.asarray(L_HEXAGON)
    a = local_operators(pts, [1] * 6, 2, 4)
    b = local_operators(pts + [3.25, -1.5], [1] * 6, 2, 4)
    assert np.abs(a.grad - b.grad).max() < 1e-13 * max(1.0, np.abs(a.grad).max())
    assert np.abs(a.div - b.div).max() < 1e-13 * max(1.0, np.abs(a.div).max())


def test_cache_matches_direct_construction():
    m = build_mesh("cross_split", 2)
    cache = LocalOperatorCache(m, 2, 4)
    assert cache.n_shapes < m.n_cells
    for c in (0, 5, m.n_cells - 1):
        direct = weak_gradient_matrix(m, c, 2, 4)
        assert np.allclose(cache[c].grad, direct, atol=1e-11)


def test_stiffness_is_gram_of_weak_gradient():
    o = local_operators(np.asarray(L_HEXAGON), [1, -1, 1, 1, -1, 1], 2, 3)
    nr = o.basis_r.dim
    K = sum(o.grad[i * nr : (i + 1) * nr].T @ o.mass_r @ o.grad[i * nr : (i + 1) * nr] for i in range(4))
    assert np.allclose(K, o.stiffness, atol=1e-12)
    assert np.abs(o.stiffness - o.stiffness.T).max() < 1e-13
    assert np.linalg.eigvalsh(o.stiffness).min() > -1e-10


def test_bad_degrees_rejected():
    with pytest.raises(ValueError):
        local_operators(np.asarray(UNIT_SQUARE), [1] * 4, 0, 1)
    with pytest.raises(ValueError):
        local_operators(np.asarray(UNIT_SQUARE), [1] * 4, 3, 1)
