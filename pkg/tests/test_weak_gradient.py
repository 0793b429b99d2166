import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import reference_triangle_lifting
from sfwg.mesh import (Mesh, build_hexagon_mesh, build_uniform_quad_mesh,
                       build_uniform_triangle_mesh)
from sfwg.poly_basis import dim_pk, exponents, monomials, polygon_quadrature
from sfwg.weak_gradient import (LocalDofLayout, apply, auto_degree, build_local_operator,
                                conforming_local_dofs, j_zero, local_operators, local_stiffness)

REF = Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])


def constant_dofs(layout, c=1.0):
    d = np.zeros(layout.total)
    d[0] = c
    for l in range(layout.m):
        d[layout.edge_slice(l).start] = c
    return d


def field_norm(op, mesh, e, coeffs):
    """L2(T) norm of a lifted field, in units of a unit scaled-monomial gradient."""
    return np.sqrt(coeffs @ op.M @ coeffs / mesh.areas[e]) * mesh.diameters[e]


def gradient_coeffs(k, j, i, h):
    """Weak-gradient coefficients of grad(phi_i) in the degree-j basis."""
    ex = [tuple(r) for r in exponents(j)]
    a, b = exponents(k)[i]
    out = np.zeros(2 * dim_pk(j))
    if a:
        out[ex.index((a - 1, b))] = a / h
    if b:
        out[dim_pk(j) + ex.index((a, b - 1))] = b / h
    return out


@pytest.mark.parametrize("k, m, parallel, expected", [
    (1, 3, False, 2), (2, 4, True, 3), (1, 6, True, 4), (2, 6, False, 6), (1, 4, False, 3),
])
def test_j_zero(k, m, parallel, expected):
    assert j_zero(k, m, parallel) == expected


def test_j_zero_rejects():
    with pytest.raises(ValueError):
        j_zero(0, 3)
    with pytest.raises(ValueError):
        j_zero(1, 2)


def test_auto_degree():
    assert auto_degree(build_uniform_triangle_mesh(3), 1) == 2
    assert auto_degree(build_uniform_quad_mesh(3), 2) == 3
    # pentagons on the top and bottom rows dominate
    assert auto_degree(build_hexagon_mesh(4), 1) == 4


def test_layout():
    lay = LocalDofLayout(2, 5)
    assert lay.total == 6 + 5 * 3
    assert lay.edge_slice(1) == slice(9, 12)


def test_reference_triangle_oracle():
    G = build_local_operator(REF, 0, 1, 2).G
    np.testing.assert_allclose(G, reference_triangle_lifting(1, 2), rtol=0, atol=1e-12)


def test_reference_triangle_oracle_k2():
    G = build_local_operator(REF, 0, 2, 3).G
    oracle = reference_triangle_lifting(2, 3)
    assert np.abs(G - oracle).max() <= 1e-10 * np.abs(oracle).max()


def test_j_below_k_rejected():
    with pytest.raises(ValueError):
        build_local_operator(REF, 0, 2, 1)


@pytest.mark.parametrize("mesh", [build_uniform_triangle_mesh(2), build_uniform_quad_mesh(2),
                                  build_hexagon_mesh(3)], ids=repr)
@pytest.mark.parametrize("k", [1, 2, 3])
def test_consistency(mesh, k):
    for j in range(k, k + 3):
        ops = local_operators(mesh, k, j)
        for e in range(mesh.n_elements):
            op = ops.op(e)
            assert field_norm(op, mesh, e, op.apply(constant_dofs(op.layout, 2.5))) <= 1e-12 * 2.5
            for i in range(1, dim_pk(k)):
                c = np.eye(dim_pk(k))[i]
                lifted = op.apply(conforming_local_dofs(mesh, e, k, c))
                err = lifted - gradient_coeffs(k, j, i, mesh.diameters[e])
                assert field_norm(op, mesh, e, err) <= 1e-11


def test_linear_field_exact_gradient():
    mesh = build_uniform_triangle_mesh(3)
    op = build_local_operator(mesh, 4, 1, 2)
    g = op.apply(conforming_local_dofs(mesh, 4, 1, [0, 1, 0]))
    expected = np.zeros(12)
    expected[0] = 1 / mesh.diameters[4]
    np.testing.assert_allclose(g, expected, atol=1e-12)


@pytest.mark.parametrize("mesh", [build_uniform_triangle_mesh(2), build_hexagon_mesh(3)], ids=repr)
def test_stiffness_properties(mesh):
    for k in (1, 2):
        for j in range(k, k + 3):
            ops = local_operators(mesh, k, j)
            for e in range(mesh.n_elements):
                K = local_stiffness(ops.op(e))
                scale = np.abs(K).max()
                assert np.abs(K - K.T).max() <= 1e-13 * scale
                assert np.linalg.eigvalsh(K).min() >= -1e-10 * np.linalg.norm(K, 2)
                assert np.abs(K @ constant_dofs(ops.op(e).layout)).max() <= 1e-11 * max(scale, 1)


def test_energy_matches_quadrature_of_lifted_gradient():
    mesh = build_hexagon_mesh(3)
    rng = np.random.default_rng(3)
    for e in (0, 4, 7):
        op = build_local_operator(mesh, e, 2, 4)
        g = mesh.geom(e)
        q = polygon_quadrature(g, mesh.vertices[mesh.elements[e]], 12)
        xi = (q.points - g.centroid) / g.diameter
        P, _ = monomials(4, xi[:, 0], xi[:, 1])
        for _ in range(5):
            d = rng.standard_normal(op.layout.total)
            c = op.apply(d)
            gx, gy = P @ c[:15], P @ c[15:]
            direct = q.weights @ (gx ** 2 + gy ** 2)
            assert abs(d @ op.K @ d - direct) <= 1e-11 * direct


def test_rank_grows_with_degree():
    mesh = build_uniform_triangle_mesh(1)
    r1 = np.linalg.matrix_rank(build_local_operator(mesh, 0, 1, 1).K, tol=1e-10)
    r2 = np.linalg.matrix_rank(build_local_operator(mesh, 0, 1, 2).K, tol=1e-10)
    # 9 local unknowns, constants always in the kernel
    assert r1 <= r2 <= 8
    assert r1 == 6 and r2 == 8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 7), st.integers(0, 2 ** 32 - 1))
def test_energy_monotone_in_degree(e, seed):
    mesh = build_hexagon_mesh(3)
    k = 1
    m = len(mesh.elements[e])
    d = np.random.default_rng(seed).standard_normal(LocalDofLayout(k, m).total)
    energies = [d @ local_operators(mesh, k, j).op(e).K @ d for j in range(k, k + m - 1)]
    for lo, hi in zip(energies, energies[1:]):
        assert hi >= lo - 1e-12 * max(1.0, abs(hi))


def test_apply_linear_and_shape():
    op = build_local_operator(REF, 0, 1, 2)
    rng = np.random.default_rng(0)
    d1, d2 = rng.standard_normal((2, op.layout.total))
    np.testing.assert_allclose(apply(op, d1 + d2), apply(op, d1) + apply(op, d2), atol=1e-13 * 1e3)
    assert not apply(op, np.zeros(op.layout.total)).any()
    with pytest.raises(ValueError):
        op.apply(np.zeros(3))
