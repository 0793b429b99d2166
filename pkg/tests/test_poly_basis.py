from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import central_gradient
from sfwg.mesh import build_hexagon_mesh, build_uniform_quad_mesh, build_uniform_triangle_mesh
from sfwg.poly_basis import (dim_pk, edge_quadrature, eval_element_basis, exponents,
                             polygon_quadrature, triangle_quadrature)


@pytest.mark.parametrize("k, n", [(0, 1), (1, 3), (2, 6), (3, 10)])
def test_dim_pk(k, n):
    assert dim_pk(k) == n == len(exponents(k))


def test_basis_at_centroid():
    g = build_uniform_triangle_mesh(2).geom(3)
    vals, _ = eval_element_basis(g, 3, g.centroid)
    np.testing.assert_array_equal(vals, np.eye(10)[0])


def test_linear_basis_gradient():
    g = build_hexagon_mesh(3).geom(4)
    pts = np.random.default_rng(1).random((5, 2))
    _, grads = eval_element_basis(g, 1, pts)
    np.testing.assert_allclose(grads[:, 1], np.tile([1 / g.diameter, 0], (5, 1)), rtol=1e-15)


@pytest.mark.parametrize("mesh", [build_uniform_triangle_mesh(2), build_hexagon_mesh(3)], ids=repr)
def test_basis_gradient_finite_differences(mesh):
    rng = np.random.default_rng(7)
    for e in range(mesh.n_elements):
        g = mesh.geom(e)
        p = mesh.vertices[mesh.elements[e]]
        for _ in range(10):
            w = rng.dirichlet(np.ones(len(p)))
            x = w @ p
            _, grads = eval_element_basis(g, 3, x)
            fd = central_gradient(lambda q: eval_element_basis(g, 3, q)[0], x)
            fd = np.moveaxis(fd, -1, -1)
            scale = np.abs(grads).max()
            assert np.abs(fd - grads).max() <= 1e-6 * scale


@pytest.mark.parametrize("d", range(0, 11))
def test_triangle_quadrature_exactness(d):
    rule = triangle_quadrature(d)
    assert abs(rule.weights.sum() - 0.5) < 1e-15
    assert np.all(rule.weights > 0)
    x, y = rule.points.T
    for a in range(d + 1):
        for b in range(d + 1 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            assert abs(rule.weights @ (x ** a * y ** b) - exact) <= 1e-13 * exact


def test_triangle_xy():
    rule = triangle_quadrature(2)
    x, y = rule.points.T
    assert abs(rule.weights @ (x * y) - 1 / 24) < 1e-15


def test_polygon_quadrature_unit_square():
    m = build_uniform_quad_mesh(1)
    q0 = polygon_quadrature(m.geom(0), m.vertices[m.elements[0]], 0)
    assert abs(q0.weights.sum() - 1) < 1e-15
    q = polygon_quadrature(m.geom(0), m.vertices[m.elements[0]], 4)
    x, y = q.points.T
    assert abs(q.weights @ (x ** 2 * y ** 2) - 1 / 9) < 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 7))
def test_polygon_quadrature_matches_triangle_map(a, b, e):
    m = build_uniform_triangle_mesh(2)
    g = m.geom(e)
    verts = m.vertices[m.elements[e]]
    q = polygon_quadrature(g, verts, a + b)
    # fan about the centroid, independently assembled
    ref = triangle_quadrature(a + b)
    total = 0.0
    for i in range(3):
        tri = np.array([g.centroid, verts[i], verts[(i + 1) % 3]])
        J = np.array([tri[1] - tri[0], tri[2] - tri[0]]).T
        pts = tri[0] + ref.points @ J.T
        total += abs(np.linalg.det(J)) * ref.weights @ (pts[:, 0] ** a * pts[:, 1] ** b)
    x, y = q.points.T
    assert abs(q.weights @ (x ** a * y ** b) - total) <= 1e-13 * max(1.0, abs(total))


def test_polygon_quadrature_hexagon_moments():
    m = build_hexagon_mesh(3)
    for e in range(m.n_elements):
        q = polygon_quadrature(m.geom(e), m.vertices[m.elements[e]], 2)
        assert abs(q.weights.sum() - m.areas[e]) < 1e-15
        np.testing.assert_allclose(q.weights @ q.points / m.areas[e], m.centroids[e], atol=1e-14)


@pytest.mark.parametrize("d", range(0, 12))
def test_edge_quadrature(d):
    rule = edge_quadrature(d)
    assert abs(rule.weights.sum() - 1) < 1e-15
    for p in range(d + 1):
        assert abs(rule.weights @ rule.points ** p - 1 / (p + 1)) < 1e-14


def test_edge_two_point_cubic():
    rule = edge_quadrature(3)
    assert len(rule.weights) == 2
    assert abs(rule.weights @ rule.points ** 3 - 0.25) < 1e-15


def test_gram_spd():
    for mesh in (build_uniform_triangle_mesh(4), build_hexagon_mesh(3)):
        for e in range(mesh.n_elements):
            g = mesh.geom(e)
            q = polygon_quadrature(g, mesh.vertices[mesh.elements[e]], 4)
            P, _ = eval_element_basis(g, 2, q.points)
            M = P.T @ (q.weights[:, None] * P) / g.area
            np.linalg.cholesky(M)
            assert np.linalg.cond(M) < 1e5
