"""Scaled monomial bases and quadrature rules.

Element basis functions are ``((x - xc)/h)**a * ((y - yc)/h)**b`` with
``a + b <= k``, ordered by total degree and, within a degree, by increasing
power of ``y``; so the degree-``k`` basis is a prefix of the degree-``j``
basis for ``j >= k``. Edge basis functions are ``s**i`` with ``s`` in
``[-1/2, 1/2]`` running along the global edge orientation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


def dim_pk(k):
    if k < 0:
        raise ValueError("degree must be non-negative")
    return (k + 1) * (k + 2) // 2


@lru_cache(maxsize=None)
def exponents(k):
    """(dim_pk(k), 2) array of monomial exponents ``(a, b)``."""
    return np.array([(d - b, b) for d in range(k + 1) for b in range(d + 1)], dtype=np.int64)


def monomials(k, xi, eta):
    """Values and gradients of the monomials ``xi**a * eta**b``.

    ``xi`` and ``eta`` are arrays of equal shape ``S``; returns values of shape
    ``S + (n,)`` and gradients of shape ``S + (n, 2)`` with respect to
    ``(xi, eta)``.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    px = np.stack([xi ** p for p in range(k + 1)], axis=-1)
    py = np.stack([eta ** p for p in range(k + 1)], axis=-1)
    ab = exponents(k)
    a, b = ab[:, 0], ab[:, 1]
    vals = px[..., a] * py[..., b]
    am1 = np.maximum(a - 1, 0)
    bm1 = np.maximum(b - 1, 0)
    dx = a * px[..., am1] * py[..., b]
    dy = b * px[..., a] * py[..., bm1]
    return vals, np.stack([dx, dy], axis=-1)


def eval_element_basis(geom, k, p):
    """Values and physical gradients of the degree-``k`` element basis at ``p``."""
    p = np.asarray(p, dtype=float)
    h = geom.diameter
    xi = (p[..., 0] - geom.centroid[0]) / h
    eta = (p[..., 1] - geom.centroid[1]) / h
    vals, grads = monomials(k, xi, eta)
    return vals, grads / h


def edge_monomials(k, s):
    s = np.asarray(s, dtype=float)
    return np.stack([s ** i for i in range(k + 1)], axis=-1)


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray   # (nq, 2) or (nq,) on edges
    weights: np.ndarray  # (nq,)
    degree: int


@lru_cache(maxsize=None)
def triangle_quadrature(d):
    """Collapsed Gauss rule on the triangle (0,0), (1,0), (0,1), exact to degree ``d``.

    The collapsed direction uses Gauss-Jacobi points for the weight ``(1 - u)``
    so that ``ceil((d + 1) / 2)`` points per direction suffice.
    """
    if d < 0:
        raise ValueError("degree must be non-negative")
    n = max(1, (d + 2) // 2)
    gu, wu = roots_jacobi(n, 1.0, 0.0)   # weight (1 - t) on [-1, 1]
    gv, wv = roots_legendre(n)
    u = (gu + 1) / 2
    v = (gv + 1) / 2
    wu = wu / 4   # (1 - t) = 2 (1 - u), dt = 2 du
    wv = wv / 2
    U, V = np.meshgrid(u, v, indexing="ij")
    pts = np.stack([U.ravel(), (V * (1 - U)).ravel()], axis=1)
    w = np.outer(wu, wv).ravel()
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(pts, w, d)


@lru_cache(maxsize=None)
def edge_quadrature(d):
    """Gauss-Legendre rule on [0, 1], exact to degree ``d``."""
    if d < 0:
        raise ValueError("degree must be non-negative")
    n = max(1, (d + 2) // 2)
    g, w = roots_legendre(n)
    pts = (g + 1) / 2
    w = w / 2
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(pts, w, d)


def map_triangles(corners, rule):
    """Map a reference rule onto triangles.

    ``corners`` has shape ``(..., 3, 2)``; returns points ``(..., nq, 2)`` and
    weights ``(..., nq)``.
    """
    a = corners[..., 0, :]
    e1 = corners[..., 1, :] - a
    e2 = corners[..., 2, :] - a
    det = np.abs(e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0])
    xi = rule.points[:, 0]
    eta = rule.points[:, 1]
    pts = (a[..., None, :] + xi[:, None] * e1[..., None, :] + eta[:, None] * e2[..., None, :])
    return pts, det[..., None] * rule.weights


def polygon_points(verts, d, centroids=None):
    """Quadrature on a batch of convex polygons with the same vertex count.

    ``verts`` has shape ``(ne, m, 2)``. Triangles use the mapped reference
    rule directly; larger polygons are split into a fan about the centroid.
    Returns points ``(ne, nq, 2)`` and weights ``(ne, nq)``.
    """
    verts = np.asarray(verts, dtype=float)
    rule = triangle_quadrature(d)
    ne, m, _ = verts.shape
    if m == 3:
        return map_triangles(verts, rule)
    if centroids is None:
        centroids = np.array([_centroid(v) for v in verts])
    c = np.broadcast_to(centroids[:, None, :], (ne, m, 2))
    fan = np.stack([c, verts, np.roll(verts, -1, axis=1)], axis=2)  # (ne, m, 3, 2)
    pts, w = map_triangles(fan, rule)
    return pts.reshape(ne, m * len(rule.weights), 2), w.reshape(ne, -1)


def polygon_quadrature(geom, vertices, d):
    """Quadrature rule on one convex element given its vertex coordinates."""
    pts, w = polygon_points(np.asarray(vertices)[None], d, np.asarray(geom.centroid)[None])
    return QuadRule(pts[0], w[0], d)


def _centroid(p):
    x, y = p[:, 0], p[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cr = x * y1 - x1 * y
    return np.array([((x + x1) * cr).sum(), ((y + y1) * cr).sum()]) / (3.0 * cr.sum())
