"""Element-local weak gradient lifting.

For local unknowns ``d = (v0 coefficients, v_b coefficients per edge)`` the
weak gradient is the field in ``[P_j(T)]^2`` satisfying

    (grad_w v, q)_T = -(v0, div q)_T + <v_b, q . n>_{dT}   for all q.

With ``M`` the scalar ``P_j`` Gram matrix and ``B`` the right-hand side
moments this gives ``G = M^{-1} B`` per component, and the local stiffness
``K = G^T blkdiag(M, M) G``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .poly_basis import dim_pk, edge_monomials, edge_quadrature, monomials, polygon_points


def j_zero(k, m, parallel=False):
    """Smallest weak-gradient degree giving a stable scheme on an ``m``-gon."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if m < 3:
        raise ValueError("an element has at least 3 edges")
    return k + m - 3 if parallel else k + m - 2


def auto_degree(mesh, k):
    """Global weak-gradient degree: the largest per-element ``j_zero``."""
    from .mesh import shape_report

    par = shape_report(mesh).parallel_edges
    return max(j_zero(k, int(m), bool(p)) for m, p in zip(mesh.element_sizes, par))


@dataclass(frozen=True)
class LocalDofLayout:
    k: int
    m: int

    @property
    def n0(self):
        return dim_pk(self.k)

    @property
    def nb(self):
        return self.k + 1

    @property
    def total(self):
        return self.n0 + self.m * self.nb

    def edge_slice(self, local_edge):
        start = self.n0 + local_edge * self.nb
        return slice(start, start + self.nb)


@dataclass(frozen=True)
class WeakGradOp:
    G: np.ndarray   # (2 dim_pk(j), n_local)
    M: np.ndarray   # (2 dim_pk(j), 2 dim_pk(j)), block diagonal
    K: np.ndarray   # (n_local, n_local)
    k: int
    j: int
    layout: LocalDofLayout = field(repr=False)

    def apply(self, dofs):
        dofs = np.asarray(dofs, dtype=float)
        if dofs.shape[0] != self.G.shape[1]:
            raise ValueError(f"expected {self.G.shape[1]} local dofs, got {dofs.shape[0]}")
        return self.G @ dofs


def apply(op, local_dofs):
    return op.apply(local_dofs)


def local_stiffness(op):
    return op.K


@dataclass
class OperatorGroup:
    """Local operators of all elements with the same edge count."""
    elements: np.ndarray  # (ne,)
    G: np.ndarray         # (ne, 2 dj, nloc)
    Mj: np.ndarray        # (ne, dj, dj)
    K: np.ndarray         # (ne, nloc, nloc)
    layout: LocalDofLayout


class LocalOperators:
    """Weak-gradient operators for every element of a mesh, grouped by edge count."""

    def __init__(self, mesh, k, j):
        if j < k:
            raise ValueError(f"weak-gradient degree j={j} must be at least k={k}")
        self.mesh, self.k, self.j = mesh, k, j
        self.groups = {}
        self._where = np.empty((mesh.n_elements, 2), dtype=np.int64)
        for m, idx in mesh.groups().items():
            self.groups[m] = _build_group(mesh, idx, k, j)
            self._where[idx, 0] = m
            self._where[idx, 1] = np.arange(len(idx))

    def op(self, e):
        m, r = self._where[e]
        g = self.groups[int(m)]
        return WeakGradOp(G=g.G[r], M=block_diag(g.Mj[r], g.Mj[r]), K=g.K[r],
                          k=self.k, j=self.j, layout=g.layout)


def local_operators(mesh, k, j):
    """Cached :class:`LocalOperators` for ``mesh``."""
    cache = mesh.__dict__.setdefault("_operator_cache", {})
    key = (k, j)
    if key not in cache:
        cache[key] = LocalOperators(mesh, k, j)
    return cache[key]


def build_local_operator(mesh, e, k, j):
    """Weak-gradient operator of element ``e``."""
    if j < k:
        raise ValueError(f"weak-gradient degree j={j} must be at least k={k}")
    g = _build_group(mesh, np.array([e]), k, j)
    return WeakGradOp(G=g.G[0], M=block_diag(g.Mj[0], g.Mj[0]), K=g.K[0],
                      k=k, j=j, layout=g.layout)


def _element_vertices(mesh, idx):
    return mesh.vertices[np.array([mesh.elements[e] for e in idx])]


def _build_group(mesh, idx, k, j):
    verts = _element_vertices(mesh, idx)              # (ne, m, 2)
    ne, m, _ = verts.shape
    c = mesh.centroids[idx]
    h = mesh.diameters[idx]
    dj, n0, nb = dim_pk(j), dim_pk(k), k + 1
    layout = LocalDofLayout(k, m)

    pts, w = polygon_points(verts, 2 * j, c)
    xi = (pts - c[:, None, :]) / h[:, None, None]
    P, dP = monomials(j, xi[..., 0], xi[..., 1])
    dP = dP / h[:, None, None, None]
    Mj = np.einsum("eq,eqa,eqb->eab", w, P, P)

    B = np.zeros((ne, 2, dj, layout.total))
    wPhi = w[..., None] * P[..., :n0]
    B[:, 0, :, :n0] = -np.einsum("eqi,eqa->eai", wPhi, dP[..., 0])
    B[:, 1, :, :n0] = -np.einsum("eqi,eqa->eai", wPhi, dP[..., 1])

    rule = edge_quadrature(k + j)
    psi = edge_monomials(k, rule.points - 0.5)        # (ng, nb)
    edge_ids = np.array([mesh.element_edges[e] for e in idx])
    for l in range(m):
        ge = edge_ids[:, l]
        a = mesh.vertices[mesh.edges[ge, 0]]
        b = mesh.vertices[mesh.edges[ge, 1]]
        x = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
        xe = (x - c[:, None, :]) / h[:, None, None]
        Pe, _ = monomials(j, xe[..., 0], xe[..., 1])
        d = verts[:, (l + 1) % m] - verts[:, l]
        # length * outward unit normal
        ln = np.stack([d[:, 1], -d[:, 0]], axis=1)
        mom = np.einsum("q,qi,eqa->eai", rule.weights, psi, Pe)
        sl = layout.edge_slice(l)
        B[:, 0, :, sl] = mom * ln[:, 0, None, None]
        B[:, 1, :, sl] = mom * ln[:, 1, None, None]

    # Gram factor from a QR of the weighted samples: forming Mj and factoring
    # it would square the conditioning of the monomial basis
    R = np.linalg.qr(np.sqrt(w)[..., None] * P, mode="r")
    Rt = R.transpose(0, 2, 1)
    Gx = np.linalg.solve(R, np.linalg.solve(Rt, B[:, 0]))
    Gy = np.linalg.solve(R, np.linalg.solve(Rt, B[:, 1]))
    K = np.einsum("eai,eaj->eij", B[:, 0], Gx) + np.einsum("eai,eaj->eij", B[:, 1], Gy)
    K = 0.5 * (K + K.transpose(0, 2, 1))
    G = np.concatenate([Gx, Gy], axis=1)
    return OperatorGroup(elements=np.asarray(idx), G=G, Mj=Mj, K=K, layout=layout)


def conforming_local_dofs(mesh, e, k, coeffs):
    """Local dofs of ``v0 = sum coeffs_i phi_i`` with ``v_b`` its exact trace."""
    coeffs = np.asarray(coeffs, dtype=float)
    layout = LocalDofLayout(k, len(mesh.elements[e]))
    out = np.zeros(layout.total)
    out[:layout.n0] = coeffs
    rule = edge_quadrature(2 * k)
    psi = edge_monomials(k, rule.points - 0.5)
    gram = psi.T @ (rule.weights[:, None] * psi)
    c, h = mesh.centroids[e], mesh.diameters[e]
    for l, ge in enumerate(mesh.element_edges[e]):
        a, b = mesh.vertices[mesh.edges[ge]]
        x = a + rule.points[:, None] * (b - a)
        vals, _ = monomials(k, (x[:, 0] - c[0]) / h, (x[:, 1] - c[1]) / h)
        rhs = psi.T @ (rule.weights * (vals @ coeffs))
        out[layout.edge_slice(l)] = np.linalg.solve(gram, rhs)
    return out
