"""Global unknown numbering, stiffness/load assembly and the counting bound."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .poly_basis import dim_pk, monomials, polygon_points
from .weak_gradient import LocalDofLayout, local_operators


@dataclass
class DofMap:
    """Unknowns of ``V_h^0``: interior blocks per element, then interior edges.

    Boundary edges carry no unknowns; their slots in the gather lists are -1.
    """
    mesh: object
    k: int
    edge_offsets: np.ndarray   # (n_edges,), -1 on the boundary
    n_dofs: int

    @property
    def n0(self):
        return dim_pk(self.k)

    @property
    def nb(self):
        return self.k + 1

    def interior(self, e):
        return np.arange(e * self.n0, (e + 1) * self.n0)

    def gather(self, e):
        edges = self.mesh.element_edges[e]
        return _gather_rows(np.array([e]), np.array([edges]), self.n0, self.nb, self.edge_offsets)[0]

    @cached_property
    def group_gathers(self):
        """Edge count -> (elements, gather array of shape (ne, n_local))."""
        out = {}
        for m, idx in self.mesh.groups().items():
            edges = np.array([self.mesh.element_edges[e] for e in idx])
            out[m] = (idx, _gather_rows(idx, edges, self.n0, self.nb, self.edge_offsets))
        return out

    @property
    def n_eliminated(self):
        return int(self.mesh.boundary.sum()) * self.nb


def _gather_rows(idx, edges, n0, nb, edge_offsets):
    inner = idx[:, None] * n0 + np.arange(n0)
    off = edge_offsets[edges]                               # (ne, m)
    eds = np.where(off[..., None] >= 0, off[..., None] + np.arange(nb), -1)
    return np.concatenate([inner, eds.reshape(len(idx), -1)], axis=1)


def build_dof_map(mesh, k):
    if k < 1:
        raise ValueError("k must be at least 1")
    n0, nb = dim_pk(k), k + 1
    interior = ~mesh.boundary
    offsets = np.full(mesh.n_edges, -1, dtype=np.int64)
    base = mesh.n_elements * n0
    offsets[interior] = base + nb * np.arange(int(interior.sum()))
    return DofMap(mesh, k, offsets, int(base + nb * interior.sum()))


@dataclass
class SparseSpd:
    """Symmetric matrix in CSR form (full pattern stored)."""
    csr: sp.csr_matrix

    @property
    def n(self):
        return self.csr.shape[0]

    @property
    def shape(self):
        return self.csr.shape

    @property
    def nnz(self):
        return self.csr.nnz

    def __matmul__(self, x):
        return self.csr @ x

    def toarray(self):
        return self.csr.toarray()

    def diagonal(self):
        return self.csr.diagonal()


def scatter(dofmap, local_blocks):
    """Sum element matrices into a global CSR matrix over kept unknowns.

    ``local_blocks`` maps edge count to an ``(ne, n_local, n_local)`` array
    ordered like ``dofmap.group_gathers``.
    """
    rows, cols, vals = [], [], []
    for m, (idx, g) in sorted(dofmap.group_gathers.items()):
        K = local_blocks[m]
        R = np.broadcast_to(g[:, :, None], K.shape)
        C = np.broadcast_to(g[:, None, :], K.shape)
        keep = (R >= 0) & (C >= 0)
        rows.append(R[keep])
        cols.append(C[keep])
        vals.append(K[keep])
    n = dofmap.n_dofs
    coo = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(n, n))
    csr = coo.tocsr()
    csr.sum_duplicates()
    csr.sort_indices()
    return SparseSpd(csr)


def assemble_stiffness(mesh, k, j, dofmap=None):
    dofmap = dofmap or build_dof_map(mesh, k)
    ops = local_operators(mesh, k, j)
    return scatter(dofmap, {m: g.K for m, g in ops.groups.items()})


def element_moments(mesh, k, func, degree, idx=None):
    """``(func, phi_i)_T`` for every element, shape ``(n_elements, dim_pk(k))``."""
    out = np.zeros((mesh.n_elements, dim_pk(k)))
    for m, ids in mesh.groups().items():
        verts = mesh.vertices[np.array([mesh.elements[e] for e in ids])]
        c, h = mesh.centroids[ids], mesh.diameters[ids]
        pts, w = polygon_points(verts, degree, c)
        xi = (pts - c[:, None, :]) / h[:, None, None]
        P, _ = monomials(k, xi[..., 0], xi[..., 1])
        fv = func(pts[..., 0], pts[..., 1])
        out[ids] = np.einsum("eq,eq,eqi->ei", w, fv, P)
    return out


def assemble_load(mesh, k, f, dofmap=None, degree=None):
    """Right-hand side ``(f, v0)``; edge unknowns receive zero.

    ``f`` is a field name (see :mod:`sfwg.analysis`) or a callable ``f(x, y)``.
    """
    if isinstance(f, str):
        from .analysis import get_field
        f = get_field(f).f
    dofmap = dofmap or build_dof_map(mesh, k)
    degree = 2 * k + 4 if degree is None else degree
    b = np.zeros(dofmap.n_dofs)
    b[:mesh.n_elements * dofmap.n0] = element_moments(mesh, k, f, degree).ravel()
    return b


def counting_lower_bound(mesh, k, j):
    """``max(0, dim V_h^0 - sum_T dim [P_j(T)]^2)``.

    The global weak gradient maps ``V_h^0`` into a space of the second
    dimension, so at least this many independent functions have zero weak
    gradient.
    """
    return max(0, build_dof_map(mesh, k).n_dofs - 2 * dim_pk(j) * mesh.n_elements)


__all__ = [
    "DofMap", "LocalDofLayout", "SparseSpd", "assemble_load", "assemble_stiffness",
    "build_dof_map", "counting_lower_bound", "element_moments", "scatter",
]
