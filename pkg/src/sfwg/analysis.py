"""Projections, error norms and the convergence / singularity / norm studies."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import mesh as meshes
from .assembly import (assemble_load, assemble_stiffness, build_dof_map, counting_lower_bound,
                       element_moments, scatter)
from .linsolve import cg_solve, nullity_probe
from .poly_basis import dim_pk, edge_monomials, edge_quadrature, monomials, polygon_points
from .weak_gradient import auto_degree, local_operators

PI = math.pi


@dataclass(frozen=True)
class NamedField:
    name: str
    u: object
    grad: object
    f: object   # -laplacian of u


def _sinsin_u(x, y):
    return np.sin(PI * x) * np.sin(PI * y)


def _sinsin_grad(x, y):
    return np.stack([PI * np.cos(PI * x) * np.sin(PI * y),
                     PI * np.sin(PI * x) * np.cos(PI * y)], axis=-1)


def _sinsin_f(x, y):
    return 2 * PI ** 2 * np.sin(PI * x) * np.sin(PI * y)


def _bubble_u(x, y):
    return x * (1 - x) * y * (1 - y)


def _bubble_grad(x, y):
    return np.stack([(1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)], axis=-1)


def _bubble_f(x, y):
    return 2 * (y * (1 - y) + x * (1 - x))


def _zero(x, y):
    return np.zeros(np.broadcast(x, y).shape)


FIELDS = {
    "sinsin": NamedField("sinsin", _sinsin_u, _sinsin_grad, _sinsin_f),
    "bubble": NamedField("bubble", _bubble_u, _bubble_grad, _bubble_f),
    "zero": NamedField("zero", _zero, lambda x, y: np.stack([_zero(x, y)] * 2, -1), _zero),
}


def get_field(name):
    try:
        return FIELDS[name]
    except KeyError:
        raise ValueError(f"unknown field {name!r}; expected one of {sorted(FIELDS)}") from None


# -- projections ------------------------------------------------------------------


def _mass_k(mesh, k, degree):
    out = np.zeros((mesh.n_elements, dim_pk(k), dim_pk(k)))
    for m, ids in mesh.groups().items():
        verts = mesh.vertices[np.array([mesh.elements[e] for e in ids])]
        c, h = mesh.centroids[ids], mesh.diameters[ids]
        pts, w = polygon_points(verts, degree, c)
        xi = (pts - c[:, None, :]) / h[:, None, None]
        P, _ = monomials(k, xi[..., 0], xi[..., 1])
        out[ids] = np.einsum("eq,eqa,eqb->eab", w, P, P)
    return out


def project_q0(mesh, k, u):
    """Elementwise L2 projection onto P_k(T), as ``(n_elements, dim_pk(k))``."""
    deg = 2 * k + 4
    return np.linalg.solve(_mass_k(mesh, k, deg), element_moments(mesh, k, u, deg)[..., None])[..., 0]


def project_qb(mesh, k, u):
    """Edgewise L2 projection onto P_k(e), as ``(n_edges, k + 1)`` in ``s**i``."""
    rule = edge_quadrature(2 * k + 4)
    psi = edge_monomials(k, rule.points - 0.5)
    gram = psi.T @ (rule.weights[:, None] * psi)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    x = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    vals = u(x[..., 0], x[..., 1])
    mom = (vals * rule.weights) @ psi
    return np.linalg.solve(gram, mom.T).T


def qh_vector(mesh, k, u, dofmap=None):
    """``Q_h u`` restricted to the unknowns of ``V_h^0``."""
    dofmap = dofmap or build_dof_map(mesh, k)
    v = np.zeros(dofmap.n_dofs)
    v[:mesh.n_elements * dofmap.n0] = project_q0(mesh, k, u).ravel()
    qb = project_qb(mesh, k, u)
    inner = dofmap.edge_offsets >= 0
    rows = dofmap.edge_offsets[inner][:, None] + np.arange(dofmap.nb)
    v[rows] = qb[inner]
    return v


# -- norms ------------------------------------------------------------------------------


def local_values(dofmap, v):
    """Gather a global vector into per-group local blocks (eliminated slots = 0)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (dofmap.n_dofs,):
        raise ValueError(f"expected a vector of {dofmap.n_dofs} unknowns, got shape {v.shape}")
    return {m: np.where(g >= 0, v[np.maximum(g, 0)], 0.0)
            for m, (idx, g) in dofmap.group_gathers.items()}


def energy_norm(mesh, k, j, v, dofmap=None):
    """``sqrt(sum_T ||grad_w v||_T^2)``."""
    dofmap = dofmap or build_dof_map(mesh, k)
    ops = local_operators(mesh, k, j)
    total = 0.0
    for m, d in local_values(dofmap, v).items():
        total += float(np.einsum("ei,eij,ej->", d, ops.groups[m].K, d))
    return math.sqrt(max(total, 0.0))


def h1_local_matrices(mesh, k):
    """Local Gram matrices of ``||v||_{1,h}^2`` per edge-count group."""
    n0, nb = dim_pk(k), k + 1
    erule = edge_quadrature(2 * k)
    psi = edge_monomials(k, erule.points - 0.5)
    out = {}
    for m, ids in mesh.groups().items():
        verts = mesh.vertices[np.array([mesh.elements[e] for e in ids])]
        c, h = mesh.centroids[ids], mesh.diameters[ids]
        nloc = n0 + m * nb
        H = np.zeros((len(ids), nloc, nloc))
        pts, w = polygon_points(verts, max(2 * k - 2, 0), c)
        xi = (pts - c[:, None, :]) / h[:, None, None]
        _, dP = monomials(k, xi[..., 0], xi[..., 1])
        dP = dP / h[:, None, None, None]
        H[:, :n0, :n0] = np.einsum("eq,eqad,eqbd->eab", w, dP, dP)
        edge_ids = np.array([mesh.element_edges[e] for e in ids])
        for l in range(m):
            ge = edge_ids[:, l]
            a = mesh.vertices[mesh.edges[ge, 0]]
            b = mesh.vertices[mesh.edges[ge, 1]]
            x = a[:, None, :] + erule.points[None, :, None] * (b - a)[:, None, :]
            xe = (x - c[:, None, :]) / h[:, None, None]
            Pe, _ = monomials(k, xe[..., 0], xe[..., 1])
            r = np.zeros((len(ids), len(erule.weights), nloc))
            r[..., :n0] = Pe
            r[..., n0 + l * nb:n0 + (l + 1) * nb] = -psi
            wl = erule.weights * (mesh.edge_lengths[ge] / h)[:, None]
            H += np.einsum("eq,eqa,eqb->eab", wl, r, r)
        out[m] = H
    return out


def h1_norm(mesh, k, v, dofmap=None):
    """``sqrt(sum_T ||grad v0||_T^2 + h_T^-1 ||v0 - v_b||_dT^2)``."""
    dofmap = dofmap or build_dof_map(mesh, k)
    H = h1_local_matrices(mesh, k)
    total = sum(float(np.einsum("ei,eij,ej->", d, H[m], d))
                for m, d in local_values(dofmap, v).items())
    return math.sqrt(max(total, 0.0))


def assemble_h1_gram(mesh, k, dofmap=None):
    dofmap = dofmap or build_dof_map(mesh, k)
    return scatter(dofmap, h1_local_matrices(mesh, k))


def l2_interior_error(mesh, k, coeffs, reference):
    """``||sum (coeffs - reference)_i phi_i||`` over the mesh."""
    d = np.asarray(coeffs) - np.asarray(reference)
    M = _mass_k(mesh, k, 2 * k)
    return math.sqrt(max(float(np.einsum("ei,eij,ej->", d, M, d)), 0.0))


# -- convergence study -------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    h: float
    dofs: int
    energy_err: float
    energy_rate: float | None
    l2_err: float
    l2_rate: float | None
    cg_iters: int
    residual: float


@dataclass
class ConvergenceReport:
    field: str
    k: int
    j: int
    rows: list = field(default_factory=list)

    CSV_COLUMNS = ("level", "h", "dofs", "energy_err", "energy_rate", "l2_err", "l2_rate",
                   "cg_iters", "residual")

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# field={self.field} k={self.k} j={self.j}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.level, f"1/{r.level}", r.dofs, f"{r.energy_err:.10e}",
                        _rate(r.energy_rate, 6), f"{r.l2_err:.10e}", _rate(r.l2_rate, 6),
                        r.cg_iters, f"{r.residual:.3e}"])
        return buf.getvalue()

    def to_markdown(self):
        lines = [f"field={self.field}, k={self.k}, j={self.j}", "",
                 "| k | h | energy error | Rate | L2 error | Rate |",
                 "|---|---|---|---|---|---|"]
        for i, r in enumerate(self.rows):
            kcol = str(self.k) if i == 0 else ""
            lines.append(f"| {kcol} | 1/{r.level} | {r.energy_err:.4E} | {_rate(r.energy_rate, 2)} "
                         f"| {r.l2_err:.4E} | {_rate(r.l2_rate, 2)} |")
        return "\n".join(lines) + "\n"


def _rate(r, digits):
    return "-" if r is None else f"{r:.{digits}f}"


def observed_rate(coarse, fine):
    if coarse <= 0 or fine <= 0:
        return float("nan")
    return math.log2(coarse / fine)


def solve_problem(mesh, field_name, k, j, tol=1e-10, maxit=None):
    """Assemble and solve; returns ``(u_h, stats, dofmap, b)``."""
    fld = get_field(field_name)
    dofmap = build_dof_map(mesh, k)
    A = assemble_stiffness(mesh, k, j, dofmap)
    b = assemble_load(mesh, k, fld.f, dofmap)
    if not np.any(b):
        return np.zeros(dofmap.n_dofs), None, dofmap, b
    x, stats = cg_solve(A, b, tol=tol, maxit=maxit)
    return x, stats, dofmap, b


def convergence_study(field_name, k, j="auto", levels=(2, 4, 8), tol=1e-10, mesh_builder=None,
                      maxit=None):
    """Solve on each level and measure ``|||u_h - Q_h u|||`` and ``||u_0 - Q_0 u||``."""
    fld = get_field(field_name)
    mesh_builder = mesh_builder or meshes.build_uniform_triangle_mesh
    levels = list(levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    report = None
    prev = None
    for n in levels:
        mesh = mesh_builder(n)
        jj = auto_degree(mesh, k) if j == "auto" else int(j)
        if report is None:
            report = ConvergenceReport(fld.name, k, jj)
        uh, stats, dofmap, _ = solve_problem(mesh, fld.name, k, jj, tol, maxit)
        qh = qh_vector(mesh, k, fld.u, dofmap)
        e_en = energy_norm(mesh, k, jj, uh - qh, dofmap)
        n_int = mesh.n_elements * dofmap.n0
        e_l2 = l2_interior_error(mesh, k, uh[:n_int].reshape(mesh.n_elements, -1),
                                 qh[:n_int].reshape(mesh.n_elements, -1))
        rate_e = observed_rate(prev[0], e_en) if prev else None
        rate_l = observed_rate(prev[1], e_l2) if prev else None
        report.rows.append(ConvergenceRow(
            level=n, h=1.0 / n, dofs=dofmap.n_dofs, energy_err=e_en, energy_rate=rate_e,
            l2_err=e_l2, l2_rate=rate_l, cg_iters=stats.iterations if stats else 0,
            residual=stats.residual if stats else 0.0))
        prev = (e_en, e_l2)
    return report


# -- norm equivalence --------------------------------------------------------------------


@dataclass(frozen=True)
class NormEquivalence:
    min_ratio: float
    max_ratio: float
    exact_min: float | None = None
    exact_max: float | None = None


EXACT_LIMIT = 2000


def norm_ratio(mesh, k, j, v, dofmap=None):
    dofmap = dofmap or build_dof_map(mesh, k)
    den = h1_norm(mesh, k, v, dofmap)
    if den == 0.0:
        raise ArithmeticError("discrete H1 norm vanished for a sampled vector")
    return energy_norm(mesh, k, j, v, dofmap) / den


def norm_equivalence_study(mesh, k, j, samples=100, seed=0, exact=None):
    """Extremes of ``|||v||| / ||v||_{1,h}`` over seeded random ``v``.

    With ``exact`` (default: when the system has at most 2000 unknowns) also
    returns the true extremes from the generalized eigenproblem of the two
    Gram matrices.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    dofmap = build_dof_map(mesh, k)
    A = assemble_stiffness(mesh, k, j, dofmap)
    B = assemble_h1_gram(mesh, k, dofmap)
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((dofmap.n_dofs, samples))
    num = np.einsum("is,is->s", V, A.csr @ V)
    den = np.einsum("is,is->s", V, B.csr @ V)
    if np.any(den <= 0):
        raise ArithmeticError("discrete H1 norm vanished for a sampled vector")
    ratios = np.sqrt(np.maximum(num, 0) / den)
    exact = dofmap.n_dofs <= EXACT_LIMIT if exact is None else exact
    emin = emax = None
    if exact:
        lam = sla.eigh(A.toarray(), B.toarray(), eigvals_only=True)
        emin = math.sqrt(max(lam[0], 0.0))
        emax = math.sqrt(max(lam[-1], 0.0))
    return NormEquivalence(float(ratios.min()), float(ratios.max()), emin, emax)


# -- singularity ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularityReport:
    k: int
    j: int
    dofs: int
    counting_lower_bound: int
    nullity: int
    smallest_pivot: float
    null_vectors: np.ndarray = field(repr=False)

    @property
    def verdict(self):
        return "singular" if self.nullity > 0 else "nonsingular"

    @property
    def consistent(self):
        return self.nullity >= self.counting_lower_bound

    def lines(self):
        return [f"k={self.k} j={self.j} dofs={self.dofs}",
                f"counting_lower_bound={self.counting_lower_bound}",
                f"nullity={self.nullity}",
                f"smallest_pivot={self.smallest_pivot:.3e}",
                f"verdict={self.verdict}"]


def singularity_study(mesh, k, j, tau_rel=1e-10):
    A = assemble_stiffness(mesh, k, j)
    res = nullity_probe(A, tau_rel)
    report = SingularityReport(k, j, A.n, counting_lower_bound(mesh, k, j), res.nullity,
                               res.smallest_pivot, res.null_vectors)
    if not report.consistent:
        raise ArithmeticError(
            f"probe nullity {res.nullity} below counting bound {report.counting_lower_bound}")
    return report
