"""Jacobi-preconditioned conjugate gradients and a pivot-counting nullity probe."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import _backend

DENSE_PROBE_LIMIT = 4000
PROBE_LIMIT = 20000


class SolverBreakdown(ArithmeticError):
    """CG met a non-positive or non-finite curvature: the matrix is not SPD."""


class ProbeSizeError(ValueError):
    pass


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    residual: float   # recomputed |b - Ax| / |b|
    elapsed: float
    converged: bool


def _csr_arrays(A):
    csr = A.csr if hasattr(A, "csr") else sp.csr_matrix(A)
    return (csr.indptr.astype(np.int64), csr.indices.astype(np.int32),
            csr.data.astype(np.float64), csr)


def cg_solve(A, b, tol=1e-10, maxit=None, x0=None, kernels=None):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Returns ``(x, SolveStats)``. If ``maxit`` is exhausted the best iterate is
    returned with ``converged=False``. Raises :class:`SolverBreakdown` when
    the iteration detects indefiniteness or non-finite values.
    """
    kernels = kernels or _backend.kernels
    indptr, indices, data, csr = _csr_arrays(A)
    b = np.ascontiguousarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side is not finite")
    n = len(b)
    maxit = 10 * n + 10 if maxit is None else int(maxit)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    t0 = time.perf_counter()
    total = 0
    residual = 0.0
    # the recurrence residual drifts from the true one; restart until the
    # recomputed residual meets the tolerance
    for _ in range(5):
        it, status = kernels.pcg(indptr, indices, data, b, x, tol, maxit - total)
        total += it
        if status == 2:
            raise SolverBreakdown(f"CG breakdown after {total} iterations")
        r = b - kernels.csr_matvec(indptr, indices, data, x)
        residual = float(np.linalg.norm(r) / bnorm) if bnorm > 0 else float(np.linalg.norm(r))
        if residual <= tol or total >= maxit:
            break
    return x, SolveStats(total, residual, time.perf_counter() - t0, residual <= tol)


@dataclass(frozen=True)
class NullityResult:
    nullity: int
    smallest_pivot: float
    null_vectors: np.ndarray = field(repr=False)   # (n, nullity), dense path only


def nullity_probe(A, tau_rel=1e-10, kernels=None):
    """Count pivots below ``tau_rel * max|diag A|`` in a diagonally pivoted LDL^T.

    Dense factorization up to 4000 unknowns, with null-space basis vectors;
    a sparse symmetric-mode LU beyond that, up to 20000.
    """
    kernels = kernels or _backend.kernels
    n = A.shape[0]
    if n > PROBE_LIMIT:
        raise ProbeSizeError(f"probe limited to {PROBE_LIMIT} unknowns, got {n}")
    if n > DENSE_PROBE_LIMIT:
        return _sparse_probe(A, tau_rel)
    dense = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
    a = np.ascontiguousarray(dense, dtype=float).copy()
    perm, d, rank, stop = kernels.ldlt_pivoted(a, tau_rel)
    rank = int(rank)
    null = np.zeros((n, n - rank))
    if rank < n:
        L11 = np.tril(a[:rank, :rank], -1) + np.eye(rank)
        L21 = a[rank:, :rank]
        # P A P^T = L D L^T; null vectors solve L11^T y = -L21^T
        top = -np.linalg.solve(L11.T, L21.T) if rank else np.zeros((0, n - rank))
        z = np.vstack([top, np.eye(n - rank)])
        null[perm] = z
        null /= np.linalg.norm(null, axis=0)
    return NullityResult(n - rank, float(stop), null)


def _sparse_probe(A, tau_rel):
    csc = sp.csc_matrix(A.csr if hasattr(A, "csr") else A)
    dmax = np.abs(csc.diagonal()).max()
    try:
        lu = splu(csc, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options=dict(SymmetricMode=True))
    except RuntimeError:
        # exactly singular pivot: at least one null direction
        return NullityResult(1, 0.0, np.zeros((csc.shape[0], 0)))
    piv = np.abs(lu.U.diagonal())
    return NullityResult(int((piv < tau_rel * dmax).sum()), float(piv.min()),
                         np.zeros((csc.shape[0], 0)))
