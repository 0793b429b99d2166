# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Jacobi-preconditioned CG on CSR and pivoted dense LDL^T."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite

cnp.import_array()


cdef inline void _csr_mv(const long[:] indptr, const int[:] indices, const double[:] data,
                         const double[:] x, double[:] y, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, p
    cdef double s
    for i in range(n):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * x[indices[p]]
        y[i] = s


def csr_matvec(const long[:] indptr, const int[:] indices, const double[:] data,
               const double[:] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out = np.empty(n)
    cdef double[:] y = out
    with nogil:
        _csr_mv(indptr, indices, data, x, y, n)
    return out


def pcg(const long[:] indptr, const int[:] indices, const double[:] data,
        const double[:] b, double[:] x, double tol, long maxit):
    """Run Jacobi-preconditioned CG in place on ``x``.

    Stops when the recurrence residual drops below ``tol * |b|``. Returns
    ``(iterations, status)`` with status 0 converged, 1 maxit, 2 breakdown.
    """
    cdef Py_ssize_t n = b.shape[0], i
    cdef long it = 0
    cdef int status = 1
    cdef double rz, rz_new, alpha, beta, pap, rr, bnorm = 0.0
    cdef double[:] r = np.empty(n)
    cdef double[:] z = np.empty(n)
    cdef double[:] p = np.empty(n)
    cdef double[:] q = np.empty(n)
    cdef double[:] dinv = np.empty(n)
    cdef Py_ssize_t k
    with nogil:
        for i in range(n):
            dinv[i] = 1.0
            for k in range(indptr[i], indptr[i + 1]):
                if indices[k] == i and data[k] != 0.0:
                    dinv[i] = 1.0 / data[k]
            bnorm += b[i] * b[i]
        bnorm = sqrt(bnorm)
        _csr_mv(indptr, indices, data, x, q, n)
        rz = 0.0
        rr = 0.0
        for i in range(n):
            r[i] = b[i] - q[i]
            z[i] = dinv[i] * r[i]
            p[i] = z[i]
            rz += r[i] * z[i]
            rr += r[i] * r[i]
        if bnorm == 0.0 or sqrt(rr) <= tol * bnorm:
            status = 0
        while status == 1 and it < maxit:
            _csr_mv(indptr, indices, data, p, q, n)
            pap = 0.0
            for i in range(n):
                pap += p[i] * q[i]
            if not (pap > 0.0) or not isfinite(pap):
                status = 2
                break
            alpha = rz / pap
            rz_new = 0.0
            rr = 0.0
            for i in range(n):
                x[i] += alpha * p[i]
                r[i] -= alpha * q[i]
                z[i] = dinv[i] * r[i]
                rz_new += r[i] * z[i]
                rr += r[i] * r[i]
            it += 1
            if not isfinite(rr):
                status = 2
                break
            if sqrt(rr) <= tol * bnorm:
                status = 0
                break
            beta = rz_new / rz
            rz = rz_new
            for i in range(n):
                p[i] = z[i] + beta * p[i]
    return it, status


def ldlt_pivoted(double[:, ::1] a, double tau_rel):
    """Symmetric LDL^T with diagonal (complete) pivoting, in place.

    Stops once the largest remaining diagonal magnitude falls below
    ``tau_rel`` times the largest initial diagonal. Returns ``(perm, d, rank,
    stop_pivot)``; on exit the strict lower triangle of the leading ``rank``
    columns holds ``L`` in permuted order.
    """
    cdef Py_ssize_t n = a.shape[0], i, j, k, piv
    cdef double dmax0 = 0.0, best, t, lik, dk
    perm_arr = np.arange(n, dtype=np.int64)
    d_arr = np.zeros(n)
    cdef long[:] perm = perm_arr
    cdef double[:] d = d_arr
    cdef Py_ssize_t rank = n
    cdef double stop_pivot = 0.0
    cdef long ti
    with nogil:
        for i in range(n):
            if fabs(a[i, i]) > dmax0:
                dmax0 = fabs(a[i, i])
        for k in range(n):
            piv = k
            best = fabs(a[k, k])
            for i in range(k + 1, n):
                if fabs(a[i, i]) > best:
                    best = fabs(a[i, i])
                    piv = i
            if best <= tau_rel * dmax0 or best == 0.0:
                rank = k
                stop_pivot = best
                break
            if piv != k:
                # symmetric swap of rows/cols k and piv (full storage)
                for j in range(n):
                    t = a[k, j]; a[k, j] = a[piv, j]; a[piv, j] = t
                for j in range(n):
                    t = a[j, k]; a[j, k] = a[j, piv]; a[j, piv] = t
                ti = perm[k]; perm[k] = perm[piv]; perm[piv] = ti
            dk = a[k, k]
            d[k] = dk
            for i in range(k + 1, n):
                a[i, k] = a[i, k] / dk
            for i in range(k + 1, n):
                lik = a[i, k] * dk
                for j in range(k + 1, i + 1):
                    a[i, j] -= lik * a[j, k]
                    a[j, i] = a[i, j]
        if rank == n:
            stop_pivot = fabs(d[n - 1]) if n > 0 else 0.0
    return perm_arr, d_arr, rank, stop_pivot
