"""Pure numpy versions of the compiled kernels, same signatures and results."""
import numpy as np


def csr_matvec(indptr, indices, data, x):
    indptr = np.asarray(indptr)
    rows = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    return np.bincount(rows, weights=np.asarray(data) * np.asarray(x)[indices],
                       minlength=len(indptr) - 1)


def pcg(indptr, indices, data, b, x, tol, maxit):
    indptr = np.asarray(indptr)
    n = len(b)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    data = np.asarray(data)
    indices = np.asarray(indices)

    def mv(v):
        return np.bincount(rows, weights=data * v[indices], minlength=n)

    diag = np.ones(n)
    on_diag = (rows == indices) & (data != 0.0)
    diag[rows[on_diag]] = data[on_diag]
    dinv = 1.0 / diag
    b = np.asarray(b)
    bnorm = np.sqrt(b @ b)
    r = b - mv(x)
    z = dinv * r
    p = z.copy()
    rz = r @ z
    if bnorm == 0.0 or np.sqrt(r @ r) <= tol * bnorm:
        return 0, 0
    it = 0
    while it < maxit:
        q = mv(p)
        pap = p @ q
        if not (pap > 0.0) or not np.isfinite(pap):
            return it, 2
        alpha = rz / pap
        x += alpha * p
        r -= alpha * q
        z = dinv * r
        rz_new = r @ z
        rr = r @ r
        it += 1
        if not np.isfinite(rr):
            return it, 2
        if np.sqrt(rr) <= tol * bnorm:
            return it, 0
        p = z + (rz_new / rz) * p
        rz = rz_new
    return it, 1


def ldlt_pivoted(a, tau_rel):
    n = a.shape[0]
    perm = np.arange(n, dtype=np.int64)
    d = np.zeros(n)
    dmax0 = np.abs(np.diag(a)).max() if n else 0.0
    for k in range(n):
        diag = np.abs(np.diag(a)[k:])
        piv = k + int(np.argmax(diag))
        best = diag[piv - k]
        if best <= tau_rel * dmax0 or best == 0.0:
            return perm, d, k, float(best)
        if piv != k:
            a[[k, piv], :] = a[[piv, k], :]
            a[:, [k, piv]] = a[:, [piv, k]]
            perm[[k, piv]] = perm[[piv, k]]
        dk = a[k, k]
        d[k] = dk
        a[k + 1:, k] /= dk
        col = a[k + 1:, k]
        a[k + 1:, k + 1:] -= dk * np.outer(col, col)
    return perm, d, n, float(abs(d[n - 1])) if n else 0.0
