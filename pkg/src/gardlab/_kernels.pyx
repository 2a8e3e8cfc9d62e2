# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Same contract as ``_fallback``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign

from ._errors import (DegenerateAppendError, NotPositiveDefiniteError,
                      RankDeficientError)

cnp.import_array()

BACKEND = "cython"


def householder_qr(x, double rank_tol):
    cdef double[:, ::1] a = np.array(x, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1]
    cdef double[:, ::1] vs = np.zeros((m, n))
    cdef double[:, ::1] q = np.zeros((n, m))
    cdef Py_ssize_t i, j, k
    cdef double alpha, vnorm, dot, scale = 0.0, s
    for j in range(m):
        s = 0.0
        for i in range(n):
            s += a[i, j] * a[i, j]
        if s > scale:
            scale = s
    scale = sqrt(scale)
    if scale == 0.0:
        raise RankDeficientError("zero matrix")
    for k in range(m):
        alpha = 0.0
        for i in range(k, n):
            alpha += a[i, k] * a[i, k]
        alpha = sqrt(alpha)
        if alpha <= rank_tol * scale:
            raise RankDeficientError(
                f"pivot {alpha:.3e} at column {k} below tolerance")
        for i in range(k, n):
            vs[k, i] = a[i, k]
        vs[k, k] += alpha if vs[k, k] >= 0.0 else -alpha
        vnorm = 0.0
        for i in range(k, n):
            vnorm += vs[k, i] * vs[k, i]
        vnorm = sqrt(vnorm)
        for i in range(k, n):
            vs[k, i] /= vnorm
        for j in range(k, m):
            dot = 0.0
            for i in range(k, n):
                dot += vs[k, i] * a[i, j]
            dot *= 2.0
            for i in range(k, n):
                a[i, j] -= dot * vs[k, i]
    for i in range(m):
        q[i, i] = 1.0
    for k in range(m - 1, -1, -1):
        for j in range(m):
            dot = 0.0
            for i in range(k, n):
                dot += vs[k, i] * q[i, j]
            dot *= 2.0
            for i in range(k, n):
                q[i, j] -= dot * vs[k, i]
    r = np.zeros((m, m))
    cdef double[:, ::1] rv = r
    for i in range(m):
        for j in range(i, m):
            rv[i, j] = a[i, j]
    for k in range(m):
        if rv[k, k] < 0.0:
            for j in range(k, m):
                rv[k, j] = -rv[k, j]
            for i in range(n):
                q[i, k] = -q[i, k]
    return np.asarray(q), r


cdef int _cholesky_into(const double[:, ::1] g, double[:, ::1] low, Py_ssize_t k) nogil:
    cdef Py_ssize_t i, j, p
    cdef double piv, s
    for j in range(k):
        piv = g[j, j]
        for p in range(j):
            piv -= low[j, p] * low[j, p]
        if not piv > 0.0:
            return <int>j
        piv = sqrt(piv)
        low[j, j] = piv
        for i in range(j + 1, k):
            s = g[i, j]
            for p in range(j):
                s -= low[i, p] * low[j, p]
            low[i, j] = s / piv
    return -1


def cholesky(g):
    cdef const double[:, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t k = gv.shape[0]
    low = np.zeros((k, k))
    cdef int bad = _cholesky_into(gv, low, k)
    if bad >= 0:
        raise NotPositiveDefiniteError(f"non-positive pivot at row {bad}")
    return low


cdef void _forward(const double[:, ::1] low, double[::1] b, Py_ssize_t k) nogil:
    cdef Py_ssize_t i, p
    cdef double s
    for i in range(k):
        s = b[i]
        for p in range(i):
            s -= low[i, p] * b[p]
        b[i] = s / low[i, i]


cdef void _backward(const double[:, ::1] low, double[::1] b, Py_ssize_t k) nogil:
    cdef Py_ssize_t i, p
    cdef double s
    for i in range(k - 1, -1, -1):
        s = b[i]
        for p in range(i + 1, k):
            s -= low[p, i] * b[p]
        b[i] = s / low[i, i]


def forward_sub(low, b):
    cdef const double[:, ::1] lv = np.ascontiguousarray(low, dtype=np.float64)
    out = np.array(b, dtype=np.float64, copy=True)
    _forward(lv, out, lv.shape[0])
    return out


def backward_sub(low, b):
    """Solve ``low.T @ x = b``."""
    cdef const double[:, ::1] lv = np.ascontiguousarray(low, dtype=np.float64)
    out = np.array(b, dtype=np.float64, copy=True)
    _backward(lv, out, lv.shape[0])
    return out


def chol_append(low, row, double tol):
    cdef const double[:, ::1] lv = np.ascontiguousarray(low, dtype=np.float64)
    cdef Py_ssize_t k = lv.shape[0], i, j
    cdef double[::1] v = np.array(row, dtype=np.float64, copy=True)
    _forward(lv, v, k)
    cdef double b2 = 1.0
    for i in range(k):
        b2 -= v[i] * v[i]
    if not b2 > tol:
        raise DegenerateAppendError(f"1 - |v|^2 = {b2:.3e}")
    out = np.zeros((k + 1, k + 1))
    cdef double[:, ::1] ov = out
    for i in range(k):
        for j in range(i + 1):
            ov[i, j] = lv[i, j]
        ov[k, i] = v[i]
    ov[k, k] = sqrt(b2)
    return out


def singular_values(a, double tol=1e-15, int max_sweeps=60):
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.shape[0] < arr.shape[1]:
        arr = arr.T
    # columns stored as rows for contiguous access
    cdef double[:, ::1] w = np.ascontiguousarray(arr.T)
    cdef Py_ssize_t cols = w.shape[0], rows = w.shape[1], p, q, i
    cdef double alpha, beta, gamma, zeta, t, c, s, wp, wq
    cdef int sweep, rotated
    for sweep in range(max_sweeps):
        rotated = 0
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(rows):
                    alpha += w[p, i] * w[p, i]
                    beta += w[q, i] * w[q, i]
                    gamma += w[p, i] * w[q, i]
                if gamma == 0.0 or fabs(gamma) <= tol * sqrt(alpha * beta):
                    continue
                rotated = 1
                zeta = (beta - alpha) / (2.0 * gamma)
                t = copysign(1.0, zeta) / (fabs(zeta) + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                for i in range(rows):
                    wp = w[p, i]
                    wq = w[q, i]
                    w[p, i] = c * wp - s * wq
                    w[q, i] = s * wp + c * wq
        if not rotated:
            break
    sv = np.sqrt(np.sum(np.square(np.asarray(w)), axis=1))
    return np.sort(sv)[::-1]


def gard_cholesky_path(x, y, double threshold, Py_ssize_t max_k, double tol):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], m = xv.shape[1]
    cdef Py_ssize_t cap = m + max_k, i, j, p, k = 0, best
    cdef double[:, ::1] low = np.zeros((cap, cap))
    cdef double[::1] rhs = np.zeros(cap)
    cdef double[::1] z = np.zeros(cap)
    cdef double[::1] r = np.zeros(n)
    cdef double[::1] v = np.zeros(cap)
    cdef Py_ssize_t[::1] support = np.zeros(max_k, dtype=np.intp)
    cdef char[::1] active = np.zeros(n, dtype=np.int8)
    cdef double s, norm, b2, mag, top
    gram = np.asarray(xv).T @ np.asarray(xv)
    if _cholesky_into(gram, low, m) >= 0:
        raise NotPositiveDefiniteError("Gram matrix of X is not positive definite")
    for j in range(m):
        s = 0.0
        for i in range(n):
            s += xv[i, j] * yv[i]
        rhs[j] = s
    trace = []
    with nogil:
        for j in range(m):
            z[j] = rhs[j]
        _forward(low, z, m)
        _backward(low, z, m)
        norm = 0.0
        for i in range(n):
            s = yv[i]
            for j in range(m):
                s -= xv[i, j] * z[j]
            r[i] = s
            norm += s * s
        norm = sqrt(norm)
    trace.append(norm)
    while norm > threshold and k < max_k:
        with nogil:
            best = -1
            top = -1.0
            for i in range(n):
                if active[i]:
                    continue
                mag = fabs(r[i])
                if mag > top:
                    top = mag
                    best = i
            p = m + k
            for j in range(m):
                v[j] = xv[best, j]
            for j in range(m, p):
                v[j] = 0.0
            _forward(low, v, p)
            b2 = 1.0
            for j in range(p):
                b2 -= v[j] * v[j]
        if not b2 > tol:
            raise DegenerateAppendError(f"1 - |v|^2 = {b2:.3e}")
        with nogil:
            for j in range(p):
                low[p, j] = v[j]
            low[p, p] = sqrt(b2)
            support[k] = best
            active[best] = 1
            rhs[p] = yv[best]
            k += 1
            p += 1
            for j in range(p):
                z[j] = rhs[j]
            _forward(low, z, p)
            _backward(low, z, p)
            norm = 0.0
            for i in range(n):
                s = yv[i]
                for j in range(m):
                    s -= xv[i, j] * z[j]
                r[i] = s
            for j in range(k):
                r[support[j]] -= z[m + j]
            for i in range(n):
                norm += r[i] * r[i]
            norm = sqrt(norm)
        trace.append(norm)
    return (np.array(z[:m + k]), np.array(support[:k]), np.asarray(trace))


cdef void _jacobi_eig(double[:, ::1] a, Py_ssize_t k, double* lo, double* hi) nogil:
    """Cyclic Jacobi on the leading k x k block (destroyed). Extremal eigenvalues."""
    cdef Py_ssize_t p, q, i, sweep
    cdef double off, theta, t, c, s, app, aqq, apq, aip, aiq
    for sweep in range(50):
        off = 0.0
        for p in range(k):
            for q in range(p + 1, k):
                off += a[p, q] * a[p, q]
        if off < 1e-30:
            break
        for p in range(k):
            for q in range(p + 1, k):
                apq = a[p, q]
                if fabs(apq) < 1e-300:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for i in range(k):
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - s * aiq
                    a[i, q] = s * aip + c * aiq
                for i in range(k):
                    aip = a[p, i]
                    aiq = a[q, i]
                    a[p, i] = c * aip - s * aiq
                    a[q, i] = s * aip + c * aiq
    lo[0] = a[0, 0]
    hi[0] = a[0, 0]
    for i in range(1, k):
        if a[i, i] < lo[0]:
            lo[0] = a[i, i]
        if a[i, i] > hi[0]:
            hi[0] = a[i, i]


cdef bint _next_combination(Py_ssize_t[::1] idx, Py_ssize_t k, Py_ssize_t n) nogil:
    cdef Py_ssize_t i = k - 1, j
    while i >= 0 and idx[i] == n - k + i:
        i -= 1
    if i < 0:
        return 0
    idx[i] += 1
    for j in range(i + 1, k):
        idx[j] = idx[j - 1] + 1
    return 1


def subset_max_eig(p, Py_ssize_t k):
    """Max over size-k index sets of the top eigenvalue of ``p[S, S]``."""
    cdef const double[:, ::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t n = pv.shape[0], i, j
    cdef Py_ssize_t[::1] idx = np.arange(k, dtype=np.intp)
    cdef double[:, ::1] work = np.zeros((k, k))
    cdef double lo, hi, best = 0.0
    with nogil:
        while True:
            for i in range(k):
                for j in range(k):
                    work[i, j] = pv[idx[i], idx[j]]
            _jacobi_eig(work, k, &lo, &hi)
            if hi > best:
                best = hi
            if not _next_combination(idx, k, n):
                break
    return best


def subset_rip(q, Py_ssize_t k):
    """Max over size-k sets S of the isometry defect of ``[q I_S]``."""
    cdef const double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = qv.shape[0], m = qv.shape[1], d = m + k, i, j
    cdef double[:, ::1] qtq = np.ascontiguousarray(np.asarray(qv).T @ np.asarray(qv))
    cdef Py_ssize_t[::1] idx = np.arange(k, dtype=np.intp)
    cdef double[:, ::1] work = np.zeros((d, d))
    cdef double lo, hi, best = 0.0
    with nogil:
        while True:
            for i in range(d):
                for j in range(d):
                    work[i, j] = 0.0
            for i in range(m):
                for j in range(m):
                    work[i, j] = qtq[i, j]
            for i in range(k):
                work[m + i, m + i] = 1.0
                for j in range(m):
                    work[m + i, j] = qv[idx[i], j]
                    work[j, m + i] = qv[idx[i], j]
            _jacobi_eig(work, d, &lo, &hi)
            if 1.0 - lo > best:
                best = 1.0 - lo
            if hi - 1.0 > best:
                best = hi - 1.0
            if not _next_combination(idx, k, n):
                break
    return best
