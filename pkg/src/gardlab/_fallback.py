"""Pure-Python (numpy) kernels.

Mirrors ``_kernels.pyx`` function for function. Used when the compiled
extension is unavailable or ``GARDLAB_PURE=1`` is set.
"""
from itertools import combinations, islice

import numpy as np

from ._errors import (DegenerateAppendError, NotPositiveDefiniteError,
                      RankDeficientError)

BACKEND = "python"

_CHUNK = 20000


def householder_qr(x, rank_tol):
    a = np.array(x, dtype=np.float64, copy=True)
    n, m = a.shape
    scale = float(np.max(np.linalg.norm(a, axis=0))) if m else 0.0
    if scale == 0.0:
        raise RankDeficientError("zero matrix")
    vs = []
    for k in range(m):
        col = a[k:, k]
        alpha = float(np.sqrt(col @ col))
        if alpha <= rank_tol * scale:
            raise RankDeficientError(
                f"pivot {alpha:.3e} at column {k} below tolerance")
        v = col.copy()
        v[0] += alpha if v[0] >= 0.0 else -alpha
        v /= np.sqrt(v @ v)
        a[k:, k:] -= 2.0 * np.outer(v, v @ a[k:, k:])
        vs.append(v)
    r = np.triu(a[:m, :m])
    q = np.zeros((n, m))
    q[:m, :m] = np.eye(m)
    for k in range(m - 1, -1, -1):
        v = vs[k]
        q[k:, :] -= 2.0 * np.outer(v, v @ q[k:, :])
    d = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return q * d, r * d[:, None]


def cholesky(g):
    g = np.asarray(g, dtype=np.float64)
    k = g.shape[0]
    low = np.zeros((k, k))
    for j in range(k):
        piv = g[j, j] - low[j, :j] @ low[j, :j]
        if not piv > 0.0:
            raise NotPositiveDefiniteError(f"pivot {piv:.3e} at row {j}")
        d = np.sqrt(piv)
        low[j, j] = d
        if j + 1 < k:
            low[j + 1:, j] = (g[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / d
    return low


def forward_sub(low, b):
    k = low.shape[0]
    out = np.array(b, dtype=np.float64, copy=True)
    for i in range(k):
        out[i] = (out[i] - low[i, :i] @ out[:i]) / low[i, i]
    return out


def backward_sub(low, b):
    """Solve ``low.T @ x = b``."""
    k = low.shape[0]
    out = np.array(b, dtype=np.float64, copy=True)
    for i in range(k - 1, -1, -1):
        out[i] = (out[i] - low[i + 1:, i] @ out[i + 1:]) / low[i, i]
    return out


def chol_append(low, row, tol):
    k = low.shape[0]
    v = forward_sub(low, row)
    b2 = 1.0 - v @ v
    if not b2 > tol:
        raise DegenerateAppendError(f"1 - |v|^2 = {b2:.3e}")
    out = np.zeros((k + 1, k + 1))
    out[:k, :k] = low
    out[k, :k] = v
    out[k, k] = np.sqrt(b2)
    return out


def singular_values(a, tol=1e-15, max_sweeps=60):
    a = np.array(a, dtype=np.float64, copy=True)
    if a.shape[0] < a.shape[1]:
        a = a.T.copy()
    cols = a.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                ap, aq = a[:, p], a[:, q]
                alpha = ap @ ap
                beta = aq @ aq
                gamma = ap @ aq
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                new_p = c * ap - s * aq
                new_q = s * ap + c * aq
                a[:, p] = new_p
                a[:, q] = new_q
        if not rotated:
            break
    return np.sort(np.linalg.norm(a, axis=0))[::-1]


def gard_cholesky_path(x, y, threshold, max_k, tol):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, m = x.shape
    low = cholesky(x.T @ x)
    rhs = list(x.T @ y)
    z = backward_sub(low, forward_sub(low, rhs))
    r = y - x @ z
    trace = [float(np.sqrt(r @ r))]
    support = []
    active = np.zeros(n, dtype=bool)
    while trace[-1] > threshold and len(support) < max_k:
        mag = np.abs(r)
        mag[active] = -1.0
        j = int(np.argmax(mag))
        row = np.zeros(m + len(support))
        row[:m] = x[j]
        low = chol_append(low, row, tol)
        support.append(j)
        active[j] = True
        rhs.append(y[j])
        z = backward_sub(low, forward_sub(low, np.asarray(rhs)))
        r = y - x @ z[:m]
        r[support] -= z[m:]
        trace.append(float(np.sqrt(r @ r)))
    return z, np.asarray(support, dtype=np.intp), np.asarray(trace)


def _subset_chunks(n, k):
    it = combinations(range(n), k)
    while True:
        block = list(islice(it, _CHUNK))
        if not block:
            return
        yield np.asarray(block, dtype=np.intp)


def subset_max_eig(p, k):
    """Max over size-k index sets of the top eigenvalue of ``p[S, S]``."""
    p = np.asarray(p, dtype=np.float64)
    best = 0.0
    for idx in _subset_chunks(p.shape[0], k):
        blocks = p[idx[:, :, None], idx[:, None, :]]
        best = max(best, float(np.linalg.eigvalsh(blocks)[:, -1].max()))
    return best


def subset_rip(q, k):
    """Max over size-k sets S of the isometry defect of ``[q I_S]``."""
    q = np.asarray(q, dtype=np.float64)
    n, m = q.shape
    best = 0.0
    for idx in _subset_chunks(n, k):
        c = idx.shape[0]
        gram = np.zeros((c, m + k, m + k))
        gram[:, :m, :m] = q.T @ q
        qs = q[idx]
        gram[:, m:, :m] = qs
        gram[:, :m, m:] = np.transpose(qs, (0, 2, 1))
        gram[:, m:, m:] = np.eye(k)
        ev = np.linalg.eigvalsh(gram)
        best = max(best, float(np.max(np.maximum(1.0 - ev[:, 0], ev[:, -1] - 1.0))))
    return best
