"""Greedy Algorithm for Robust Denoising (GARD).

The observations are modelled as ``y = X theta + u + eta`` with ``u`` sparse
(outliers) and ``|eta|_2 <= epsilon0``. GARD starts from the least-squares fit
on ``X`` and repeatedly moves the observation with the largest absolute
residual into the model as an extra standard-basis column, refitting by least
squares, until the residual norm drops to ``epsilon0``.

Two engines compute the same iterates:

``"cholesky"``
    grows a Cholesky factor of the active Gram matrix by one row per
    iteration (compiled kernel when available);
``"naive"``
    refactorizes ``[X I_S]`` with a fresh QR at every step.
"""
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from ._backend import kernels
from ._errors import NotPositiveDefiniteError, RankDeficientError

__all__ = ["RegressionProblem", "SparseVector", "GardResult", "gard_solve",
           "select_outlier_index", "ENGINES", "ZERO_RESIDUAL_TOL"]

ENGINES = ("cholesky", "naive")

# Stopping threshold used when epsilon0 == 0.
ZERO_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SparseVector:
    """Length-``length`` vector stored as sorted (index, value) pairs.

    Indices are 0-based.
    """

    length: int
    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp).ravel()
        val = np.asarray(self.values, dtype=np.float64).ravel()
        if idx.shape != val.shape:
            raise ValueError("indices and values differ in length")
        order = np.argsort(idx, kind="stable")
        idx, val = idx[order], val[order]
        if idx.size and (idx[0] < 0 or idx[-1] >= self.length):
            raise ValueError(f"index out of range 0..{self.length - 1}")
        if np.any(np.diff(idx) == 0):
            raise ValueError("duplicate indices")
        if np.any(val == 0.0):
            raise ValueError("stored values must be nonzero")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, dense, drop_below=0.0):
        dense = np.asarray(dense, dtype=np.float64)
        keep = np.flatnonzero(np.abs(dense) > drop_below)
        return cls(dense.shape[0], keep, dense[keep])

    def to_dense(self):
        out = np.zeros(self.length)
        out[self.indices] = self.values
        return out

    @property
    def support(self):
        return frozenset(int(i) for i in self.indices)

    @property
    def nnz(self):
        return int(self.indices.size)

    def __len__(self):
        return self.length


@dataclass(frozen=True)
class RegressionProblem:
    x: np.ndarray
    y: np.ndarray
    epsilon0: float = 0.0

    def __post_init__(self):
        x = linalg.as_matrix(self.x, "x")
        y = np.asarray(self.y, dtype=np.float64)
        n, m = x.shape
        if n <= m:
            raise ValueError(f"need more observations than unknowns, got n={n}, m={m}")
        if y.shape != (n,):
            raise ValueError(f"y has shape {y.shape}, expected ({n},)")
        if not np.all(np.isfinite(y)):
            raise ValueError("y has non-finite entries")
        if not self.epsilon0 >= 0.0:
            raise ValueError("epsilon0 must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "epsilon0", float(self.epsilon0))

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def m(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class GardResult:
    theta_star: np.ndarray
    u_star: SparseVector
    support: tuple          # outlier indices in selection order
    residual_trace: tuple   # entry 0 is the plain least-squares residual
    iterations: int
    engine: str
    cap_reached: bool = False

    @property
    def residual_norm(self):
        return self.residual_trace[-1]


def select_outlier_index(residual, inactive):
    """Inactive index with the largest ``|residual|``; ties go to the smallest index."""
    r = np.asarray(residual, dtype=np.float64)
    cand = np.array(sorted(inactive), dtype=np.intp)
    if cand.size == 0:
        raise ValueError("no inactive indices to select from")
    return int(cand[np.argmax(np.abs(r[cand]))])


def _stop_level(epsilon0):
    return epsilon0 if epsilon0 > 0.0 else ZERO_RESIDUAL_TOL


def _solve_naive(x, y, threshold, max_k):
    n, m = x.shape
    support = []
    a = x
    while True:
        f = linalg.qr_reduced(a)
        z = _back_upper(f.r, f.q.T @ y)
        r = y - a @ z
        norm = float(np.sqrt(r @ r))
        if not support:
            trace = [norm]
        else:
            trace.append(norm)
        if norm <= threshold or len(support) >= max_k:
            return z, support, trace
        inactive = set(range(n)).difference(support)
        j = select_outlier_index(r, inactive)
        support.append(j)
        col = np.zeros((n, 1))
        col[j, 0] = 1.0
        a = np.hstack([a, col])


def _back_upper(r, b):
    # upper-triangular solve; R from Householder QR is well conditioned here
    return kernels.backward_sub(np.ascontiguousarray(r.T), b)


def gard_solve(problem, engine="cholesky", max_outliers=None):
    """Run GARD on ``problem``.

    Parameters
    ----------
    problem : RegressionProblem
    engine : {"cholesky", "naive"}
    max_outliers : int, optional
        Hard cap on selected outliers, at most ``n - m``. Defaults to
        ``n - m - 1``. Stopping on the cap sets ``cap_reached``.

    Returns
    -------
    GardResult
    """
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    x, y = problem.x, problem.y
    n, m = x.shape
    if max_outliers is None:
        max_outliers = n - m - 1
    if not 0 <= max_outliers <= n - m:
        raise ValueError(f"max_outliers must lie in 0..{n - m}")
    threshold = _stop_level(problem.epsilon0)

    if engine == "cholesky":
        try:
            z, support, trace = kernels.gard_cholesky_path(
                x, y, threshold, max_outliers, linalg.TOLERANCES["append"])
        except NotPositiveDefiniteError as exc:
            raise RankDeficientError("X is not of full column rank") from exc
        support = [int(j) for j in support]
        trace = [float(t) for t in trace]
    else:
        z, support, trace = _solve_naive(x, y, threshold, max_outliers)

    k = len(support)
    u = SparseVector(n, np.asarray(support, dtype=np.intp), z[m:m + k]) if k else SparseVector(n)
    return GardResult(
        theta_star=np.array(z[:m]),
        u_star=u,
        support=tuple(support),
        residual_trace=tuple(trace),
        iterations=k,
        engine=engine,
        cap_reached=bool(k == max_outliers and trace[-1] > threshold),
    )
