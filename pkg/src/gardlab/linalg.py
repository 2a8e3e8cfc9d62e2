"""Dense linear algebra primitives.

Householder QR, Cholesky with single-column append, triangular least-squares
solves and Jacobi singular values. Matrices are plain 2-D ``float64`` numpy
arrays; factor objects hold read-only copies.
"""
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._errors import (DegenerateAppendError, LinAlgError,
                      NotPositiveDefiniteError, RankDeficientError)

__all__ = [
    "TOLERANCES", "QrFactors", "CholFactor", "LinAlgError",
    "RankDeficientError", "NotPositiveDefiniteError", "DegenerateAppendError",
    "as_matrix", "qr_reduced", "cholesky", "chol_append", "solve_ls",
    "singular_values",
]

# Module-level defaults; every function also accepts an explicit override.
TOLERANCES = {
    "rank": 1e-10,       # relative Householder pivot
    "symmetry": 1e-12,   # relative asymmetry allowed in cholesky()
    "append": 1e-12,     # minimum 1 - |v|^2 in chol_append()
    "jacobi": 1e-15,     # one-sided Jacobi rotation threshold
}


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(x, name="matrix"):
    """Validate and return ``x`` as a finite 2-D float64 array."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class QrFactors:
    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "r", _frozen(self.r))


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular ``l`` with ``l @ l.T`` equal to a Gram matrix."""

    l: np.ndarray  # noqa: E741

    def __post_init__(self):
        object.__setattr__(self, "l", _frozen(self.l))

    @property
    def size(self):
        return self.l.shape[0]


def qr_reduced(x, rank_tol=None):
    """Reduced Householder QR with a positive diagonal on ``R``.

    Raises :class:`RankDeficientError` when a pivot falls below
    ``rank_tol`` times the largest column norm.
    """
    a = as_matrix(x, "x")
    if a.shape[0] < a.shape[1]:
        raise ValueError(f"qr_reduced needs rows >= cols, got {a.shape}")
    tol = TOLERANCES["rank"] if rank_tol is None else rank_tol
    q, r = kernels.householder_qr(a, tol)
    return QrFactors(q, r)


def cholesky(g, sym_tol=None):
    g = as_matrix(g, "g")
    if g.shape[0] != g.shape[1]:
        raise ValueError("cholesky needs a square matrix")
    tol = TOLERANCES["symmetry"] if sym_tol is None else sym_tol
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.max(np.abs(g - g.T)) > tol * scale:
        raise NotPositiveDefiniteError("matrix is not symmetric")
    return CholFactor(kernels.cholesky(g))


def chol_append(factor, a_ac, new_col, tol=None):
    """Extend the factor of ``a_ac.T @ a_ac`` by the standard-basis column ``e_new_col``.

    Costs one forward substitution; the new last row is ``(v, b)`` with
    ``L v = a_ac.T e_j`` and ``b = sqrt(1 - |v|^2)``.
    """
    a = as_matrix(a_ac, "a_ac")
    n, k = a.shape
    if factor.size != k:
        raise ValueError(f"factor has size {factor.size}, a_ac has {k} columns")
    if not 0 <= new_col < n:
        raise IndexError(f"column index {new_col} outside 0..{n - 1}")
    tol = TOLERANCES["append"] if tol is None else tol
    return CholFactor(kernels.chol_append(factor.l, a[new_col], tol))


def solve_ls(factor, a, y):
    """Least-squares solution of ``a z ~ y`` given the Cholesky factor of ``a.T a``."""
    a = as_matrix(a, "a")
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != a.shape[0]:
        raise ValueError(f"y has shape {y.shape}, expected ({a.shape[0]},)")
    if factor.size != a.shape[1]:
        raise ValueError(f"factor has size {factor.size}, a has {a.shape[1]} columns")
    p = kernels.forward_sub(factor.l, a.T @ y)
    return kernels.backward_sub(factor.l, p)


def singular_values(m, tol=None):
    """Singular values of ``m`` in descending order (one-sided Jacobi)."""
    a = as_matrix(m, "m")
    tol = TOLERANCES["jacobi"] if tol is None else tol
    return kernels.singular_values(a, tol)
