"""Recovery certificates for GARD on concrete instances.

Brute-force the subspace-separation constant ``delta_s`` (cosine of the
smallest principal angle between ``span(Q)`` and every coordinate subspace of
dimension at most ``s``) and the restricted-isometry constant ``mu_s`` of
``[Q I_S]``, then compare them against the outlier-dependent thresholds under
which GARD provably recovers the outlier support.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from ._backend import kernels
from ._errors import BudgetExceededError

__all__ = ["BudgetExceededError", "TheoryReport", "DEFAULT_MAX_N",
           "DEFAULT_MAX_S", "delta_subset", "delta_s_bruteforce",
           "delta_s_upto", "rip_constant", "bound_noiseless", "bound_noisy",
           "error_bound", "error_bounds", "certify", "NOISY_FACTOR"]

DEFAULT_MAX_N = 40
DEFAULT_MAX_S = 5
ORTHONORMAL_TOL = 1e-8
NOISY_FACTOR = 2.0 + math.sqrt(6.0)


def _check_orthonormal(q):
    q = linalg.as_matrix(q, "q")
    dev = np.max(np.abs(q.T @ q - np.eye(q.shape[1])))
    if dev > ORTHONORMAL_TOL:
        raise ValueError(f"q is not orthonormal (max |Q^T Q - I| = {dev:.2e})")
    return q


def _check_budget(n, s, max_n, max_s):
    if s < 1:
        raise ValueError("s must be at least 1")
    if s > n:
        raise ValueError(f"s={s} exceeds n={n}")
    if n > max_n or s > max_s:
        count = sum(math.comb(n, k) for k in range(1, s + 1))
        raise BudgetExceededError(
            f"n={n}, s={s} outside budget (n<={max_n}, s<={max_s}); "
            f"{count} subsets would be enumerated", combinations=count)


def delta_subset(q, s_set):
    """``delta_S``: largest singular value of the rows of ``q`` indexed by ``s_set``."""
    q = _check_orthonormal(q)
    idx = sorted(set(int(i) for i in s_set))
    if not idx:
        raise ValueError("index set is empty")
    if idx[0] < 0 or idx[-1] >= q.shape[0]:
        raise IndexError("index outside 0..n-1")
    return min(1.0, float(linalg.singular_values(q[idx])[0]))


def delta_s_bruteforce(q, s, max_n=DEFAULT_MAX_N, max_s=DEFAULT_MAX_S):
    """``delta_s`` by enumerating every index set of size exactly ``s``.

    Sets of size below ``s`` never give a larger value (they are nested in a
    size-``s`` set), see :func:`delta_s_upto`.
    """
    q = _check_orthonormal(q)
    _check_budget(q.shape[0], s, max_n, max_s)
    top = kernels.subset_max_eig(q @ q.T, s)
    return math.sqrt(min(1.0, max(0.0, top)))


def delta_s_upto(q, s, max_n=DEFAULT_MAX_N, max_s=DEFAULT_MAX_S):
    """``delta_s`` as the maximum over all index-set sizes ``1..s``."""
    q = _check_orthonormal(q)
    _check_budget(q.shape[0], s, max_n, max_s)
    p = q @ q.T
    top = max(kernels.subset_max_eig(p, k) for k in range(1, s + 1))
    return math.sqrt(min(1.0, max(0.0, top)))


def rip_constant(q, s, max_n=DEFAULT_MAX_N, max_s=DEFAULT_MAX_S):
    """Smallest ``mu`` with ``(1-mu)|a|^2 <= |[Q I_S] a|^2 <= (1+mu)|a|^2`` for all ``|S| <= s``.

    Computed from the extreme eigenvalues of each Gram matrix of ``[Q I_S]``.
    """
    q = _check_orthonormal(q)
    _check_budget(q.shape[0], s, max_n, max_s)
    return max(kernels.subset_rip(q, k) for k in range(1, s + 1))


def _outlier_values(u0):
    vals = np.abs(np.asarray(u0.values if hasattr(u0, "values") else u0, dtype=np.float64))
    vals = vals[vals > 0]
    if vals.size == 0:
        raise ValueError("outlier vector has no nonzero entries")
    return vals


def bound_noiseless(u0):
    """``sqrt(min|u_i| / (2 |u0|_2))``; at most ``sqrt(2)/2``."""
    vals = _outlier_values(u0)
    return math.sqrt(vals.min() / (2.0 * float(np.linalg.norm(vals))))


def bound_noisy(u0, epsilon0):
    """``sqrt((min|u_i| - (2+sqrt 6) eps0) / (2 |u0|_2))``, or None when the numerator is <= 0."""
    if epsilon0 < 0:
        raise ValueError("epsilon0 must be non-negative")
    vals = _outlier_values(u0)
    num = vals.min() - NOISY_FACTOR * epsilon0
    if num <= 0:
        return None
    return math.sqrt(num / (2.0 * float(np.linalg.norm(vals))))


def error_bound(epsilon0, tau, value):
    """``eps0 / (tau sqrt(1 - value))`` for ``value`` in [0, 1)."""
    if epsilon0 < 0 or not tau > 0 or not 0.0 <= value < 1.0:
        raise ValueError("need epsilon0 >= 0, tau > 0 and value in [0, 1)")
    return epsilon0 / (tau * math.sqrt(1.0 - value))


def error_bounds(epsilon0, tau, delta_s, c=None):
    """``(tight, loose)`` error bounds on ``|theta* - theta0|_2``.

    ``tight`` uses ``delta_s`` itself, ``loose`` the computable threshold ``c``
    (``None`` when ``c`` is unavailable).
    """
    tight = error_bound(epsilon0, tau, delta_s)
    loose = None if c is None else error_bound(epsilon0, tau, c)
    return tight, loose


@dataclass(frozen=True)
class TheoryReport:
    s: int
    delta_s: float
    omega_s_degrees: float
    mu_s: float
    bound_noiseless_c: float
    bound_noisy_c: float | None
    tau: float
    sigma_min_lower: float
    error_bound_tight: float | None
    error_bound_loose: float | None
    noiseless_guarantee: bool
    noisy_guarantee: bool | None
    d: int
    epsilon0: float

    def as_row(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def certify(problem, truth, s=None, max_n=DEFAULT_MAX_N, max_s=DEFAULT_MAX_S):
    """Evaluate the recovery conditions for ``problem`` with known outliers ``truth.u0``.

    ``s`` defaults to the number of outliers. The ``d = ceil(n/s)`` quantity is
    reported only.
    """
    u0 = truth.u0
    s = u0.nnz if s is None else int(s)
    if u0.nnz == 0:
        raise ValueError("certify needs at least one outlier")
    if s < u0.nnz:
        raise ValueError(f"s={s} is below the outlier count {u0.nnz}")
    n = problem.n
    _check_budget(n, s, max_n, max_s)
    q = linalg.qr_reduced(problem.x).q
    delta = delta_s_bruteforce(q, s, max_n, max_s)
    mu = rip_constant(q, s, max_n, max_s)
    tau = float(linalg.singular_values(problem.x)[-1])
    eps0 = problem.epsilon0
    c0 = bound_noiseless(u0)
    c1 = bound_noisy(u0, eps0)
    tight = error_bound(eps0, tau, delta) if delta < 1.0 else None
    loose = error_bound(eps0, tau, c1) if c1 is not None else None
    return TheoryReport(
        s=s,
        delta_s=delta,
        omega_s_degrees=math.degrees(math.acos(min(1.0, delta))),
        mu_s=mu,
        bound_noiseless_c=c0,
        bound_noisy_c=c1,
        tau=tau,
        sigma_min_lower=math.sqrt(max(0.0, 1.0 - delta)),
        error_bound_tight=tight,
        error_bound_loose=loose,
        noiseless_guarantee=bool(delta < c0),
        noisy_guarantee=None if c1 is None else bool(delta < c1),
        d=math.ceil(n / s),
        epsilon0=eps0,
    )
