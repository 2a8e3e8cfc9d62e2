"""Reference robust-regression estimators.

* Tukey-biweight M-estimator solved by IRLS (:func:`m_estimate`)
* Robust OMP over the columns of ``X`` (:func:`romp`)
* ADMM on ``1/2 |y - X theta - u|^2 + lam |u|_1`` (:func:`admm_lasso`)
"""
from dataclasses import dataclass

import numpy as np

from . import linalg
from .gard import SparseVector

__all__ = ["IrlsConfig", "AdmmConfig", "AdmmResult", "mad", "tukey_weight",
           "tukey_psi", "soft_threshold", "m_estimate", "romp", "admm_lasso",
           "lasso_objective", "MAD_NORMALIZER", "SCALE_FLOOR"]

MAD_NORMALIZER = 0.6745
SCALE_FLOOR = 1e-8
ADMM_DROP = 1e-6


@dataclass(frozen=True)
class IrlsConfig:
    tuning_c: float = 4.685
    max_iters: int = 100
    param_tol: float = 1e-6
    scale_mode: str = "mad_per_iter"   # or "fixed"
    fixed_scale: float | None = None

    def __post_init__(self):
        if not self.tuning_c > 0:
            raise ValueError("tuning_c must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.param_tol > 0:
            raise ValueError("param_tol must be positive")
        if self.scale_mode not in ("mad_per_iter", "fixed"):
            raise ValueError(f"unknown scale_mode {self.scale_mode!r}")
        if self.scale_mode == "fixed" and not (self.fixed_scale or 0) > 0:
            raise ValueError("fixed scale_mode needs a positive fixed_scale")


@dataclass(frozen=True)
class AdmmConfig:
    lam: float = 1.2
    rho0: float = 1e-4
    rho_growth: float = 1.1
    rho_cap: float = 5.0
    stop_tol: float = 1e-4
    max_iters: int = 20000

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not 0 < self.rho0 <= self.rho_cap:
            raise ValueError("need 0 < rho0 <= rho_cap")
        if self.rho_growth < 1:
            raise ValueError("rho_growth must be >= 1")
        if not self.stop_tol > 0 or self.max_iters < 1:
            raise ValueError("stop_tol must be positive and max_iters >= 1")


def mad(v):
    """Median absolute deviation (unnormalized)."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("mad of an empty vector")
    return float(np.median(np.abs(v - np.median(v))))


def tukey_weight(r, c=4.685):
    """Biweight ``(1 - (r/c)^2)^2`` inside ``|r| < c``, zero outside."""
    if not c > 0:
        raise ValueError("c must be positive")
    t = np.asarray(r, dtype=np.float64) / c
    w = np.where(np.abs(t) < 1.0, (1.0 - t * t) ** 2, 0.0)
    return float(w) if w.ndim == 0 else w


def tukey_psi(r, c=4.685):
    r = np.asarray(r, dtype=np.float64)
    return r * tukey_weight(r, c)


def soft_threshold(v, k):
    v = np.asarray(v, dtype=np.float64)
    out = np.sign(v) * np.maximum(np.abs(v) - k, 0.0)
    return float(out) if out.ndim == 0 else out


def _lstsq(x, y):
    f = linalg.cholesky(x.T @ x)
    return linalg.solve_ls(f, x, y)


def _scale(r, cfg):
    if cfg.scale_mode == "fixed":
        return cfg.fixed_scale
    return max(mad(r) / MAD_NORMALIZER, SCALE_FLOOR)


def _weighted_lstsq(x, y, w):
    if not np.any(w > 0):
        raise ValueError("all IRLS weights are zero")
    sw = np.sqrt(w)
    xw = x * sw[:, None]
    try:
        f = linalg.cholesky(xw.T @ xw)
    except linalg.NotPositiveDefiniteError as exc:
        raise linalg.RankDeficientError("weighted design lost full column rank") from exc
    return linalg.solve_ls(f, xw, y * sw)


def m_estimate(x, y, cfg=None):
    """Tukey-biweight M-estimate by iteratively reweighted least squares.

    Starts from ordinary least squares and re-estimates the residual scale
    (normalized MAD) at every iteration.

    Returns
    -------
    theta, weights, iterations
    """
    cfg = cfg or IrlsConfig()
    x = linalg.as_matrix(x, "x")
    y = np.asarray(y, dtype=np.float64)
    theta = _lstsq(x, y)
    w = np.ones(x.shape[0])
    for it in range(1, cfg.max_iters + 1):
        r = y - x @ theta
        w = tukey_weight(r / _scale(r, cfg), cfg.tuning_c)
        new = _weighted_lstsq(x, y, w)
        step = float(np.linalg.norm(new - theta))
        done = step <= cfg.param_tol * (1.0 + float(np.linalg.norm(theta)))
        theta = new
        if done:
            break
    return theta, w, it


def romp(x, y, epsilon0, cfg=None):
    """Robust orthogonal matching pursuit over the columns of ``x``.

    Each step picks the unselected column most correlated with the Tukey
    pseudo-residuals ``psi(r / MAD(r))`` (``MAD`` replaced by the fixed scale in
    fixed-scale mode) and refits the selected columns by
    :func:`m_estimate`. Stops when ``|r|_2 <= epsilon0``, when every column is
    selected, or when the pseudo-residuals vanish.

    Returns
    -------
    theta (length m, zeros on unselected columns), selected (tuple), iterations
    """
    cfg = cfg or IrlsConfig()
    x = linalg.as_matrix(x, "x")
    y = np.asarray(y, dtype=np.float64)
    n, m = x.shape
    theta = np.zeros(m)
    r = y.copy()
    selected = []
    while len(selected) < m and np.linalg.norm(r) > epsilon0:
        sigma = cfg.fixed_scale if cfg.scale_mode == "fixed" else max(mad(r), SCALE_FLOOR)
        corr = np.abs(x.T @ tukey_psi(r / sigma, cfg.tuning_c))
        corr[selected] = -1.0
        i = int(np.argmax(corr))
        if not corr[i] > 0.0:
            break
        selected.append(i)
        sub, _, _ = m_estimate(x[:, selected], y, cfg)
        theta = np.zeros(m)
        theta[selected] = sub
        r = y - x @ theta
    return theta, tuple(selected), len(selected)


@dataclass(frozen=True)
class AdmmResult:
    theta: np.ndarray
    u: SparseVector
    iterations: int
    converged: bool

    def __iter__(self):
        return iter((self.theta, self.u, self.iterations))


def lasso_objective(x, y, theta, u, lam):
    r = y - x @ theta - u
    return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(u)))


def admm_lasso(x, y, cfg=None):
    """ADMM for ``min 1/2 |y - X theta - u|^2 + lam |u|_1``.

    Splitting ``z = u`` with scaled dual ``v``. The joint (theta, u) update
    reduces to a least-squares fit of ``y - z + v`` followed by a closed-form
    ``u``; the penalty grows as ``rho <- min(rho_cap, rho_growth * rho)`` with
    the scaled dual rescaled to match. Stops once the penalty has reached
    ``rho_cap`` and the (theta, z) iterate moves by at most ``stop_tol``.
    """
    cfg = cfg or AdmmConfig()
    x = linalg.as_matrix(x, "x")
    y = np.asarray(y, dtype=np.float64)
    n, m = x.shape
    f = linalg.cholesky(x.T @ x)
    lam, rho = cfg.lam, cfg.rho0
    z = np.zeros(n)
    v = np.zeros(n)
    theta = linalg.solve_ls(f, x, y)
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        theta_new = linalg.solve_ls(f, x, y - z + v)
        u = (y + rho * (z - v) - x @ theta_new) / (1.0 + rho)
        z_new = soft_threshold(u + v, lam / rho)
        v = v + u - z_new
        change = float(np.sqrt(np.sum((theta_new - theta) ** 2) + np.sum((z_new - z) ** 2)))
        theta, z = theta_new, z_new
        # with rho still tiny the iterate barely moves; only test once saturated
        if change <= cfg.stop_tol and rho >= cfg.rho_cap:
            converged = True
            break
        rho_new = min(cfg.rho_cap, cfg.rho_growth * rho)
        v *= rho / rho_new
        rho = rho_new
    # refit theta on the final sparse estimate (exact block minimizer)
    theta = linalg.solve_ls(f, x, y - z)
    return AdmmResult(theta, SparseVector.from_dense(z, ADMM_DROP), it, converged)
