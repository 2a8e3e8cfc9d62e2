"""Seeded synthetic regression instances with sparse outliers.

Rows of ``X`` are drawn uniformly from a hypercube, ``theta0`` is Gaussian,
outliers take values ``+-outlier_magnitude`` on a uniformly drawn support,
and the inlier noise follows one of the ``*Inlier`` models below.
Everything is a pure function of the configuration and its seed.
"""
import math
import os
import zlib
from dataclasses import dataclass

import numpy as np

from . import linalg
from .gard import RegressionProblem, SparseVector

__all__ = [
    "GaussianInlier", "SnrGaussianInlier", "AlphaStableInlier",
    "TwoGaussianMixInlier", "GenConfig", "GroundTruth", "gen_instance",
    "sample_alpha_stable", "gen_noise_suite", "noise_suite_parts",
    "NOISE_SUITE", "truncate_to_norm", "make_rng", "stream_seed",
    "save_instance", "load_instance",
]

RANK_RETRIES = 20


@dataclass(frozen=True)
class GaussianInlier:
    """i.i.d. N(0, sigma^2); optionally clipped so that ``|eta|_2 <= truncate_to``."""

    sigma: float = 1.0
    truncate_to: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.truncate_to is not None and self.truncate_to < 0:
            raise ValueError("truncate_to must be non-negative")


@dataclass(frozen=True)
class SnrGaussianInlier:
    """Gaussian noise at ``snr_db`` below the clean signal ``X theta0``."""

    snr_db: float = 20.0


@dataclass(frozen=True)
class AlphaStableInlier:
    alpha: float
    beta: float = 0.0
    gamma: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0 and -1.0 <= self.beta <= 1.0 and self.gamma > 0.0):
            raise ValueError(f"stable parameters out of range: {self}")


@dataclass(frozen=True)
class TwoGaussianMixInlier:
    """Sum of two independent zero-mean Gaussian vectors."""

    sigma1: float = 0.6
    sigma2: float = 0.8

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("both sigmas must be positive")


@dataclass(frozen=True)
class GenConfig:
    n: int
    m: int
    s: int = 0
    hypercube_halfwidth: float = 1.0
    theta_std: float = 5.0
    outlier_magnitude: float = 25.0
    outlier_sign: str = "random_pm"   # or "fixed" (all +magnitude)
    inlier: object = None
    seed: object = 0                  # int or sequence of ints
    epsilon0: float | None = None     # overrides the derived noise bound
    y0_max: float | None = None       # rescale theta0 so max|X theta0| equals this

    def __post_init__(self):
        if self.n <= self.m or self.m < 1:
            raise ValueError(f"need n > m >= 1, got n={self.n}, m={self.m}")
        if self.s < 0 or (self.s > 0 and self.s >= self.n - self.m):
            raise ValueError(f"outlier count s={self.s} must satisfy 0 <= s < n - m")
        if self.hypercube_halfwidth <= 0 or self.theta_std <= 0:
            raise ValueError("scale parameters must be positive")
        if self.s > 0 and self.outlier_magnitude <= 0:
            raise ValueError("outlier_magnitude must be positive")
        if self.outlier_sign not in ("random_pm", "fixed"):
            raise ValueError(f"unknown outlier_sign {self.outlier_sign!r}")


@dataclass(frozen=True)
class GroundTruth:
    theta0: np.ndarray
    u0: SparseVector
    eta: np.ndarray


def stream_seed(master_seed, *keys):
    """Derive an independent stream key from a master seed and labels.

    String labels are hashed with CRC32 so that the key is stable across runs
    and platforms.
    """
    parts = [int(master_seed) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        parts.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k))
    return tuple(parts)


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return np.random.default_rng(np.random.SeedSequence(list(seed)))
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def truncate_to_norm(eta, bound):
    """Clip the largest-magnitude entries to a common level so ``|eta|_2 <= bound``.

    The level is the smallest one that reaches the bound; entries below it are
    untouched.
    """
    eta = np.asarray(eta, dtype=np.float64)
    if bound < 0:
        raise ValueError("bound must be non-negative")
    if float(eta @ eta) <= bound * bound:
        return eta.copy()
    mags = np.sort(np.abs(eta))[::-1]
    tail = np.concatenate([np.cumsum((mags ** 2)[::-1])[::-1], [0.0]])
    level = 0.0
    for k in range(1, mags.size + 1):
        # k largest entries clipped to `level`, rest kept
        rem = bound * bound - tail[k]
        if rem <= 0:
            continue
        cand = math.sqrt(rem / k)
        lower = mags[k] if k < mags.size else 0.0
        if lower <= cand <= mags[k - 1]:
            level = cand
            break
    out = np.clip(eta, -level, level)
    norm = float(np.sqrt(out @ out))
    if norm > bound:
        out *= bound / norm
    return out


def sample_alpha_stable(alpha, beta=0.0, gamma=1.0, delta=0.0, rng=None, size=None):
    """Draw from the stable law S(alpha, beta, gamma, delta) by Chambers-Mallows-Stuck.

    Uses the parametrization in which alpha = 2 is N(delta, 2 gamma^2) and
    alpha = 1, beta = 0 is Cauchy(delta, gamma).
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if not -1.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [-1, 1], got {beta}")
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    rng = make_rng(0) if rng is None else rng
    u = rng.uniform(-math.pi / 2, math.pi / 2, size)
    w = rng.exponential(1.0, size)
    if alpha == 1.0:
        half = math.pi / 2 + beta * u
        x = (2 / math.pi) * (half * np.tan(u)
                             - beta * np.log((math.pi / 2) * w * np.cos(u) / half))
        return gamma * x + (2 / math.pi) * beta * gamma * math.log(gamma) + delta
    zeta = beta * math.tan(math.pi * alpha / 2)
    shift = math.atan(zeta) / alpha
    scale = (1 + zeta * zeta) ** (1 / (2 * alpha))
    x = (scale * np.sin(alpha * (u + shift)) / np.cos(u) ** (1 / alpha)
         * (np.cos(u - alpha * (u + shift)) / w) ** ((1 - alpha) / alpha))
    return gamma * x + delta


def _inlier_noise(spec, n, rng, clean):
    """Return (eta, epsilon0)."""
    if spec is None:
        return np.zeros(n), 0.0
    if isinstance(spec, GaussianInlier):
        eta = rng.normal(0.0, spec.sigma, n)
        if spec.truncate_to is not None:
            eta = truncate_to_norm(eta, spec.truncate_to)
            return eta, float(spec.truncate_to)
        return eta, float(np.linalg.norm(eta))
    if isinstance(spec, SnrGaussianInlier):
        power = float(clean @ clean) / n
        sigma = math.sqrt(power / 10 ** (spec.snr_db / 10))
        eta = rng.normal(0.0, sigma, n)
        return eta, float(np.linalg.norm(eta))
    if isinstance(spec, AlphaStableInlier):
        eta = sample_alpha_stable(spec.alpha, spec.beta, spec.gamma, spec.delta, rng, n)
        return eta, float(np.linalg.norm(eta))
    if isinstance(spec, TwoGaussianMixInlier):
        e1 = rng.normal(0.0, spec.sigma1, n)
        e2 = rng.normal(0.0, spec.sigma2, n)
        return e1 + e2, float(max(np.linalg.norm(e1), np.linalg.norm(e2)))
    raise TypeError(f"unknown inlier model {spec!r}")


def gen_instance(cfg):
    """Build ``(RegressionProblem, GroundTruth)`` from ``cfg``.

    ``epsilon0`` of the problem is ``cfg.epsilon0`` when given, the truncation
    bound in truncated mode, ``max(|eta1|, |eta2|)`` for the two-Gaussian mix,
    and the realized ``|eta|_2`` otherwise.
    """
    rng = make_rng(cfg.seed)
    n, m, h = cfg.n, cfg.m, cfg.hypercube_halfwidth
    for _ in range(RANK_RETRIES):
        x = rng.uniform(-h, h, (n, m))
        try:
            linalg.qr_reduced(x)
            break
        except linalg.RankDeficientError:
            continue
    else:
        raise linalg.RankDeficientError(f"no full-rank design after {RANK_RETRIES} draws")
    theta0 = rng.normal(0.0, cfg.theta_std, m)
    if cfg.y0_max is not None:
        theta0 *= cfg.y0_max / np.max(np.abs(x @ theta0))
    clean = x @ theta0

    idx = np.sort(rng.choice(n, size=cfg.s, replace=False)) if cfg.s else np.zeros(0, np.intp)
    if cfg.outlier_sign == "random_pm":
        signs = rng.choice(np.array([-1.0, 1.0]), size=cfg.s)
    else:
        signs = np.ones(cfg.s)
    u0 = SparseVector(n, idx, cfg.outlier_magnitude * signs)

    eta, eps0 = _inlier_noise(cfg.inlier, n, rng, clean)
    if cfg.epsilon0 is not None:
        eps0 = float(cfg.epsilon0)
    y = clean + u0.to_dense() + eta
    return RegressionProblem(x, y, eps0), GroundTruth(theta0, u0, eta)


NOISE_SUITE = {
    "A": AlphaStableInlier(0.45, 0.0, 0.3, 0.0),
    "B": AlphaStableInlier(0.4, 0.0, 0.1, 0.0),
    "C": AlphaStableInlier(0.3, 0.0, 0.1, 0.0),
    "D": TwoGaussianMixInlier(0.6, 0.8),
}
SUITE_IMPULSE_DENSITY = 0.1
SUITE_IMPULSE_MAGNITUDE = 25.0


def noise_suite_parts(test, n, rng):
    """Heavy-tailed noise of test ``test`` split into its components.

    Returns ``(total, parts, impulses)`` where ``parts`` lists the dense
    components and ``impulses`` is a SparseVector (empty for A-C).
    """
    if test not in NOISE_SUITE:
        raise ValueError(f"unknown noise test {test!r}; expected one of {sorted(NOISE_SUITE)}")
    rng = make_rng(rng)
    spec = NOISE_SUITE[test]
    if isinstance(spec, AlphaStableInlier):
        e = sample_alpha_stable(spec.alpha, spec.beta, spec.gamma, spec.delta, rng, n)
        return e, [e], SparseVector(n)
    e1 = rng.normal(0.0, spec.sigma1, n)
    e2 = rng.normal(0.0, spec.sigma2, n)
    k = math.ceil(SUITE_IMPULSE_DENSITY * n)
    idx = np.sort(rng.choice(n, size=k, replace=False))
    vals = SUITE_IMPULSE_MAGNITUDE * rng.choice(np.array([-1.0, 1.0]), size=k)
    imp = SparseVector(n, idx, vals)
    return e1 + e2 + imp.to_dense(), [e1, e2], imp


def gen_noise_suite(test, n, seed):
    """Noise vector of length ``n`` for heavy-tailed test ``test`` in {A, B, C, D}."""
    return noise_suite_parts(test, n, make_rng(seed))[0]


_FMT = "%.17g"


def save_instance(directory, problem, truth=None):
    """Write an instance as CSV files (``u0.csv`` uses 1-based indices)."""
    os.makedirs(directory, exist_ok=True)
    j = lambda name: os.path.join(directory, name)  # noqa: E731
    np.savetxt(j("X.csv"), problem.x, delimiter=",", fmt=_FMT)
    np.savetxt(j("y.csv"), problem.y, fmt=_FMT)
    np.savetxt(j("epsilon0.csv"), [problem.epsilon0], fmt=_FMT)
    if truth is not None:
        np.savetxt(j("theta0.csv"), truth.theta0, fmt=_FMT)
        np.savetxt(j("eta.csv"), truth.eta, fmt=_FMT)
        with open(j("u0.csv"), "w") as fh:
            for i, v in zip(truth.u0.indices, truth.u0.values):
                fh.write(f"{int(i) + 1},{v:.17g}\n")


def load_instance(directory):
    """Inverse of :func:`save_instance`. Returns ``(problem, truth_or_None)``."""
    j = lambda name: os.path.join(directory, name)  # noqa: E731
    x = np.loadtxt(j("X.csv"), delimiter=",", ndmin=2)
    y = np.loadtxt(j("y.csv"), ndmin=1)
    eps0 = float(np.loadtxt(j("epsilon0.csv"))) if os.path.exists(j("epsilon0.csv")) else 0.0
    problem = RegressionProblem(x, y, eps0)
    if not os.path.exists(j("theta0.csv")):
        return problem, None
    theta0 = np.loadtxt(j("theta0.csv"), ndmin=1)
    eta = np.loadtxt(j("eta.csv"), ndmin=1)
    idx, vals = [], []
    with open(j("u0.csv")) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, b = line.split(",")
            idx.append(int(a) - 1)
            vals.append(float(b))
    u0 = SparseVector(problem.n, np.asarray(idx, dtype=np.intp), np.asarray(vals))
    return problem, GroundTruth(theta0, u0, eta)
