"""Monte-Carlo experiment runners.

Every experiment expands its configuration into independent trial tasks,
runs them (optionally in a process pool), and folds the per-trial records
into a summary in trial order, so the output does not depend on scheduling.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import baselines, datagen, theory
from .._errors import BudgetExceededError, LinAlgError
from ..gard import RegressionProblem, SparseVector, gard_solve
from .config import inlier_model

log = logging.getLogger(__name__)

TIMING_COLUMNS = ("elapsed_seconds", "mean_time", "gard_elapsed_seconds")
# squared error treated as zero (noiseless recovery, eps0 = 0 bounds)
EXACT_SQ_ERR = 1e-16
TRIAL_COLUMNS = ("method", "trial", "sq_err", "rel_err", "success",
                 "support_correct_pct", "support_extra_count", "iterations",
                 "reason", "elapsed_seconds")

# The suite's "sigma" for M-est / ROMP is the biweight tuning constant.
NOISE_SUITE_PARAMS = {
    "A": {"gard": {"epsilon0": 3.0}, "romp": {"epsilon0": 3.0, "tuning_c": 1.2},
          "m_est": {"tuning_c": 1.2}},
    "B": {"gard": {"epsilon0": 3.0}, "romp": {"epsilon0": 3.0, "tuning_c": 1.0},
          "m_est": {"tuning_c": 1.0}},
    "C": {"gard": {"epsilon0": 3.0}, "romp": {"epsilon0": 3.0, "tuning_c": 1.0},
          "m_est": {"tuning_c": 1.0}},
    "D": {"gard": {"epsilon0": "auto"}, "romp": {"epsilon0": "auto"}},
}


@dataclass
class TrialOutcome:
    method: str
    trial_index: int
    sq_err: float
    rel_err: float
    success: bool
    support_correct_pct: float
    support_extra_count: float
    elapsed_seconds: float
    iterations: float
    reason: str = ""

    def as_row(self):
        return {"method": self.method, "trial": self.trial_index, "sq_err": self.sq_err,
                "rel_err": self.rel_err, "success": self.success,
                "support_correct_pct": self.support_correct_pct,
                "support_extra_count": self.support_extra_count,
                "iterations": self.iterations, "reason": self.reason,
                "elapsed_seconds": self.elapsed_seconds}


@dataclass
class ExperimentResult:
    experiment: str
    summary: list
    trials: list
    tables: dict = field(default_factory=dict)   # extra named tables


def _irls_config(params):
    scale = params.get("fixed_scale")
    return baselines.IrlsConfig(
        tuning_c=params.get("tuning_c", 4.685),
        max_iters=params.get("max_iters", 100),
        param_tol=params.get("param_tol", 1e-6),
        scale_mode="fixed" if scale is not None else "mad_per_iter",
        fixed_scale=scale)


def _epsilon(params, problem):
    eps = params.get("epsilon0", "auto")
    return problem.epsilon0 if eps == "auto" else float(eps)


def _rejected(x, y, theta, cfg):
    # observations the biweight gives zero weight at the final fit
    r = y - x @ theta
    scale = cfg.fixed_scale if cfg.scale_mode == "fixed" else max(
        baselines.mad(r) / baselines.MAD_NORMALIZER, baselines.SCALE_FLOOR)
    w = baselines.tukey_weight(r / scale, cfg.tuning_c)
    return {int(i) for i in np.flatnonzero(w == 0.0)}


def run_method(name, problem, params):
    """Fit ``problem`` with method ``name``.

    Returns ``(theta, outlier_support, iterations, reason)``; ``theta`` is None
    and ``reason`` non-empty when the method failed.
    """
    x, y = problem.x, problem.y
    try:
        if name == "gard":
            eps = _epsilon(params, problem)
            res = gard_solve(RegressionProblem(x, y, eps), engine=params.get("engine", "cholesky"),
                             max_outliers=params.get("max_outliers"))
            return res.theta_star, set(res.support), res.iterations, ""
        if name == "m_est":
            cfg = _irls_config(params)
            theta, w, it = baselines.m_estimate(x, y, cfg)
            return theta, _rejected(x, y, theta, cfg), it, ""
        if name == "romp":
            cfg = _irls_config(params)
            theta, _, it = baselines.romp(x, y, _epsilon(params, problem), cfg)
            return theta, _rejected(x, y, theta, cfg), it, ""
        if name == "admm":
            res = baselines.admm_lasso(x, y, baselines.AdmmConfig(**params))
            if not res.converged:
                return None, None, res.iterations, "max_iters"
            return res.theta, set(res.u.support), res.iterations, ""
    except (LinAlgError, ValueError, FloatingPointError) as exc:
        return None, None, math.nan, f"{type(exc).__name__}: {exc}"
    raise ValueError(f"unknown method {name!r}")


def support_scores(found, true_support):
    """(percent of true indices found, number of extra indices); empty truth scores 100."""
    true_support = set(true_support)
    hit = len(found & true_support)
    pct = 100.0 if not true_support else 100.0 * hit / len(true_support)
    return pct, len(found - true_support)


def evaluate(method, trial, problem, truth, params, success_tol):
    t0 = time.perf_counter()
    theta, found, iters, reason = run_method(method, problem, params)
    elapsed = time.perf_counter() - t0
    if theta is None:
        return TrialOutcome(method, trial, math.nan, math.nan, False, math.nan, math.nan,
                            elapsed, iters, reason)
    diff = theta - truth.theta0
    sq = float(diff @ diff)
    rel = math.sqrt(sq) / float(np.linalg.norm(truth.theta0))
    pct, extra = support_scores(found, truth.u0.support)
    return TrialOutcome(method, trial, sq, rel, bool(rel <= success_tol), pct, extra,
                        elapsed, iters)


def _instance(cfg, n, m, fraction, seed):
    gen = datagen.GenConfig(
        n=n, m=m, s=int(round(fraction * n)), outlier_magnitude=cfg.outlier_magnitude,
        outlier_sign=cfg.outlier_sign, inlier=inlier_model(cfg.inlier), seed=seed,
        y0_max=cfg.y0_max)
    return datagen.gen_instance(gen)


def _suite_instance(cfg, test, seed):
    problem, truth = datagen.gen_instance(
        datagen.GenConfig(n=cfg.n, m=cfg.m, seed=seed + (0,)))
    total, parts, impulses = datagen.noise_suite_parts(test, cfg.n, datagen.make_rng(seed + (1,)))
    eps0 = float(max(np.linalg.norm(p) for p in parts))
    problem = RegressionProblem(problem.x, problem.y + total, eps0)
    return problem, datagen.GroundTruth(truth.theta0, impulses, total - impulses.to_dense())


def _method_params(cfg, method, test=None):
    params = {}
    if test is not None:
        params.update(NOISE_SUITE_PARAMS[test].get(method, {}))
    params.update(cfg.method_params.get(method, {}))
    return params


def _outcome_rows(cfg, keys, trial, problem, truth, test=None):
    rows = []
    for method in cfg.methods:
        out = evaluate(method, trial, problem, truth, _method_params(cfg, method, test),
                       cfg.success_tol)
        rows.append({**keys, **out.as_row()})
    return rows


# task handlers: each returns the list of rows for one trial

def _grid_task(cfg, keys, seed, n, m, fraction, trial):
    problem, truth = _instance(cfg, n, m, fraction, seed)
    return _outcome_rows(cfg, keys, trial, problem, truth)


def _suite_task(cfg, keys, seed, test, trial):
    problem, truth = _suite_instance(cfg, test, seed)
    return _outcome_rows(cfg, keys, trial, problem, truth, test)


def _theory_columns(problem, truth, exact, cfg):
    out = {"mode": "exact" if exact else "bound_only", "epsilon0": problem.epsilon0,
           "bound_c": math.nan, "delta_s": math.nan, "guarantee": "",
           "loose_bound": math.nan}
    if truth.u0.nnz == 0:
        out["mode"] = "empty"
        return out
    c = theory.bound_noisy(truth.u0, problem.epsilon0)
    tau = float(np.linalg.svd(problem.x, compute_uv=False)[-1])
    if c is not None:
        out["bound_c"] = c
        out["loose_bound"] = theory.error_bound(problem.epsilon0, tau, c)
    if exact:
        rep = theory.certify(problem, truth, max_n=cfg.theory_max_n, max_s=cfg.theory_max_s)
        out["delta_s"] = rep.delta_s
        out["guarantee"] = bool(c is not None and rep.delta_s < c)
    return out


def _support_task(cfg, keys, seed, fraction, trial, exact):
    problem, truth = _instance(cfg, cfg.n, cfg.m, fraction, seed)
    extra = _theory_columns(problem, truth, exact, cfg)
    return [{**keys, **extra, **row} for row in
            _outcome_rows(cfg, {}, trial, problem, truth)]


def _certify_task(cfg, keys, seed, fraction, trial):
    problem, truth = _instance(cfg, cfg.n, cfg.m, fraction, seed)
    row = {**keys, "trial": trial}
    if truth.u0.nnz == 0:
        return [{**row, "reason": "no outliers"}]
    rep = theory.certify(problem, truth, max_n=cfg.theory_max_n, max_s=cfg.theory_max_s)
    row.update(rep.as_row())
    t0 = time.perf_counter()
    res = gard_solve(problem)
    row["gard_elapsed_seconds"] = time.perf_counter() - t0
    diff = res.theta_star - truth.theta0
    row["gard_support_exact"] = set(res.support) == set(truth.u0.support)
    row["gard_err"] = float(np.sqrt(diff @ diff))
    row["reason"] = ""
    return [row]


_HANDLERS = {"grid": _grid_task, "suite": _suite_task, "support": _support_task,
             "certify": _certify_task}


def _run_task(task):
    kind, cfg, args = task
    return _HANDLERS[kind](cfg, *args)


def _execute(tasks, workers):
    """Run tasks and return their rows concatenated in task order."""
    if workers <= 1 or len(tasks) <= 1:
        chunks = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [row for chunk in chunks for row in chunk]


def _seed(cfg, *keys):
    return datagen.stream_seed(cfg.master_seed, cfg.experiment, *keys)


def _mean(vals):
    vals = [v for v in vals if not (isinstance(v, float) and math.isnan(v))]
    return float(np.mean(vals)) if vals else math.nan


def _db(v):
    return 10.0 * math.log10(v) if v > 0 else (-math.inf if v == 0 else math.nan)


def summarize(rows, keys):
    """Fold trial rows into one summary row per (keys..., method), in first-seen order."""
    groups = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys) + (row["method"],), []).append(row)
    out = []
    for gkey, grp in groups.items():
        mse = _mean([r["sq_err"] for r in grp])
        out.append({
            **dict(zip(keys, gkey[:-1])), "method": gkey[-1],
            "trials": len(grp), "failures": sum(1 for r in grp if r["reason"]),
            "mse": mse, "mse_db": _db(mse) if not math.isnan(mse) else math.nan,
            "success_rate": sum(1 for r in grp if r["success"] is True) / len(grp),
            "support_correct_pct": _mean([r["support_correct_pct"] for r in grp]),
            "support_extra_count": _mean([float(r["support_extra_count"]) for r in grp]),
            "mean_time": _mean([r["elapsed_seconds"] for r in grp]),
        })
    return out


def run_mse_sweep(cfg, workers=1):
    tasks = []
    for fi, f in enumerate(cfg.fractions):
        for t in range(cfg.trials):
            keys = {"fraction": f, "s": int(round(f * cfg.n))}
            tasks.append(("grid", cfg, (keys, _seed(cfg, fi, t), cfg.n, cfg.m, f, t)))
    rows = _execute(tasks, workers)
    return ExperimentResult(cfg.experiment, summarize(rows, ("fraction", "s")), rows)


def run_scaling(cfg, workers=1):
    tasks = []
    for ni, n in enumerate(cfg.n_values):
        for fi, f in enumerate(cfg.fractions):
            for t in range(cfg.trials):
                keys = {"n": n, "fraction": f, "s": int(round(f * n))}
                tasks.append(("grid", cfg, (keys, _seed(cfg, ni, fi, t), n, cfg.m, f, t)))
    rows = _execute(tasks, workers)
    return ExperimentResult(cfg.experiment, summarize(rows, ("n", "fraction", "s")), rows)


def run_noise_suite(cfg, workers=1):
    tasks = []
    for test in cfg.tests:
        for t in range(cfg.trials):
            tasks.append(("suite", cfg, ({"test": test}, _seed(cfg, test, t), test, t)))
    rows = _execute(tasks, workers)
    return ExperimentResult(cfg.experiment, summarize(rows, ("test",)), rows)


def find_crossing(fractions, probs, level=0.5):
    """First downward crossing of ``level`` by linear interpolation on the grid.

    Returns ``(fraction, status)`` with status ``"crossed"``, ``"always_above"``
    or ``"always_below"`` (fraction is NaN in the last two cases).
    """
    if len(fractions) != len(probs) or not fractions:
        raise ValueError("fractions and probs must be non-empty and of equal length")
    if probs[0] < level:
        return math.nan, "always_below"
    for i in range(len(probs) - 1):
        p0, p1 = probs[i], probs[i + 1]
        if p0 >= level > p1:
            f0, f1 = fractions[i], fractions[i + 1]
            return f0 + (p0 - level) * (f1 - f0) / (p0 - p1), "crossed"
    return math.nan, "always_above"


def run_phase_transition(cfg, workers=1):
    tasks = []
    for mi, m in enumerate(cfg.m_values):
        for fi, f in enumerate(cfg.fractions):
            for t in range(cfg.trials):
                keys = {"m": m, "fraction": f, "s": int(round(f * cfg.n))}
                tasks.append(("grid", cfg, (keys, _seed(cfg, mi, fi, t), cfg.n, m, f, t)))
    rows = _execute(tasks, workers)
    probs = summarize(rows, ("m", "fraction", "s"))
    curve = []
    for m in cfg.m_values:
        for method in cfg.methods:
            sel = [r for r in probs if r["m"] == m and r["method"] == method]
            frac, status = find_crossing([r["fraction"] for r in sel],
                                         [r["success_rate"] for r in sel])
            curve.append({"m": m, "method": method, "crossing_fraction": frac,
                          "status": status})
    return ExperimentResult(cfg.experiment, curve, rows, {"probs": probs})


def run_support_recovery(cfg, workers=1):
    s_max = max(int(round(f * cfg.n)) for f in cfg.fractions)
    exact = cfg.n <= cfg.theory_max_n and s_max <= cfg.theory_max_s
    if not exact:
        log.warning("n=%d, s<=%d exceeds the brute-force budget (n<=%d, s<=%d); "
                    "reporting the bound c only", cfg.n, s_max, cfg.theory_max_n,
                    cfg.theory_max_s)
    tasks = []
    for fi, f in enumerate(cfg.fractions):
        for t in range(cfg.trials):
            keys = {"fraction": f, "s": int(round(f * cfg.n))}
            tasks.append(("support", cfg, (keys, _seed(cfg, fi, t), f, t, exact)))
    rows = _execute(tasks, workers)
    summary = summarize(rows, ("fraction", "s"))
    by_key = {}
    for r in rows:
        by_key.setdefault((r["fraction"], r["s"], r["method"]), []).append(r)
    for srow in summary:
        grp = by_key[(srow["fraction"], srow["s"], srow["method"])]
        flags = [r["guarantee"] for r in grp if r["guarantee"] != ""]
        loose = [r["loose_bound"] ** 2 for r in grp]
        held = [r["sq_err"] <= r["loose_bound"] ** 2 + EXACT_SQ_ERR for r in grp
                if not math.isnan(r["loose_bound"]) and not math.isnan(r["sq_err"])]
        srow.update({
            "mode": grp[0]["mode"],
            "bound_c": _mean([r["bound_c"] for r in grp]),
            "delta_s": _mean([r["delta_s"] for r in grp]),
            "guarantee_rate": sum(flags) / len(flags) if flags else math.nan,
            "loose_bound_sq": _mean(loose),
            "bound_holds_pct": 100.0 * sum(held) / len(held) if held else math.nan,
        })
    return ExperimentResult(cfg.experiment, summary, rows)


def run_certify(cfg, workers=1):
    s_max = max(int(round(f * cfg.n)) for f in cfg.fractions)
    if cfg.n > cfg.theory_max_n or s_max > cfg.theory_max_s:
        count = sum(math.comb(cfg.n, k) for k in range(1, s_max + 1))
        raise BudgetExceededError(
            f"certify needs n<={cfg.theory_max_n} and s<={cfg.theory_max_s}, got n={cfg.n}, "
            f"s={s_max}", combinations=count)
    tasks = []
    for fi, f in enumerate(cfg.fractions):
        for t in range(cfg.trials):
            keys = {"fraction": f, "s": int(round(f * cfg.n))}
            tasks.append(("certify", cfg, (keys, _seed(cfg, fi, t), f, t)))
    rows = _execute(tasks, workers)
    summary = []
    for f in cfg.fractions:
        grp = [r for r in rows if r["fraction"] == f and not r["reason"]]
        flags = [r["noiseless_guarantee"] if r["epsilon0"] == 0 else bool(r["noisy_guarantee"])
                 for r in grp]
        summary.append({
            "fraction": f, "s": int(round(f * cfg.n)), "trials": len(grp),
            "guarantee_rate": sum(flags) / len(flags) if flags else math.nan,
            "delta_s": _mean([r["delta_s"] for r in grp]),
            "support_exact_pct": 100.0 * sum(r["gard_support_exact"] for r in grp) / len(grp)
            if grp else math.nan,
        })
    return ExperimentResult(cfg.experiment, summary, rows)


RUNNERS = {
    "mse_sweep": run_mse_sweep,
    "scaling": run_scaling,
    "support_recovery": run_support_recovery,
    "phase_transition": run_phase_transition,
    "noise_suite": run_noise_suite,
    "certify": run_certify,
}


def run(cfg, workers=None):
    cfg.validate()
    return RUNNERS[cfg.experiment](cfg, cfg.workers if workers is None else workers)
