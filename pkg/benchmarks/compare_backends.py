"""Time the compiled kernels against the numpy fallback.

    python benchmarks/compare_backends.py [--repeat 5] [--quick]

Each kernel is run on identical inputs through both backends; results are
checked for agreement before timings are reported.
"""
import argparse
import time

import numpy as np

from gardlab import _backend


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(quick):
    rng = np.random.default_rng(0)
    n, m = (300, 30) if quick else (1200, 100)
    x = rng.uniform(-1, 1, (n, m))
    theta = rng.normal(0, 5, m)
    y = x @ theta + rng.normal(0, 1, n)
    idx = rng.choice(n, n // 10, replace=False)
    y[idx] += 25 * rng.choice([-1, 1], idx.size)
    g = x.T @ x
    q, _ = np.linalg.qr(rng.standard_normal((24 if quick else 30, 4)))
    eps0 = float(np.sqrt(n))
    return [
        ("householder_qr", lambda k: k.householder_qr(x, 1e-10)[1]),
        ("cholesky", lambda k: k.cholesky(g)),
        ("singular_values", lambda k: k.singular_values(x[:60, :20].copy())),
        ("gard_cholesky_path", lambda k: k.gard_cholesky_path(x, y, eps0, n - m - 1, 1e-12)[0]),
        ("subset_max_eig s=3", lambda k: np.array(k.subset_max_eig(q @ q.T, 3))),
        ("subset_rip s=3", lambda k: np.array(k.subset_rip(q, 3))),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="small inputs")
    args = ap.parse_args(argv)
    if "cython" not in _backend.available():
        print("compiled backend not built; only the fallback is available")
        return 1
    comp, py = _backend.get("cython"), _backend.get("python")
    print(f"{'kernel':22s} {'cython [ms]':>12s} {'python [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases(args.quick):
        tc, oc = _best(lambda: fn(comp), args.repeat)
        tp, op = _best(lambda: fn(py), args.repeat)
        if not np.allclose(oc, op, rtol=1e-8, atol=1e-10):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:22s} {1e3 * tc:12.3f} {1e3 * tp:12.3f} {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
