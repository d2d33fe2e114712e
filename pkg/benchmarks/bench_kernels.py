"""Time the numba and numpy versions of each hot kernel side by side.

    python3 benchmarks/bench_kernels.py [--n 2000] [--p 10] [--repeat 5]

Both implementations are called directly, so the ``AUDITOD_DISABLE_NUMBA``
switch does not matter here. The first numba call (compilation, or loading
the on-disk cache) is reported separately and excluded from the timings.
Outputs of the two paths are checked for agreement before timing.
"""
import argparse
import statistics
import time

import numpy as np

from auditod import kernels
from auditod._accel import HAVE_NUMBA
from auditod.detectors.iforest import build_forest
from auditod.synthetic import SyntheticSpec, generate_synthetic


def timed(fn, args, repeat):
    runs = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        runs.append(time.perf_counter() - start)
    return min(runs), statistics.median(runs)


def cases(X, rng):
    centers = X[rng.choice(len(X), size=8, replace=False)]
    forest, _ = build_forest(X, 100, 256, np.random.default_rng(0))
    return [
        ("knn_query k=20", kernels._knn_query_numba, kernels._knn_query_numpy, (X, 20)),
        ("nearest_centroid c=8", kernels._nearest_centroid_numba, kernels._nearest_centroid_numpy, (X, centers)),
        ("forest_depths t=100", kernels._forest_depths_numba, kernels._forest_depths_numpy, (X, *forest.arrays())),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="records (planted-anomaly fixture)")
    ap.add_argument("--p", type=int, default=10, help="features")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        ap.error("numba is not importable; nothing to compare")

    n_anom = max(1, args.n // 100)
    frame, _ = generate_synthetic(SyntheticSpec(args.n - n_anom, n_anom, args.p, 6.0, 42))
    X = np.ascontiguousarray(frame.values)
    rng = np.random.default_rng(0)

    print(f"n={X.shape[0]} p={X.shape[1]} repeat={args.repeat}")
    print(f"{'kernel':24s} {'first numba':>12s} {'numba min':>10s} {'numpy min':>10s} {'speedup':>8s}")
    for name, fast, slow, fargs in cases(X, rng):
        start = time.perf_counter()
        a = fast(*fargs)
        first = time.perf_counter() - start
        b = slow(*fargs)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)
        t_fast, _ = timed(fast, fargs, args.repeat)
        t_slow, _ = timed(slow, fargs, args.repeat)
        print(f"{name:24s} {first:11.3f}s {t_fast:9.4f}s {t_slow:9.4f}s {t_slow / t_fast:7.1f}x")


if __name__ == "__main__":
    main()
