"""Time the compiled kernels against the pure-numpy fallback.

Run from the repo root:  python3 benchmarks/bench_kernels.py

Sizes mirror the hot call sites: the binary sampling recursion hammers
zcounts / weighted_best_rows / best_cols on 16x12-ish matrices thousands of
times per restart, and the F_q solver calls fq_score_columns once per
sketched-factor guess.
"""

import time

import numpy as np

from lowrank import _kernels_py as pyk
from lowrank import gf

try:
    from lowrank import _kernels as cyk
except ImportError:
    cyk = None


def timeit(fn, *args, reps=2000):
    fn(*args)  # warm up / validate
    start = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - start) / reps


def main():
    rng = np.random.default_rng(0)
    n, d, k = 16, 12, 2
    nlab = 1 << k
    A = rng.integers(0, 2, (n, d)).astype(np.uint8)
    cols = rng.integers(0, d, 3 * nlab).astype(np.int64)
    labels = rng.integers(0, nlab, cols.size).astype(np.int64)
    neq0 = rng.integers(0, 2, (nlab, nlab)).astype(np.uint8)
    neq1 = rng.integers(0, 2, (nlab, nlab)).astype(np.uint8)
    Z1, sizes = pyk.zcounts(A, cols, labels, nlab)
    Z0w = (sizes[None, :] - Z1) * 1.5
    Z1w = Z1 * 1.5
    rowcodes = rng.integers(0, nlab, n).astype(np.int64)
    live = np.arange(d, dtype=np.int64)
    refs = np.array([0, 3], dtype=np.int64)

    F = gf.field(2)
    K, L, B = 1, 2, 6
    phiA = rng.integers(0, 2, (K, 4, L, B)).astype(np.int16)
    guess = rng.integers(0, 2, (K, 1, L, B)).astype(np.int16)
    vcands = np.array([[0], [1]], dtype=np.int16)
    pinv = 2.0 ** np.arange(L)
    Afq = rng.integers(0, 2, (4, 4)).astype(np.int16)
    cands = rng.integers(0, 2, (2, 4)).astype(np.int16)

    cases = [
        ("zcounts", (A, cols, labels, nlab)),
        ("best_rows", (Z1, sizes, neq0, neq1)),
        ("weighted_best_rows", (Z0w, Z1w, neq0, neq1)),
        ("best_cols", (A, rowcodes, nlab, neq0, neq1)),
        ("pair_cost", (A, rowcodes, rng.integers(0, nlab, d).astype(np.int64), neq0, neq1)),
        ("min_dist_to_refs", (A, live, refs)),
        ("best_rows_given_candrows", (Afq, cands)),
        ("fq_score_columns", (phiA, guess, F.add, F.mul, F.sub, vcands, pinv, 4096.0)),
    ]

    print(f"{'kernel':<26} {'python':>12} {'cython':>12} {'speedup':>9}")
    for name, args in cases:
        t_py = timeit(getattr(pyk, name), *args)
        if cyk is None:
            print(f"{name:<26} {t_py * 1e6:>10.1f}us {'n/a':>12} {'':>9}")
            continue
        t_cy = timeit(getattr(cyk, name), *args)
        print(
            f"{name:<26} {t_py * 1e6:>10.1f}us {t_cy * 1e6:>10.1f}us {t_py / t_cy:>8.1f}x"
        )


if __name__ == "__main__":
    main()
