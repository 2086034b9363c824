"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run: python3 benchmarks/bench_kernels.py [--rows 200000] [--repeat 5]
The numba path is what ships by default (MODELPROBE_KERNELS=auto); set
MODELPROBE_KERNELS=numpy to force the fallback in production code.
"""

import argparse
import time

import numpy as np

from modelprobe.synth import _kernels


def time_call(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    n = args.rows

    codes_a = rng.integers(0, 10, n).astype(np.int64)
    codes_b = rng.integers(0, 10, n).astype(np.int64)

    values = np.sort(rng.random(n))
    labels = rng.integers(0, 3, n).astype(np.int64)

    cdf_rows = np.cumsum(rng.dirichlet(np.ones(8), size=10), axis=1)
    cdf_rows[:, -1] = 1.0
    parents = rng.integers(0, 10, n).astype(np.int64)
    uniforms = rng.random(n)

    cases = [
        ("pair_mutual_information",
         _kernels.np_pair_mutual_information, (codes_a, codes_b, 10, 10, 1.0)),
        ("best_threshold_split",
         _kernels.np_best_threshold_split, (values, labels, 3, 20)),
        ("conditional_draw",
         _kernels.np_conditional_draw, (cdf_rows, parents, uniforms)),
    ]

    numba_fns = {}
    if _kernels._HAVE_NUMBA:
        numba_fns = {
            "pair_mutual_information": _kernels.nb_pair_mutual_information,
            "best_threshold_split": _kernels.nb_best_threshold_split,
            "conditional_draw": _kernels.nb_conditional_draw,
        }
        for name, _, call_args in cases:
            numba_fns[name](*call_args)  # warm the JIT cache before timing

    print(f"rows={n}  repeat={args.repeat}  default backend={_kernels.BACKEND}")
    print(f"{'kernel':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, np_fn, call_args in cases:
        t_np = time_call(np_fn, *call_args, repeat=args.repeat)
        if numba_fns:
            t_nb = time_call(numba_fns[name], *call_args, repeat=args.repeat)
            print(f"{name:<28}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<28}{t_np * 1e3:>10.2f}ms{'n/a':>12}{'n/a':>10}")


if __name__ == "__main__":
    main()
