"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run: python3 benchmarks/bench_kernels.py [--size 256] [--repeat 5]
The same comparison is what CAGEFLOW_NUMBA=0 switches at import time.
"""

import argparse
import time

import numpy as np

from cageflow import _kernels as K


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up (JIT compile on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    size = args.size

    rng = np.random.default_rng(0)
    nav = rng.random((size, size)) > 0.35
    nav[0, 0] = True
    goals = np.zeros_like(nav)
    goals[0, 0] = True
    vx, vy = K.run_lengths_numpy(nav)
    pos = rng.random((400, 2)) * size * 0.5
    cost = np.ones((size, size))

    rows = [
        ("bfs_distance", (nav, goals), "bfs_distance_numba", "bfs_distance_numpy"),
        ("run_lengths", (nav,), "run_lengths_numba", "run_lengths_numpy"),
        ("segment_sweep", (nav, vx, vy), "segment_sweep_numba", "segment_sweep_numpy"),
        ("pair_repulsion", (pos, 0.5, 5.0, 2.0, 0.5), "pair_repulsion_numba", "pair_repulsion_numpy"),
        ("weighted_goal_field", (nav, goals, cost), "weighted_goal_field_numba", "weighted_goal_field_numpy"),
    ]
    print(f"grid {size}x{size}, {args.repeat} repeats, best-of shown")
    print(f"{'kernel':<22}{'numba':>12}{'numpy':>12}{'speedup':>9}")
    for name, fargs, nb_name, np_name in rows:
        np_fn = getattr(K, np_name)
        t_np = timeit(np_fn, *fargs, repeat=args.repeat)
        if K.NUMBA_ENABLED:
            nb_fn = getattr(K, nb_name)
            t_nb = timeit(nb_fn, *fargs, repeat=args.repeat)
            print(f"{name:<22}{t_nb*1e3:>10.2f}ms{t_np*1e3:>10.2f}ms{t_np/t_nb:>8.1f}x")
        else:
            print(f"{name:<22}{'(disabled)':>12}{t_np*1e3:>10.2f}ms{'':>9}")


if __name__ == "__main__":
    main()
