"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from germforge import _kernels_py as fallback
from germforge.conformal.geometry import TeardropDomain

try:
    from germforge import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    n = 48
    f = np.r_[0, 1, (rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)) * 0.5 ** np.arange(1, n)]
    g = np.r_[0, 1, (rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)) * 0.5 ** np.arange(1, n)]
    table = np.ascontiguousarray(TeardropDomain(1.2, 0.05).piece_table())
    return [
        ("compose_series N=48", lambda m: m.compose_series(f, g)),
        ("invert_series N=48", lambda m: m.invert_series(f)),
        ("wos_log_modulus 20k walks", lambda m: m.wos_log_modulus(0.5 + 0j, table, 1e-6, 20_000, 7)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':<28}{'numpy (s)':>12}{'compiled (s)':>14}{'speedup':>10}")
    for name, fn in cases():
        t_py = best_of(lambda: fn(fallback), args.repeat)
        if compiled is None:
            print(f"{name:<28}{t_py:>12.4f}{'n/a':>14}{'':>10}")
            continue
        t_c = best_of(lambda: fn(compiled), args.repeat)
        print(f"{name:<28}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
