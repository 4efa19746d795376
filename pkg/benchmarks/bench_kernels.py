"""Wall-time comparison of the numba and numpy kernel paths.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Numba timings exclude the first (compiling) call. Both paths are checked
for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from barrierfree._accel import numba
from barrierfree.kernels.conv import _conv2d_loops, _conv2d_numpy, _max_pool_loops, _max_pool_numpy
from barrierfree.sim import _confirm_frames_loops, _confirm_frames_numpy


def cases(rng):
    x = rng.normal(size=(16, 80, 80))
    k3 = rng.normal(size=(16, 16, 3, 3))
    k7 = rng.normal(size=(1, 2, 7, 7))
    z = rng.normal(size=(2, 64, 64))
    misses = rng.random((10_000, 20)) < 0.3
    return [
        ("conv 3x3 16->16 @80x80", _conv2d_loops, _conv2d_numpy, (x, k3, 1)),
        ("conv 7x7 2->1 @64x64", _conv2d_loops, _conv2d_numpy, (z, k7, 3)),
        ("max-pool 5x5 16@80x80", _max_pool_loops, _max_pool_numpy, (x, 5)),
        ("confirm_frames 10000x20", _confirm_frames_loops, _confirm_frames_numpy, (misses, 2)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if numba is None:
        print("numba is not installed; nothing to compare")
        return
    print(f"{'kernel':<28}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, fast, slow, call in cases(np.random.default_rng(0)):
        a, b = fast(*call), slow(*call)
        if not np.allclose(a, b, rtol=1e-10, atol=1e-10):
            raise SystemExit(f"{name}: paths disagree")
        t_fast = min(timeit.repeat(lambda: fast(*call), number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(lambda: slow(*call), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<28}{t_fast:>10.2f}{t_slow:>10.2f}{t_slow / t_fast:>8.1f}x")


if __name__ == "__main__":
    main()
