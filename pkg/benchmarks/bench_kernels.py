"""Compiled vs pure-Python all-pairs kernel.

    python3 benchmarks/bench_kernels.py [--sizes 50 200 1000] [--repeat 5]

The compiled backend is optional; without it only the Python column is
reported.
"""
import argparse
import random
import sys
import timeit
from array import array

from usq import _kernels_py

try:
    from usq import _kernels as _compiled
except ImportError:
    _compiled = None


def make_points(n, size, seed):
    rng = random.Random(seed)
    return [rng.uniform(0, size) for _ in range(n)], [rng.uniform(0, size) for _ in range(n)]


def best_time(fn, repeat):
    number = 1
    # grow the loop count until one batch takes a measurable time
    while timeit.timeit(fn, number=number) < 0.05 and number < 1 << 20:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[20, 50, 200, 1000])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    print(f"{'n':>6} {'python (s)':>12} {'cython (s)':>12} {'speedup':>8}")
    for n in args.sizes:
        # robot density comparable to the dense environment
        xs, ys = make_points(n, 85.0 * (n / 50) ** 0.5, args.seed)
        t_py = best_time(lambda: _kernels_py.colliding_pairs(xs, ys, 1.0), args.repeat)
        if _compiled is None:
            print(f"{n:>6} {t_py:>12.3e} {'n/a':>12} {'n/a':>8}")
            continue
        bx, by = array("d", xs), array("d", ys)
        if _compiled.colliding_pairs(bx, by, 1.0) != _kernels_py.colliding_pairs(xs, ys, 1.0):
            print("backends disagree", file=sys.stderr)
            return 1
        t_c = best_time(lambda: _compiled.colliding_pairs(bx, by, 1.0), args.repeat)
        print(f"{n:>6} {t_py:>12.3e} {t_c:>12.3e} {t_py / t_c:>8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
