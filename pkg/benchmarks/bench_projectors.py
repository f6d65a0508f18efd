"""Benchmark the projector kernels: numba @njit vs pure numpy.

The numba path is the default; PDMM_DISABLE_NUMBA=1 selects the numpy
fallback at import time.  This script times both builds in one process and
checks that they agree to rounding.

Run:
    python3 benchmarks/bench_projectors.py [--size 64] [--angles 20] [--bins 90]
"""

import argparse
import time

import numpy as np

from pdmm._kernels import get_impl
from pdmm.radon import SinogramGeometry


def time_fn(fn, args, repeats):
    fn(*args)  # warmup (includes JIT compilation for the numba path)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append((time.perf_counter() - t0) * 1000.0)
    return float(np.mean(times)), float(np.std(times))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--angles", type=int, default=20)
    parser.add_argument("--bins", type=int, default=90)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    geom = SinogramGeometry(args.angles, args.bins)
    rng = np.random.default_rng(0)
    img = rng.random((args.size, args.size))
    sino = rng.random((args.angles, args.bins))
    ct, st = np.cos(geom.angles), np.sin(geom.angles)

    numba_impl = get_impl("numba")
    numpy_impl = get_impl("numpy")

    cases = [
        ("line_forward", (img, ct, st, geom.s0, 1.0, args.bins, 1.0)),
        ("line_backward", (sino, ct, st, geom.s0, 1.0, args.size, args.size, 1.0)),
        ("strip_forward", (img, ct, st, geom.s0, 1.0, args.bins, 1.0)),
        ("strip_backward", (sino, ct, st, geom.s0, 1.0, args.size, args.size, 1.0)),
    ]

    print(f"image {args.size}x{args.size}, {args.angles} angles, {args.bins} bins, "
          f"{args.repeats} repeats")
    print(f"{'kernel':<15} {'numba ms':>12} {'numpy ms':>12} {'speedup':>9} {'max |diff|':>12}")
    for name, case_args in cases:
        nb_mean, nb_std = time_fn(numba_impl[name], case_args, args.repeats)
        np_mean, np_std = time_fn(numpy_impl[name], case_args, args.repeats)
        a = numba_impl[name](*case_args)
        b = numpy_impl[name](*case_args)
        diff = np.abs(a - b).max()
        print(
            f"{name:<15} {nb_mean:>8.3f}+/-{nb_std:<4.2f} "
            f"{np_mean:>8.3f}+/-{np_std:<4.2f} {np_mean / nb_mean:>8.1f}x {diff:>12.2e}"
        )
        if diff > 1e-10 * (1 + np.abs(a).max()):
            raise SystemExit(f"paths disagree on {name}: {diff}")
    print("both kernel builds agree to rounding")


if __name__ == "__main__":
    main()
