"""Benchmark the compiled block-coding kernel against the numpy fallback.

The kernel quantizes each block, accumulates the exp-Golomb rate over the
zigzag scan, and dequantizes. Both implementations return bit-identical
results; this script only compares speed. Run after installing the package:

    python3 benchmarks/bench_kernels.py [--blocks 4096] [--repeats 7]
"""

import argparse
import time

import numpy as np

from freqscale import kernels
from freqscale._kernels_py import code_blocks as code_blocks_py
from freqscale.kernels import zigzag_order

try:
    from freqscale import _kernels

    code_blocks_c = _kernels.code_blocks
except ImportError:
    code_blocks_c = None


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--blocks", type=int, default=4096,
                        help="blocks per measurement (default 4096)")
    parser.add_argument("--repeats", type=int, default=7,
                        help="best-of repeats (default 7)")
    args = parser.parse_args()

    if code_blocks_c is None:
        print("compiled extension not available; showing fallback only")
    print(f"{'B':>3} {'blocks':>7} {'numpy ms':>10} {'compiled ms':>12} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for size in (4, 8, 16, 32):
        coeffs = np.ascontiguousarray(rng.normal(0, 120, size=(args.blocks, size, size)))
        steps = np.ascontiguousarray(rng.uniform(0.5, 10, size=(size, size)))
        scan = zigzag_order(size)

        t_py = best_of(lambda: code_blocks_py(coeffs, steps, scan), args.repeats)
        if code_blocks_c is not None:
            t_c = best_of(lambda: code_blocks_c(coeffs, steps, scan), args.repeats)
            bits_py = code_blocks_py(coeffs, steps, scan)[0]
            bits_c = code_blocks_c(coeffs, steps, scan)[0]
            assert bits_py == bits_c, "kernel outputs diverged"
            print(f"{size:>3} {args.blocks:>7} {t_py * 1e3:>10.2f} "
                  f"{t_c * 1e3:>12.2f} {t_py / t_c:>7.1f}x")
        else:
            print(f"{size:>3} {args.blocks:>7} {t_py * 1e3:>10.2f} {'-':>12} {'-':>8}")

    active = "compiled" if kernels.HAVE_EXTENSION else "numpy fallback"
    print(f"\nactive implementation in this environment: {active}")


if __name__ == "__main__":
    main()
