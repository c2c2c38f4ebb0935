"""Benchmark the hot kernels: numba-compiled vs pure numpy.

Runs each kernel on oracle-shaped workloads (small frames, many mutants)
and prints per-call timings and the speedup.  Requires the numba path to be
active; run with PATCHCERT_KERNELS unset or set to "numba".
"""

import sys
import time

import numpy as np

from patchcert import kernels


def benchmark(name, numba_fn, numpy_fn, iterations=2000):
    numba_fn()
    numpy_fn()

    start = time.perf_counter()
    for _ in range(iterations):
        numba_fn()
    numba_time = (time.perf_counter() - start) / iterations

    start = time.perf_counter()
    for _ in range(iterations):
        numpy_fn()
    numpy_time = (time.perf_counter() - start) / iterations

    print(f"{name:32s} numba {numba_time * 1e6:8.2f} us   "
          f"numpy {numpy_time * 1e6:8.2f} us   speedup {numpy_time / numba_time:5.2f}x")


def main():
    if not kernels.USE_NUMBA:
        print("numba path is not active (PATCHCERT_KERNELS=numpy or numba missing);"
              " nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    for width, masks_per_axis in ((6, 3), (12, 4)):
        n = width * width
        m = masks_per_axis ** 2
        pixels = rng.integers(0, 3, size=n)
        pair_keeps = rng.integers(0, 2, size=(m * m, n)).astype(np.uint8)
        batch = rng.integers(0, 3, size=(m * m, n))
        weights = np.arange(1, n + 1, dtype=np.int64)
        patches = rng.integers(0, 2, size=((width - 1) ** 2, n)).astype(np.uint8)
        bands = rng.integers(0, 2, size=(width, n)).astype(np.uint8)
        labels = rng.integers(0, 3, size=m * m)
        alphabet = np.array([0, 1, 2], dtype=np.int64)

        print(f"\nframe {width}x{width}, {m} masks, {m * m} mask pairs")
        benchmark("apply_keeps (pair mutants)",
                  lambda: kernels.apply_keeps(pixels, pair_keeps),
                  lambda: kernels.apply_keeps_np(pixels, pair_keeps))
        benchmark("modsum_labels",
                  lambda: kernels.modsum_labels(batch, 3),
                  lambda: kernels.modsum_labels_np(batch, 3))
        benchmark("weighted_labels",
                  lambda: kernels.weighted_labels(batch, weights, 3),
                  lambda: kernels.weighted_labels_np(batch, weights, 3))
        benchmark("overlap_counts",
                  lambda: kernels.overlap_counts(patches, bands),
                  lambda: kernels.overlap_counts_np(patches, bands))
        benchmark("containment",
                  lambda: kernels.containment(patches, pair_keeps),
                  lambda: kernels.containment_np(patches, pair_keeps))
        benchmark("enum_contents (4 cells)",
                  lambda: kernels.enum_contents(4, alphabet),
                  lambda: kernels.enum_contents_np(4, alphabet))
        benchmark("tally",
                  lambda: kernels.tally(labels, 3),
                  lambda: kernels.tally_np(labels, 3))
    return 0


if __name__ == "__main__":
    sys.exit(main())
