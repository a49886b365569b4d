"""Benchmark the compiled raster kernels against the numpy fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--size 1024] [--repeats 5]

Both backends are imported directly (no environment tricks), timed on the
same inputs, and checked for bit-identical output before the table prints.
"""

from __future__ import annotations

import argparse
import random
import statistics
import sys
import time

import numpy as np

from sledge._kernels import fallback

try:
    from sledge._kernels import _core
except ImportError:
    _core = None


def random_rgba(rng: random.Random, width: int, height: int) -> np.ndarray:
    data = rng.randbytes(width * height * 4)
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width, 4).copy()


def random_mask(rng: random.Random, width: int, height: int) -> np.ndarray:
    data = np.frombuffer(rng.randbytes(width * height), dtype=np.uint8)
    return (data & 1).reshape(height, width).copy()


def time_call(fn, args, repeats: int) -> float:
    """Best-of-N wall time in milliseconds."""
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        samples.append((time.perf_counter() - start) * 1000.0)
    return min(samples)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=1024, help="canvas side in px")
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats")
    args = parser.parse_args()

    if _core is None:
        print("compiled extension not available; nothing to compare", file=sys.stderr)
        return 1

    rng = random.Random(0xBEEF)
    size = args.size
    base = random_rgba(rng, size, size)
    edited = random_rgba(rng, size, size)
    mask_a = random_mask(rng, size, size)
    mask_b = random_mask(rng, size, size)

    cases = [
        ("source_over", (base, edited)),
        ("blend_select", (base, edited, mask_a)),
        ("dilate_binary r=5", (mask_a, 5)),
        ("iou_counts", (mask_a, mask_b)),
    ]

    rows = []
    for label, call_args in cases:
        name = label.split()[0]
        compiled_fn = getattr(_core, name)
        fallback_fn = getattr(fallback, name)
        got = compiled_fn(*call_args)
        want = fallback_fn(*call_args)
        if isinstance(got, tuple):
            identical = tuple(got) == tuple(want)
        else:
            identical = np.array_equal(np.asarray(got), np.asarray(want))
        if not identical:
            print(f"MISMATCH in {label}: backends disagree", file=sys.stderr)
            return 1
        compiled_ms = time_call(compiled_fn, call_args, args.repeats)
        fallback_ms = time_call(fallback_fn, call_args, args.repeats)
        rows.append((label, compiled_ms, fallback_ms))

    print(f"kernel benchmark @ {size}x{size}, best of {args.repeats}\n")
    header = f"{'kernel':<20}{'compiled (ms)':>15}{'fallback (ms)':>15}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    speedups = []
    for label, compiled_ms, fallback_ms in rows:
        ratio = fallback_ms / compiled_ms if compiled_ms > 0 else float("inf")
        speedups.append(ratio)
        print(f"{label:<20}{compiled_ms:>15.3f}{fallback_ms:>15.3f}{ratio:>9.2f}x")
    print(f"\ngeometric-mean speedup: {statistics.geometric_mean(speedups):.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
