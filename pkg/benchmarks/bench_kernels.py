"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the four shared kernel entry points over a dense angle grid and
prints one row per (kernel, family) pair with the best-of-N wall time
for each backend and the resulting speedup.

Usage:
    python3 benchmarks/bench_kernels.py [--size N] [--repeats R]
"""

import argparse
import math
import time

import numpy as np

from expface import _kernels_py

try:
    from expface import _kernels_cy
except ImportError:
    _kernels_cy = None

CASES = (
    ("plain", _kernels_py.PLAIN, 0.0),
    ("sphereface", _kernels_py.SPHEREFACE, 1.7),
    ("cosface", _kernels_py.COSFACE, 0.4),
    ("arcface", _kernels_py.ARCFACE, 0.5),
    ("expface", _kernels_py.EXPFACE, 0.7),
)

SCALE = 64.0
BIAS = SCALE * math.cos(math.pi / 2) + math.log(10572.0)


def _kernel_calls(module, grid):
    return (
        ("similarity", lambda f, m: module.similarity(f, m, grid)),
        ("similarity_derivative", lambda f, m: module.similarity_derivative(f, m, grid)),
        ("scalar_loss", lambda f, m: module.scalar_loss(f, m, SCALE, BIAS, grid)),
        ("loss_gradient", lambda f, m: module.loss_gradient(f, m, SCALE, BIAS, grid)),
    )


def _best_time(call, family, margin, repeats):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        call(family, margin)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=200001, help="grid points per call")
    parser.add_argument("--repeats", type=int, default=5, help="timed repeats, best kept")
    args = parser.parse_args()

    grid = np.linspace(1e-7, math.pi - 1e-7, args.size)
    py_calls = dict(_kernel_calls(_kernels_py, grid))
    cy_calls = dict(_kernel_calls(_kernels_cy, grid)) if _kernels_cy else {}

    header = f"{'kernel':<22} {'family':<12} {'python ms':>10} {'cython ms':>10} {'speedup':>8}"
    print(f"grid size {args.size}, best of {args.repeats} repeats")
    print(header)
    print("-" * len(header))
    for kernel, py_call in py_calls.items():
        for name, family, margin in CASES:
            py_ms = _best_time(py_call, family, margin, args.repeats) * 1e3
            if cy_calls:
                cy_ms = _best_time(cy_calls[kernel], family, margin, args.repeats) * 1e3
                ratio = f"{py_ms / cy_ms:7.2f}x"
                cy_text = f"{cy_ms:10.3f}"
            else:
                cy_text, ratio = f"{'n/a':>10}", f"{'n/a':>8}"
            print(f"{kernel:<22} {name:<12} {py_ms:10.3f} {cy_text} {ratio}")
    if not cy_calls:
        print("compiled kernels unavailable; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
