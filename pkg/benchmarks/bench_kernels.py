"""Compare the numba and pure-numpy kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--size scaled|full]

Reports the best wall time of each kernel per backend at the array sizes of
the blind-tracking scenarios, plus the speedup.  The first numba call is
excluded (compilation, or cache load).
"""

import argparse
import timeit

import numpy as np

from fbmc_mimo import _kernels

SIZES = {
    # (L, M, N): subcarriers, antennas, symbols per packet
    "scaled": (64, 64, 512),
    "full": (256, 128, 512),
}


def cases(L, M, N, rng):
    hop, K = L // 2, 4
    taps = rng.standard_normal(K * L + 1)
    n_out = (N - 1) * hop + taps.size
    blocks = rng.standard_normal((M, N, L)) + 1j * rng.standard_normal((M, N, L))
    signal = rng.standard_normal((M, n_out)) + 1j * rng.standard_normal((M, n_out))
    S = N - 2 * K
    x = rng.standard_normal((L, M, S)) + 1j * rng.standard_normal((L, M, S))
    w0 = (rng.standard_normal((L, M)) + 1j * rng.standard_normal((L, M))) / M
    return {
        "overlap_add": lambda b: b.overlap_add(blocks, taps, hop, n_out),
        "fold_frames": lambda b: b.fold_frames(signal, taps, hop, L, N),
        "godard_sweep": lambda b: b.godard_sweep(w0.copy(), x, 1.0, 0.3, 32, 1e-12),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--size", choices=sorted(SIZES), default="scaled")
    args = parser.parse_args(argv)
    L, M, N = SIZES[args.size]
    print(f"size={args.size} L={L} M={M} N={N} backends={sorted(_kernels.BACKENDS)}")
    print(f"{'kernel':<14}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, run in cases(L, M, N, np.random.default_rng(0)).items():
        times = {}
        for backend, impl in _kernels.BACKENDS.items():
            run(impl)  # warm up
            times[backend] = min(timeit.repeat(lambda: run(impl), number=1, repeat=args.repeat))
        nb = times.get("numba", float("nan"))
        print(f"{name:<14}{times['numpy']:>12.4f}{nb:>12.4f}{times['numpy'] / nb:>10.1f}")


if __name__ == "__main__":
    main()
