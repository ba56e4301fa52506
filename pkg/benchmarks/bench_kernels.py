"""Time the numba and numpy kernels on campaign-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

The numba column excludes the first (compiling) call.
"""

import argparse
import time

import numpy as np

from isacfbl import kernels
from isacfbl.capgeom import sample_sphere


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        print("numba is not installed; only the numpy kernels can be timed")

    rng = np.random.default_rng(0)
    cases = []
    for N, M, T in [(20, 16, 4096), (40, 64, 4096), (20, 256, 4096)]:
        C = sample_sphere(N, 10.0 * N, rng, size=M)
        noise = rng.standard_normal((T, N)) + 1j * rng.standard_normal((T, N))
        Y = 1.2 * C[rng.integers(0, M, T)] + 0.7 * noise
        cases.append((f"decode_estimate N={N} M={M} T={T}", "decode_estimate", (Y, C, 1.2 + 0j), 1))
    for N, M in [(20, 64), (40, 512)]:
        X = sample_sphere(N, 10.0 * N, rng, size=M)
        cases.append((f"max_pairwise_bias N={N} M={M}", "max_pairwise_bias", (X, 10.0 * N), 1))
    # the codebook builder calls this once per candidate on tiny inputs
    X = sample_sphere(20, 200.0, rng, size=15)
    x = sample_sphere(20, 200.0, rng)
    cases.append(("max_bias_to_set N=20 M=15 (x1000)", "max_bias_to_set", (X, x, 200.0), 1000))

    print(f"{'kernel':<42}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for label, name, fn_args, calls in cases:
        def timed(fn):
            return best_of(lambda: [fn(*fn_args) for _ in range(calls)], args.repeat)

        t_np = timed(getattr(kernels, f"{name}_numpy"))
        if kernels.HAS_NUMBA:
            nb_fn = getattr(kernels, f"{name}_numba")
            nb_fn(*fn_args)
            t_nb = timed(nb_fn)
            print(f"{label:<42}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}")
        else:
            print(f"{label:<42}{1e3 * t_np:>12.3f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
