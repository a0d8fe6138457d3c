"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--N 2048] [--repeat 5]

The second half runs a short power iteration end to end in two child
processes, one with DHTLAB_NUMBA=0, so module-level dispatch is exercised
the same way a user would see it.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dhtlab.estimate import kernels
from dhtlab.estimate.windowed import WindowedOperator
from dhtlab.operators import K

END_TO_END = """
import time
from dhtlab.estimate import WindowedOperator, power_iterate, USE_NUMBA
from dhtlab.operators import K
w = WindowedOperator.from_kind(K, {N})
power_iterate(w, 4.0, 2, starts=("profile",), method="direct")  # warm-up / JIT
t = time.perf_counter()
r = power_iterate(w, 4.0, {iters}, starts=("profile",), method="direct")
print(USE_NUMBA, time.perf_counter() - t, r.best_ratio)
"""


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--iters", type=int, default=20)
    args = ap.parse_args()

    if not kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    w = WindowedOperator.from_kind(K, args.N)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(w.size)
    p = 4.0

    cases = [
        ("direct_convolve", lambda: kernels.direct_convolve_nb(w.row, x), lambda: kernels.direct_convolve_np(w.row, x)),
        ("compensated_convolve", lambda: kernels.compensated_convolve_nb(w.row, x), lambda: kernels.compensated_convolve_np(w.row, x)),
        ("duality_map", lambda: kernels.duality_map_nb(x, p), lambda: kernels.duality_map_np(x, p)),
        ("lp_norm", lambda: kernels.lp_norm_nb(x, p), lambda: kernels.lp_norm_np(x, p)),
    ]
    print(f"kernel timings, N={args.N} (window length {w.size}), best of {args.repeat}")
    print(f"{'kernel':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, nb, np_ in cases:
        nb()  # compile outside the timed region
        t_nb, t_np = best_of(nb, args.repeat), best_of(np_, args.repeat)
        print(f"{name:<22}{t_nb:>12.5f}{t_np:>12.5f}{t_np / t_nb:>9.1f}x")
    t_fft = best_of(lambda: w.apply_fft(x), args.repeat)
    print(f"{'fft apply (reference)':<22}{t_fft:>12.5f}")

    print(f"\npower iteration, direct convolution, {args.iters} iterations")
    code = END_TO_END.format(N=args.N, iters=args.iters)
    for flag in ("1", "0"):
        env = dict(os.environ, DHTLAB_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, seconds, ratio = res.stdout.split()
        label = "numba" if backend == "True" else "numpy"
        print(f"{label:<8}{float(seconds):>10.3f}s  best_ratio={float(ratio):.12f}")


if __name__ == "__main__":
    main()
