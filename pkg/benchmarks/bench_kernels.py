"""Time the compiled kernels against the numpy fallback.

Each kernel runs on a 256x256 input; the table reports the median of
``--repeat`` timings per backend and the speedup. The last two rows time 50
PALMNUT iterations on the 128x128 denoise and recon instances.

Usage::

    python benchmarks/bench_kernels.py --repeat 20
"""
import argparse
import time

import numpy as np

from palmnut import kernels
from palmnut.experiments import BUILDERS, resolve_config
from palmnut.solvers import SolverConfig, run_palmnut


def median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def cases(n=256, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    x = rng.standard_normal((n, n))
    mag_sq = np.abs(z) ** 2
    denoise = BUILDERS["denoise"](resolve_config("denoise", {"size": "128"}))
    recon = BUILDERS["recon"](resolve_config("recon", {"size": "128"}))
    cfg = SolverConfig(max_outer_iter=50)
    return {
        "dwt4 forward": lambda: kernels.dwt4_last_axis(x),
        "dwt4 inverse": lambda: kernels.dwt4_last_axis(x, inverse=True),
        "unit modulus": lambda: kernels.unit_modulus(z),
        "huber weights": lambda: kernels.huber_weights(mag_sq, 0.1),
        "huber sum": lambda: kernels.huber_sum(mag_sq, 0.1),
        "soft threshold": lambda: kernels.soft_threshold(z, 0.5),
        "palmnut denoise": lambda: run_palmnut(denoise.prob, denoise.init, cfg),
        "palmnut recon": lambda: run_palmnut(recon.prob, recon.init, cfg),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    print(f"{'kernel':<18}" + "".join(f"{b + ' [ms]':>16}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases().items():
        repeat = max(3, args.repeat // 5) if name.startswith("palmnut") else args.repeat
        row = {}
        for b in backends:
            with kernels.backend(b):
                fn()
                row[b] = median_time(fn, repeat)
        speedup = row["python"] / row["cython"] if "cython" in row else float("nan")
        print(f"{name:<18}" + "".join(f"{1e3 * row[b]:>16.3f}" for b in backends) + f"{speedup:>10.2f}")


if __name__ == "__main__":
    main()
