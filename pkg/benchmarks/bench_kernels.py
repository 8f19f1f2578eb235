"""Compare the compiled and pure-Python kernels on the same workloads.

    python benchmarks/bench_kernels.py [--repeat N] [--scale X]

Each workload is timed under both backends (best of ``--repeat``) and the
results are checked for equality.
"""
from __future__ import annotations

import argparse
import time
from contextlib import contextmanager

import numpy as np

from lscdsim import _kernels_py, lscd, sprt
from lscdsim.lscd import NEVER, LocationConfig, UavConfig, simulate_many
from lscdsim.models import GaussianPair, Regime
from lscdsim.seeding import generator

try:
    from lscdsim import _kernels
except ImportError:  # extension not built
    _kernels = None


@contextmanager
def backend(k):
    saved = lscd.kernels, sprt.kernels
    lscd.kernels = sprt.kernels = k
    try:
        yield
    finally:
        lscd.kernels, sprt.kernels = saved


def workloads(scale: float):
    m = GaussianPair(0.0, 2.0, 1.0)
    loc = LocationConfig(5.0, 3, m)
    reps = max(10, int(200 * scale))
    cycles = max(1000, int(200_000 * scale))
    return {
        f"lscd runs (gamma=5, n=3, tau=3, {reps} reps)": lambda: simulate_many(loc, loc, UavConfig(3), NEVER, "A", reps, seed=1),
        f"sprt cycles (gamma=4, {cycles} cycles)": lambda: sprt.simulate_cycles(m, Regime.PRE, 4.0, 0.0, cycles, generator(1, 2)),
        f"first ascents ({cycles} samples)": lambda: sprt.simulate_first_ascents(m, cycles, generator(1, 3)),
    }


def best_time(fn, repeat: int):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b) -> bool:
    if isinstance(a, sprt.CycleBatch):
        return all(np.array_equal(getattr(a, f), getattr(b, f)) for f in ("top", "duration", "terminal"))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--scale", type=float, default=1.0, help="workload size multiplier")
    args = p.parse_args(argv)
    if _kernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    print(f"{'workload':52s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}  equal")
    for name, fn in workloads(args.scale).items():
        with backend(_kernels):
            tc, oc = best_time(fn, args.repeat)
        with backend(_kernels_py):
            tp, op = best_time(fn, args.repeat)
        print(f"{name:52s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}  {same(oc, op)}")


if __name__ == "__main__":
    main()
