"""Time the compiled and pure-Python market kernels on identical inputs.

Usage: python3 benchmarks/bench_kernels.py [--periods N] [--repeat K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from behavcal.abm import kernels
from behavcal.abm.config import Heterogeneous, MarketConfig
from behavcal.abm.model import _run_kernel, draw_shocks, trader_types
from behavcal.seeding import derive_rng

CASES = {
    "two-type": MarketConfig(theta_extrap=0.88),
    "two-type+cost": MarketConfig(theta_extrap=0.88, trading_cost=0.001),
    "heterogeneous-100": MarketConfig(heterogeneous=Heterogeneous()),
}


def time_kernel(kernel, cfg: MarketConfig, repeat: int) -> tuple[float, np.ndarray]:
    rng = derive_rng(cfg.seed, "abm", 0)
    shocks, _ = draw_shocks(cfg, rng)
    types = trader_types(cfg, rng)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        _, p, _ = _run_kernel(cfg, shocks, types, kernel)
        best = min(best, time.perf_counter() - t0)
    return best, p


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--periods", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    compiled = kernels.compiled_kernel()
    if compiled is None:
        print("compiled kernel not built; only the Python kernel is timed")
    print(f"{'case':<20}{'python s':>12}{'cython s':>12}{'speedup':>10}  identical")
    for name, cfg in CASES.items():
        cfg = cfg.with_(periods=args.periods)
        t_py, p_py = time_kernel(kernels.python_kernel, cfg, args.repeat)
        if compiled is None:
            print(f"{name:<20}{t_py:>12.4f}{'-':>12}{'-':>10}  -")
            continue
        t_cy, p_cy = time_kernel(compiled, cfg, args.repeat)
        same = np.array_equal(p_py, p_cy)
        print(f"{name:<20}{t_py:>12.4f}{t_cy:>12.5f}{t_py / t_cy:>10.1f}  {same}")


if __name__ == "__main__":
    main()
