"""Timing comparison of the compiled and pure-numpy kernel paths.

Runs the same workloads twice in subprocesses, once with POCRM_NUMBA=1 and
once with POCRM_NUMBA=0, and prints a side-by-side table.  Compilation time
is excluded by a warm-up call before timing.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time


def run_workloads() -> dict[str, float]:
    import pocrm as p

    grid = p.DoseGrid(3, 3)
    all42 = tuple(p.enumerate_orderings(grid))
    scenario = p.get_scenario(5)
    skeleton = p.Skeleton((0.10, 0.27, 0.32, 0.37, 0.45,
                           0.50, 0.54, 0.59, 0.64))
    design = p.PocrmDesign(grid=grid, skeleton=skeleton, orderings=all42)

    timings: dict[str, float] = {"numba": float(p.using_numba())}

    # warm-up: trigger compilation on every kernel used below
    p.check_pocrm_consistency(skeleton, all42, scenario, n_draws=50, seed=0)
    p.estimate_pcs(design, scenario, 60, 5, 0)
    p.po_benchmark(scenario, 60, 5, seed=0)

    t0 = time.perf_counter()
    p.check_pocrm_consistency(skeleton, all42, scenario, n_draws=1000, seed=1)
    timings["consistency_1k_draws"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    p.estimate_pcs(design, scenario, 60, 50, 1)
    timings["simulate_50_trials"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    p.po_benchmark(scenario, 60, 500, seed=1)
    timings["benchmark_500_trials"] = time.perf_counter() - t0

    return timings


def main() -> int:
    if len(sys.argv) > 1 and sys.argv[1] == "--worker":
        print(json.dumps(run_workloads()))
        return 0

    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, POCRM_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--worker"],
                             env=env, capture_output=True, text=True,
                             check=True)
        results[flag] = json.loads(out.stdout.strip().splitlines()[-1])
        if bool(results[flag].pop("numba")) != (flag == "1"):
            raise RuntimeError(f"POCRM_NUMBA={flag} did not select the "
                               f"expected kernel path")

    names = [k for k in results["1"] if k != "numba"]
    width = max(len(n) for n in names)
    print(f"{'workload'.ljust(width)}  {'numba':>10}  {'pure':>10}  "
          f"{'speedup':>8}")
    for name in names:
        jit, pure = results["1"][name], results["0"][name]
        print(f"{name.ljust(width)}  {jit:>9.3f}s  {pure:>9.3f}s  "
              f"{pure / jit:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
