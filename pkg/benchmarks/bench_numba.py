#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against the pure-Python fallback.

Runs each workload twice in subprocesses: once normally and once with
MARCINCLT_NO_NUMBA=1.  Results are verified to be bit-identical (both paths
consume the same pre-drawn random streams) before speedups are reported.

Usage: python benchmarks/bench_numba.py [--quick]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOADS = {
    "ising_chain_sweeps": """
import time, numpy as np
from marcinclt import spin
m = spin.ising_model(1, 512, beta=0.5, field=0.2)
t0 = time.perf_counter()
tot = spin.metropolis_totals(m, {n}, burn_in=200, thinning=2, seed=11)
dt = time.perf_counter() - t0
print(repr((dt, float(tot.sum()))))
""",
    "xy_chain_sweeps": """
import time, numpy as np
from marcinclt import spin
m = spin.xy_model(1, 256, beta=0.7, coupling=(1.0, 0.3), field=(0.3, 0.0))
t0 = time.perf_counter()
tot = spin.metropolis_totals(m, {n}, burn_in=100, thinning=2, seed=12)
dt = time.perf_counter() - t0
print(repr((dt, float(tot.sum()))))
""",
    "heisenberg_sweeps": """
import time, numpy as np
from marcinclt import spin
m = spin.heisenberg_model(1, 128, beta=0.6, coupling=(1.0, 0.2, 0.1),
                          field=(0.4, 0.0, 0.0))
t0 = time.perf_counter()
tot = spin.metropolis_totals(m, {n}, burn_in=100, thinning=2, seed=13)
dt = time.perf_counter() - t0
print(repr((dt, float(tot.sum()))))
""",
    "alpha_det_n8": """
import time, numpy as np
from marcinclt import dpp
rng = np.random.default_rng(3)
a = rng.standard_normal((8, 8))
dpp.alpha_det(np.eye(2), 0.5)  # trigger compilation outside the timer
t0 = time.perf_counter()
acc = 0.0
for _ in range({n}):
    acc += dpp.alpha_det(a, 0.5)
dt = time.perf_counter() - t0
print(repr((dt, float(acc))))
""",
}

SIZES = {
    "ising_chain_sweeps": (20000, 2000),
    "xy_chain_sweeps": (10000, 1000),
    "heisenberg_sweeps": (10000, 1000),
    "alpha_det_n8": (20, 2),
}


def run_one(code, disable_numba):
    env = dict(os.environ)
    if disable_numba:
        env["MARCINCLT_NO_NUMBA"] = "1"
    else:
        env.pop("MARCINCLT_NO_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return eval(out.stdout.strip())  # (seconds, checksum)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true",
                    help="smaller workloads (for CI smoke runs)")
    ap.add_argument("--json", help="also dump results to this file")
    args = ap.parse_args()

    results = {}
    print(f"{'workload':26s} {'numba':>10s} {'fallback':>10s} {'speedup':>9s}")
    for name, template in WORKLOADS.items():
        n = SIZES[name][1 if args.quick else 0]
        code = template.format(n=n)
        t_numba, chk_a = run_one(code, disable_numba=False)
        t_plain, chk_b = run_one(code, disable_numba=True)
        if chk_a != chk_b:
            raise SystemExit(f"{name}: paths disagree ({chk_a} vs {chk_b})")
        speed = t_plain / t_numba if t_numba > 0 else float("inf")
        results[name] = {"numba_s": t_numba, "fallback_s": t_plain,
                         "speedup": speed, "checksum": chk_a}
        print(f"{name:26s} {t_numba:9.3f}s {t_plain:9.3f}s {speed:8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
        print(f"wrote {args.json}")


if __name__ == "__main__":
    main()
