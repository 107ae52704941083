#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the pure-Python backend.

Times the hot numeric routines (plant integration, prediction-model
derivative, output map) on representative states and prints per-call
timings plus the speedup factor.

Usage:
    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import sys
import time

import numpy as np

from ftmpc import _kernels_py as pure
from ftmpc.params import (
    N_OUTPUTS,
    N_PLANT_STATES,
    N_STATES,
    TireParams,
    VehicleParams,
    plant_state,
    vehicle_state,
)

try:
    from ftmpc import _kernels as compiled
except ImportError:
    compiled = None

VP = VehicleParams().pack()
TP = TireParams().pack()


def bench(fn, repeat):
    # best-of-5 batches to suppress scheduler noise
    best = math.inf
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def make_cases():
    x = vehicle_state(v_x=14.0, v_y=0.3, psi=0.05, psi_dot=0.2,
                      delta=np.full(4, 0.05), lam=np.full(4, 0.02))
    u = np.full(8, 0.1)
    xp = plant_state(v_x=14.0, v_y=0.3, psi_dot=0.2,
                     delta=np.full(4, 0.05), params=VehicleParams())
    torque = np.array([150.0, -100.0, 80.0, 60.0])
    rate = np.full(4, 0.05)
    lo = np.full(4, -math.radians(30.0))
    hi = np.full(4, math.radians(30.0))

    def cases_for(mod):
        out_x = np.empty(N_STATES)
        out_y = np.empty(N_OUTPUTS)
        out_p = np.empty(N_PLANT_STATES)
        return {
            "pred_rhs": lambda: mod.pred_rhs(x, u, 0.02, VP, TP, out_x),
            "pred_step": lambda: mod.pred_step(x, u, 0.02, 0.05, VP, TP,
                                               out_x),
            "output_vec": lambda: mod.output_vec(x, VP, out_y),
            "plant_step (1 ms)": lambda: mod.plant_step(
                xp, torque, rate, 1e-3, VP, TP, False, lo, hi, out_p),
        }

    return cases_for


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20000,
                    help="calls per timing batch (default 20000)")
    args = ap.parse_args(argv)

    if compiled is None:
        print("compiled extension not available; showing pure backend only",
              file=sys.stderr)

    cases_for = make_cases()
    pure_cases = cases_for(pure)
    comp_cases = cases_for(compiled) if compiled is not None else {}

    name_w = max(len(n) for n in pure_cases)
    header = (f"{'kernel':<{name_w}}  {'pure [us]':>10}  "
              f"{'compiled [us]':>13}  {'speedup':>8}")
    print(header)
    print("-" * len(header))
    for name, fn in pure_cases.items():
        t_pure = bench(fn, args.repeat)
        if compiled is not None:
            t_comp = bench(comp_cases[name], args.repeat)
            ratio = t_pure / t_comp if t_comp > 0 else float("inf")
            print(f"{name:<{name_w}}  {t_pure * 1e6:>10.2f}  "
                  f"{t_comp * 1e6:>13.2f}  {ratio:>7.1f}x")
        else:
            print(f"{name:<{name_w}}  {t_pure * 1e6:>10.2f}  "
                  f"{'-':>13}  {'-':>8}")

    # one simulated second of plant time = 1000 inner steps
    xp = plant_state(v_x=14.0, params=VehicleParams())
    torque = np.zeros(4)
    rate = np.zeros(4)
    lo = np.full(4, -math.radians(30.0))
    hi = np.full(4, math.radians(30.0))

    def roll(mod):
        state = xp.copy()
        out = np.empty(N_PLANT_STATES)
        t0 = time.perf_counter()
        for _ in range(1000):
            mod.plant_step(state, torque, rate, 1e-3, VP, TP, False, lo, hi,
                           out)
            state, out = out, state
        return time.perf_counter() - t0

    t_pure = min(roll(pure) for _ in range(3))
    line = f"plant roll, 1 simulated second: pure {t_pure * 1e3:.1f} ms"
    if compiled is not None:
        t_comp = min(roll(compiled) for _ in range(3))
        line += (f", compiled {t_comp * 1e3:.1f} ms"
                 f" ({t_pure / t_comp:.1f}x)")
    print()
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
