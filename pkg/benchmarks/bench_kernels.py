#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the hot primitives (forward kinematics, Jacobian, servo step,
quaternion rotate, path length) and one full scripted experiment under each
backend.  Run after `pip install -e . --no-build-isolation`:

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import math
import os
import statistics
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat, inner):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        times.append((time.perf_counter() - t0) / inner)
    return min(times)


def bench_kernels(mod, arm, q, repeat):
    base_p = (0.0, 0.0, 0.0)
    base_q = (1.0, 0.0, 0.0, 0.0)
    quat = mod.quat_from_axis_angle(1.0, 2.0, 3.0, 0.7)
    vec = (0.1, -0.2, 0.3)
    pts = np.cumsum(np.full((2000, 3), 1e-4), axis=0)
    results = {
        "fk (7 joints)": best_of(lambda: mod.fk(arm._types, arm._params, q, base_p, base_q),
                                 repeat, 2000),
        "jacobian (7 joints)": best_of(
            lambda: mod.jacobian(arm._types, arm._params, q, base_p, base_q), repeat, 2000
        ),
        "quat_rotate": best_of(lambda: mod.quat_rotate(quat, vec), repeat, 20000),
        "servo_step": best_of(
            lambda: mod.servo_step((0, 0, 0), (1, 0, 0, 0), (0.1, 0, 0),
                                   quat, 0.5, math.pi, 1e-3),
            repeat, 20000,
        ),
        "path_length (2000 pts)": best_of(lambda: mod.path_length(pts), repeat, 50),
    }
    return results


def bench_experiment(backend):
    """Run one scripted experiment in a subprocess pinned to a backend."""
    code = (
        "import time\n"
        "from teleoscale.experiment import ExperimentConfig, run_experiment\n"
        "from teleoscale.follower import ReachTask\n"
        "from teleoscale.channel import ChannelConfig\n"
        "from teleoscale.operators import OperatorSpec\n"
        "from teleoscale.scaling import ScalingConfig\n"
        "cfg = ExperimentConfig(label='bench',\n"
        "    task=ReachTask(((0.06, 0.0, 0.0),), tolerance=1e-6, dwell_ticks=50),\n"
        "    scaling=ScalingConfig(0.30, 0.0), command_channel=ChannelConfig(250, seed=3),\n"
        "    operator=OperatorSpec('scripted', speed=0.05), tick_budget=100000, seed=5)\n"
        "t0 = time.perf_counter(); res = run_experiment(cfg)\n"
        "el = time.perf_counter() - t0\n"
        "print(f'{el:.4f} {res.completed_tick} {len(res.records)}')\n"
    )
    env = dict(os.environ, TELEOSCALE_KERNELS=backend)
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    elapsed, completed, ticks = out.stdout.split()
    return float(elapsed), int(completed), int(ticks)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    from teleoscale import _kernels_py
    from teleoscale._backend import available_backends
    from teleoscale.experiment import data_path
    from teleoscale.kinematics import load_chain

    arm = load_chain(data_path("chains/arm7.chain"))
    q = np.ascontiguousarray(np.linspace(-0.5, 0.5, arm.n))

    backends = {"python": _kernels_py}
    if "compiled" in available_backends():
        from teleoscale import _kernels

        backends["compiled"] = _kernels
    else:
        print("note: compiled kernels unavailable; showing python only")

    rows = {}
    for name, mod in backends.items():
        rows[name] = bench_kernels(mod, arm, q, args.repeat)

    names = list(next(iter(rows.values())))
    width = max(len(n) for n in names)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>14}" for b in rows)
    if len(rows) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for n in names:
        line = f"{n:<{width}}  "
        for b in rows:
            line += f"{rows[b][n] * 1e6:>12.2f}us"
        if len(rows) == 2:
            line += f"{rows['python'][n] / rows['compiled'][n]:>9.1f}x"
        print(line)

    print()
    print("full scripted experiment (0.06 m reach, d=250, ~4.3k ticks):")
    for backend in rows:
        elapsed, completed, ticks = bench_experiment(backend)
        print(f"  {backend:>9}: {elapsed:.3f}s  ({ticks} ticks, completed at {completed})")


if __name__ == "__main__":
    main()
