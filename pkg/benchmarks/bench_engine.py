#!/usr/bin/env python3
"""Benchmark the jitted period kernel against the pure-Python/NumPy fallback.

Runs the same replications through both kernel builds, checks the outputs
are bit-identical, and reports wall-clock times and the speedup.

    python benchmarks/bench_engine.py [--periods N] [--targets V] [--attackers A]
"""

import argparse
import time

import numpy as np

from cv2xsim import derive_streams, validate_config
from cv2xsim.engine import kernel_args, load_kernel


def run_once(kernel, cfg):
    agents = cfg.num_targets + cfg.num_attackers
    streams = derive_streams(cfg.master_seed, 0, agents)
    args = kernel_args(cfg, streams)
    start = time.perf_counter()
    out = kernel.run_periods(*args)
    return time.perf_counter() - start, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--periods", type=int, default=20_000)
    parser.add_argument("--targets", type=int, default=20)
    parser.add_argument("--attackers", type=int, default=5)
    args = parser.parse_args()

    cfg = validate_config({
        "num_targets": args.targets,
        "num_attackers": args.attackers,
        "oneshot_enabled": True,
        "sim_periods": args.periods,
        "master_seed": 2025,
    })

    jit = load_kernel()
    pure = load_kernel(pure=True)
    if not jit.USING_NUMBA:
        print("numba unavailable or disabled; both paths run interpreted")

    # warm-up compiles the jitted kernel outside the timed region
    warm = validate_config(cfg, sim_periods=100)
    run_once(jit, warm)

    t_jit, out_jit = run_once(jit, cfg)
    t_pure, out_pure = run_once(pure, cfg)

    identical = (
        out_jit[0] == out_pure[0]
        and np.array_equal(out_jit[1], out_pure[1])
        and np.array_equal(out_jit[2], out_pure[2])
    )

    agent_periods = args.periods * (args.targets + args.attackers)
    print(f"scenario: V={args.targets} A={args.attackers} periods={args.periods}")
    print(f"jitted:   {t_jit:8.3f} s  ({agent_periods / t_jit / 1e6:8.1f} M agent-periods/s)")
    print(f"fallback: {t_pure:8.3f} s  ({agent_periods / t_pure / 1e6:8.1f} M agent-periods/s)")
    print(f"speedup:  {t_pure / t_jit:.1f}x")
    print(f"outputs bit-identical: {identical}")
    return 0 if identical else 1


if __name__ == "__main__":
    raise SystemExit(main())
