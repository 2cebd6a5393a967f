#!/usr/bin/env python3
"""Benchmark the compiled inner loops against the pure-Python fallback.

Runs the fixed-step splitting integrators, the adaptive controller and
projected gradient descent on the d=10 sphere quadratic, once per backend,
and reports wall time, speedup and the worst final-state deviation.

Usage: python3 benchmarks/bench_backends.py [--dim 10] [--steps 20000]
"""

import argparse
import time

import numpy as np

from csopt import (AdaptiveConfig, GdConfig, IntegratorConfig, SphereConstraint,
                   SpectrumRange, StoppingRule, adaptive_optimize,
                   compiled_available, gd_optimize, generate_matrix, optimize,
                   standard_initial_state)


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, default=10)
    parser.add_argument("--steps", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    if not compiled_available():
        print("compiled kernels are not built; nothing to compare")
        return 1

    man = SphereConstraint(args.dim)
    prob = generate_matrix(SpectrumRange(-1.0, 1.0), args.dim, args.seed)
    ham = prob.hamiltonian()
    s0 = standard_initial_state(args.dim)
    # Unreachable target: every run spends the full step budget.
    stop = StoppingRule.oracle(float("-inf"), max_iterations=args.steps)

    cases = {
        "sm1 fixed": lambda mode: optimize(
            man, ham, s0, IntegratorConfig(0.05, gamma=0.5), "sm1", stop,
            backend_mode=mode),
        "sm2 fixed": lambda mode: optimize(
            man, ham, s0, IntegratorConfig(0.05, gamma=0.5), "sm2", stop,
            backend_mode=mode),
        "adaptive": lambda mode: adaptive_optimize(
            man, ham, s0, AdaptiveConfig(h0=0.05, h_max=0.05),
            IntegratorConfig(0.05, gamma=0.5), stop, backend_mode=mode),
        "gd": lambda mode: gd_optimize(
            prob, s0.q, GdConfig(0.45, max_iterations=args.steps),
            f_target=float("-inf"), backend_mode=mode),
    }

    print(f"dim={args.dim} steps={args.steps} seed={args.seed}")
    print(f"{'case':<10} {'python':>10} {'compiled':>10} {'speedup':>8} {'max dev':>10}")
    for name, run in cases.items():
        rep_py, t_py = timed(lambda: run("python"))
        rep_c, t_c = timed(lambda: run("compiled"))
        dev = np.max(np.abs(rep_py.final_state.as_vector() - rep_c.final_state.as_vector()))
        print(f"{name:<10} {t_py:>9.3f}s {t_c:>9.3f}s {t_py / t_c:>7.1f}x {dev:>10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
