"""Proportional stepsize control for the order-1 splitting integrator.

Each iteration advances with the order-1 step and measures its deviation
delta from the order-2 step started at the same state; the next stepsize is
h * (r / delta)^(theta/2), clamped to [h_min, h_max]. theta = 0 reduces to a
constant stepsize; values much above 0.01 tend to oscillate. r is the
desired deviation (keep it at or below 0.6; the default is 0.06).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import backend
from .conformal import (CONVERGED, MAX_ITERATIONS, STEP_FAILURE, IntegratorConfig,
                        RunReport, StoppingRule, _converged, _fast_path,
                        _kernel_report, _pack_trace, _trace_row, sm1_step,
                        sm2_step)
from .errors import InvalidInputError, StepFailureError
from .geometry import ConstraintManifold, PhaseState, consistency_residual
from .model import SeparableHamiltonian

# Stepsize growth is capped per update; the controller formula is singular
# at delta = 0 and the cap keeps it monotone in delta.
GROWTH_CAP = 2.0


@dataclass(frozen=True)
class AdaptiveConfig:
    """Controller gains and stepsize bounds."""

    r: float = 0.06
    theta: float = 0.001
    h0: float = 0.1
    h_min: float = 1e-6
    h_max: float = 1.0

    def __post_init__(self):
        if not self.r > 0.0:
            raise InvalidInputError("desired error r must be positive")
        if not 0.0 <= self.theta <= 2.0:
            raise InvalidInputError("gain theta must lie in [0, 2]")
        if not self.h_min <= self.h0 <= self.h_max:
            raise InvalidInputError("need h_min <= h0 <= h_max")


def default_h0(spectrum_width: float) -> float:
    """Reference initial stepsize: 0.1, reduced to 0.09 for wide spectra."""
    return 0.1 if spectrum_width < 200.0 else 0.09


def controller_update(h_n: float, delta_n: float, cfg: AdaptiveConfig) -> float:
    """Next stepsize clamp(h_n * (r/delta_n)^(theta/2), h_min, h_max)."""
    if delta_n < 0.0:
        raise InvalidInputError("delta_n must be >= 0")
    if cfg.theta == 0.0:
        factor = 1.0
    elif delta_n == 0.0:
        factor = GROWTH_CAP
    else:
        factor = min((cfg.r / delta_n) ** (0.5 * cfg.theta), GROWTH_CAP)
    return min(max(h_n * factor, cfg.h_min), cfg.h_max)


def adaptive_step(man: ConstraintManifold, ham: SeparableHamiltonian,
                  s: PhaseState, h_n: float, cfg: AdaptiveConfig,
                  icfg: IntegratorConfig) -> tuple[PhaseState, float, float]:
    """One controlled step: advance with the order-1 result.

    Both splitting steps of size h_n are computed from s; delta is the
    Euclidean norm of their concatenated (q, p) difference and only feeds the
    controller. Returns (new state, next stepsize, delta).
    """
    step_cfg = replace(icfg, h=h_n)
    x1 = sm1_step(man, ham, s, step_cfg)
    x2 = sm2_step(man, ham, s, step_cfg)
    delta = float(np.linalg.norm(x1.state.as_vector() - x2.state.as_vector()))
    return x1.state, controller_update(h_n, delta, cfg), delta


def adaptive_optimize(man: ConstraintManifold, ham: SeparableHamiltonian,
                      s0: PhaseState, cfg: AdaptiveConfig, icfg: IntegratorConfig,
                      stop: StoppingRule, backend_mode: str = "auto") -> RunReport:
    """Adaptive-stepsize run under the same stopping rule as ``optimize``.

    Trace rows record the stepsize that will be attempted next from that
    iterate; with theta = 0 the trace equals the fixed-step order-1 trace.
    """
    if icfg.gamma < 0.0:
        raise InvalidInputError("gamma must be >= 0 for optimization runs")
    if consistency_residual(man, ham, s0) > 1e-8:
        raise InvalidInputError("initial state is not on the phase manifold within 1e-8")

    if _fast_path(man, ham, stop, backend_mode):
        ker = backend.kernels()
        status, iters, raw, q, p = ker.adaptive_loop(
            np.ascontiguousarray(ham.A), s0.q.copy(), s0.p.copy(),
            cfg.h0, icfg.gamma, cfg.r, cfg.theta, cfg.h_min, cfg.h_max,
            icfg.newton_tol, icfg.newton_max_iter,
            stop.f_target, stop.tol, stop.max_iterations)
        return _kernel_report(status, iters, raw, PhaseState(q, p))

    state = s0
    h = cfg.h0
    n, t = 0, 0.0
    rows = [_trace_row(man, ham, state, 0, 0.0, h)]
    f_prev, last_step_norm = None, None
    status, failure = None, None
    while True:
        f_now = rows[-1][2]
        if _converged(stop, f_now, f_prev, last_step_norm):
            status = CONVERGED
            break
        if n >= stop.max_iterations:
            status = MAX_ITERATIONS
            break
        try:
            new_state, h_next, _ = adaptive_step(man, ham, state, h, cfg, icfg)
        except StepFailureError as exc:
            status, failure = STEP_FAILURE, str(exc)
            break
        f_prev = f_now
        last_step_norm = float(np.linalg.norm(new_state.as_vector() - state.as_vector()))
        n += 1
        t += h
        state, h = new_state, h_next
        rows.append(_trace_row(man, ham, state, n, t, h))
    return RunReport(_pack_trace(rows), state, n, status, failure)
