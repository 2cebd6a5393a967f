"""Dissipative flow, conformal splitting integrators, and the run driver.

The continuous model adds a -gamma*p damping term to the constrained
Hamiltonian system. Its flow is approximated by composing RATTLE (the
conservative part) with the exactly solvable dissipative flow
(q, p) -> (q, e^{-gamma t} p):

  sm1: rattle(h) after dissipation(h)            (Lie-Trotter, order 1)
  sm2: rattle(h/2), dissipation(h), rattle(h/2)  (leapfrog, order 2)

Both are conformal symplectic with per-step factor e^{-gamma h}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import InvalidInputError, StepFailureError
from .geometry import (ConstraintManifold, PhaseState, SphereConstraint,
                       consistency_residual, residuals)
from .model import QuadraticHamiltonian, SeparableHamiltonian
from .rattle import RattleStepConfig, RattleStepResult, rattle_step

CONVERGED = "converged"
MAX_ITERATIONS = "max-iterations"
STEP_FAILURE = "step-failure"

TRACE_DTYPE = np.dtype([
    ("iteration", np.int64),
    ("t", np.float64),
    ("f", np.float64),
    ("H", np.float64),
    ("g_resid", np.float64),
    ("tangency_resid", np.float64),
    ("h", np.float64),
])


@dataclass(frozen=True)
class IntegratorConfig:
    """Stepsize, dissipation and embedded Newton settings.

    gamma may be negative inside reversibility tests; optimization runs
    validate gamma >= 0. Taking an actual step requires h != 0 (enforced by
    the embedded RattleStepConfig).
    """

    h: float
    gamma: float = 0.0
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def rattle_config(self, h: float | None = None) -> RattleStepConfig:
        return RattleStepConfig(self.h if h is None else h,
                                self.newton_tol, self.newton_max_iter)


@dataclass(frozen=True)
class StoppingRule:
    """Termination test for optimization runs.

    The default mode stops when |f(q_n) - f_target| <= tol against a known
    target value (for the sphere quadratic: the smallest eigenvalue). The
    alternative plateau mode needs no target and stops when both the change
    in f and the step norm drop below tolerance; it is a convenience for
    library users, not part of the reference experiment protocol.
    """

    tol: float = 1e-6
    max_iterations: int = 100_000
    f_target: float | None = None
    plateau_step_tol: float | None = None

    def __post_init__(self):
        if not self.tol > 0.0:
            raise InvalidInputError("tol must be positive")
        if self.max_iterations < 0:
            raise InvalidInputError("max_iterations must be >= 0")
        if self.f_target is None and self.plateau_step_tol is None:
            raise InvalidInputError("set f_target (oracle mode) or plateau_step_tol")

    @staticmethod
    def oracle(f_target: float, tol: float = 1e-6,
               max_iterations: int = 100_000) -> "StoppingRule":
        return StoppingRule(tol=tol, max_iterations=max_iterations, f_target=f_target)

    @staticmethod
    def plateau(tol: float = 1e-6, step_tol: float = 1e-8,
                max_iterations: int = 100_000) -> "StoppingRule":
        return StoppingRule(tol=tol, max_iterations=max_iterations,
                            plateau_step_tol=step_tol)


@dataclass(frozen=True, eq=False)
class RunReport:
    """Per-iteration trace plus final state and termination status."""

    trace: np.ndarray
    final_state: PhaseState
    iterations: int
    status: str
    failure_message: str | None = None


def dissipative_flow(s: PhaseState, gamma: float, t: float) -> PhaseState:
    """Exact flow of qdot = 0, pdot = -gamma p: (q, p) -> (q, e^{-gamma t} p).

    Maps the phase manifold to itself (momentum scaling preserves the hidden
    constraint for linear H_p). Returns s unchanged when gamma*t == 0.
    """
    if gamma == 0.0 or t == 0.0:
        return s
    return PhaseState(s.q, math.exp(-gamma * t) * s.p)


def sm1_step(man: ConstraintManifold, ham: SeparableHamiltonian,
             s: PhaseState, cfg: IntegratorConfig) -> RattleStepResult:
    """Lie-Trotter step: dissipate over h, then one RATTLE step of size h.

    Equal to rattle_step applied to (q, e^{-gamma h} p); with gamma = 0 it is
    exactly rattle_step.
    """
    return rattle_step(man, ham, dissipative_flow(s, cfg.gamma, cfg.h),
                       cfg.rattle_config())


def sm2_step(man: ConstraintManifold, ham: SeparableHamiltonian,
             s: PhaseState, cfg: IntegratorConfig) -> RattleStepResult:
    """Leapfrog step: RATTLE(h/2), dissipation(h), RATTLE(h/2).

    Symmetric in h and conformal symplectic with factor e^{-gamma h}; with
    gamma = 0 it reduces exactly to two RATTLE half-steps. lam is taken from
    the first half-step, mu from the second; Newton counts are summed.
    """
    half = cfg.rattle_config(0.5 * cfg.h)
    first = rattle_step(man, ham, s, half)
    mid = dissipative_flow(first.state, cfg.gamma, cfg.h)
    second = rattle_step(man, ham, mid, half)
    return RattleStepResult(
        second.state, first.lam, second.mu,
        first.newton_iters_position + second.newton_iters_position,
        first.newton_iters_projection + second.newton_iters_projection)


_STEPPERS = {"sm1": sm1_step, "sm2": sm2_step}


def _trace_row(man, ham, s: PhaseState, n: int, t: float, h: float) -> tuple:
    primary, hidden = residuals(man, ham, s)
    fval = float(ham.f(s.q))
    return (n, t, fval, fval + ham.kinetic(s.p),
            float(np.max(np.abs(primary))), float(np.max(np.abs(hidden))), h)


def _pack_trace(rows: list[tuple]) -> np.ndarray:
    out = np.empty(len(rows), dtype=TRACE_DTYPE)
    for i, row in enumerate(rows):
        out[i] = row
    return out


def _pack_kernel_trace(raw: np.ndarray) -> np.ndarray:
    out = np.empty(raw.shape[0], dtype=TRACE_DTYPE)
    out["iteration"] = raw[:, 0].astype(np.int64)
    for j, name in enumerate(("t", "f", "H", "g_resid", "tangency_resid", "h")):
        out[name] = raw[:, j + 1]
    return out


_KERNEL_STATUS = {0: CONVERGED, 1: MAX_ITERATIONS, 2: STEP_FAILURE}
_KERNEL_FAILURE_MESSAGE = ("step failed in the compiled loop (Newton "
                           "non-convergence or degenerate projection)")


def _kernel_report(status: int, iters: int, raw: np.ndarray,
                   state: PhaseState) -> "RunReport":
    return RunReport(_pack_kernel_trace(raw), state, iters, _KERNEL_STATUS[status],
                     _KERNEL_FAILURE_MESSAGE if status == 2 else None)


def _fast_path(man, ham, stop: StoppingRule, which: str) -> bool:
    """True when the compiled sphere-quadratic loop can run this problem."""
    if which == "python":
        return False
    ok = (isinstance(man, SphereConstraint)
          and isinstance(ham, QuadraticHamiltonian)
          and ham.mass is None
          and stop.f_target is not None)
    if which == "compiled":
        if not ok:
            raise InvalidInputError(
                "compiled backend requires a SphereConstraint, a quadratic "
                "Hamiltonian with identity mass, and an oracle stopping rule")
        if backend.kernels() is None:
            raise InvalidInputError("compiled backend is not available")
        return True
    return ok and backend.kernels() is not None


def _converged(stop: StoppingRule, f_now: float, f_prev: float | None,
               step_norm: float | None) -> bool:
    if stop.f_target is not None:
        return abs(f_now - stop.f_target) <= stop.tol
    if f_prev is None or step_norm is None:
        return False
    return abs(f_now - f_prev) <= stop.tol and step_norm <= stop.plateau_step_tol


def optimize(man: ConstraintManifold, ham: SeparableHamiltonian, s0: PhaseState,
             cfg: IntegratorConfig, method: str = "sm1",
             stop: StoppingRule | None = None, backend_mode: str = "auto") -> RunReport:
    """Iterate the chosen splitting step until the stopping rule fires.

    Records one trace row per iterate (including the initial state). Step
    failures are reported in the status rather than raised. backend_mode is
    one of "auto", "compiled", "python".
    """
    if stop is None:
        raise InvalidInputError("a StoppingRule is required")
    if method not in _STEPPERS:
        raise InvalidInputError(f"method must be one of {sorted(_STEPPERS)}, got {method!r}")
    if cfg.h == 0.0:
        raise InvalidInputError("stepsize h must be nonzero")
    if cfg.gamma < 0.0:
        raise InvalidInputError("gamma must be >= 0 for optimization runs")
    if consistency_residual(man, ham, s0) > 1e-8:
        raise InvalidInputError("initial state is not on the phase manifold within 1e-8")

    if _fast_path(man, ham, stop, backend_mode):
        ker = backend.kernels()
        status, iters, raw, q, p = ker.sm_fixed_loop(
            np.ascontiguousarray(ham.A), s0.q.copy(), s0.p.copy(),
            cfg.h, cfg.gamma, 1 if method == "sm1" else 2,
            cfg.newton_tol, cfg.newton_max_iter,
            stop.f_target, stop.tol, stop.max_iterations)
        return _kernel_report(status, iters, raw, PhaseState(q, p))

    step = _STEPPERS[method]
    state = s0
    n, t = 0, 0.0
    rows = [_trace_row(man, ham, state, 0, 0.0, cfg.h)]
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
            result = step(man, ham, state, cfg)
        except StepFailureError as exc:
            status, failure = STEP_FAILURE, str(exc)
            break
        f_prev = f_now
        last_step_norm = float(np.linalg.norm(result.state.as_vector() - state.as_vector()))
        state = result.state
        n += 1
        t += cfg.h
        rows.append(_trace_row(man, ham, state, n, t, cfg.h))
    return RunReport(_pack_trace(rows), state, n, status, failure)
