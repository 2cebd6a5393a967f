"""Structure-preservation certification of step maps.

All checks are finite-difference based and therefore independent of the
integrator internals: tangent maps are differenced through on-manifold
retractions, conformality is tested through the canonical quadratic form,
convergence orders are measured against a refined self-reference, and
symmetry by stepping back in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .conformal import IntegratorConfig, dissipative_flow, sm1_step, sm2_step
from .errors import InvalidInputError, StepFailureError
from .geometry import (ConstraintManifold, PhaseState, consistency_residual,
                       random_phase_state, retract, tangent_basis)
from .model import SeparableHamiltonian
from .rattle import RattleStepConfig, rattle_step


@dataclass(frozen=True)
class ConformalityReport:
    """Worst quadratic-form residual over the sampled tangent pairs."""

    factor_expected: float
    max_residual: float
    samples: int
    fd_epsilon: float


@dataclass(frozen=True)
class OrderReport:
    """Global errors against a refined reference and the fitted slope."""

    stepsizes: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float


def _flow_state(result) -> PhaseState:
    return result.state if hasattr(result, "state") else result


def _apply(stepper, man, ham, s: PhaseState, cfg) -> PhaseState:
    return _flow_state(stepper(man, ham, s, cfg))


def step_tangent_map(stepper, man: ConstraintManifold, ham: SeparableHamiltonian,
                     s: PhaseState, cfg, xi: np.ndarray, eps: float) -> np.ndarray:
    """Central-difference directional derivative of the step map along xi.

    xi must lie in the tangent space of the phase manifold at s; the
    perturbed base points are produced by the retraction, so the difference
    approximates the step map's tangent map restricted to the manifold.
    """
    plus = _apply(stepper, man, ham, retract(man, ham, s, xi, eps), cfg)
    minus = _apply(stepper, man, ham, retract(man, ham, s, xi, -eps), cfg)
    return (plus.as_vector() - minus.as_vector()) / (2.0 * eps)


def _jdot(a: np.ndarray, b: np.ndarray) -> float:
    """Canonical symplectic pairing a^T J b with J = [[0, I], [-I, 0]]."""
    n = a.shape[0] // 2
    return float(a[:n] @ b[n:] - a[n:] @ b[:n])


def conformality_check(stepper, man: ConstraintManifold, ham: SeparableHamiltonian,
                       s: PhaseState, cfg, samples: int = 20, eps: float = 1e-5,
                       seed: int = 0) -> ConformalityReport:
    """Test the e^{-gamma h} scaling of the symplectic form under one step.

    Draws random unit tangent pairs (xi1, xi2) from the orthonormal tangent
    basis and reports max |T(xi1)^T J T(xi2) - factor * xi1^T J xi2| where T
    is the finite-difference tangent map. For steppers without dissipation
    (plain RATTLE) the expected factor is 1.
    """
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    factor = math.exp(-getattr(cfg, "gamma", 0.0) * cfg.h)
    basis = tangent_basis(man, ham, s)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        u1 = rng.standard_normal(basis.shape[1])
        u2 = rng.standard_normal(basis.shape[1])
        xi1 = basis @ (u1 / np.linalg.norm(u1))
        xi2 = basis @ (u2 / np.linalg.norm(u2))
        t1 = step_tangent_map(stepper, man, ham, s, cfg, xi1, eps)
        t2 = step_tangent_map(stepper, man, ham, s, cfg, xi2, eps)
        resid = abs(_jdot(t1, t2) - factor * _jdot(xi1, xi2))
        worst = max(worst, resid)
    return ConformalityReport(factor, worst, samples, eps)


def _integrate(stepper, man, ham, s: PhaseState, cfg, steps: int) -> PhaseState:
    state = s
    for _ in range(steps):
        state = _apply(stepper, man, ham, state, cfg)
    return state


def measure_order(stepper, man: ConstraintManifold, ham: SeparableHamiltonian,
                  s: PhaseState, cfg, T: float, h_list) -> OrderReport:
    """Self-convergence study: global error at time T versus stepsize.

    The reference trajectory uses the same stepper at min(h_list)/64. Steps
    that fail are dropped; at least three stepsizes must survive to fit the
    log-log slope.
    """
    h_list = sorted(h_list, reverse=True)
    for h in h_list:
        if abs(T / h - round(T / h)) > 1e-9:
            raise InvalidInputError(f"T/h must be an integer, got T={T}, h={h}")
    h_ref = min(h_list) / 64.0
    ref = _integrate(stepper, man, ham, s, replace(cfg, h=h_ref),
                     round(T / h_ref)).as_vector()
    hs, errs = [], []
    for h in h_list:
        try:
            end = _integrate(stepper, man, ham, s, replace(cfg, h=h), round(T / h))
        except StepFailureError:
            continue
        hs.append(h)
        errs.append(float(np.linalg.norm(end.as_vector() - ref)))
    if len(hs) < 3:
        raise StepFailureError(f"only {len(hs)} stepsizes survived; need >= 3")
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return OrderReport(tuple(hs), tuple(errs), slope)


def symmetry_check(man: ConstraintManifold, ham: SeparableHamiltonian,
                   s: PhaseState, cfg: IntegratorConfig, stepper=sm2_step) -> float:
    """Distance back to s after stepping forward by h and then by -h.

    The leapfrog splitting is symmetric, so the return error stays at the
    Newton-tolerance scale; the order-1 splitting is the documented negative
    control and violates this bound. At h = 0 returns 0 by definition.
    """
    if cfg.h == 0.0:
        return 0.0
    forward = _apply(stepper, man, ham, s, cfg)
    back = _apply(stepper, man, ham, forward, replace(cfg, h=-cfg.h))
    return float(np.linalg.norm(back.as_vector() - s.as_vector()))


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def run_certification(man: ConstraintManifold, ham: SeparableHamiltonian,
                      seed: int = 0, states: int = 10, samples: int = 10,
                      eps: float = 1e-5, newton_tol: float = 1e-12,
                      conformality_bound: float = 1e-4,
                      steppers: dict | None = None) -> list[CheckResult]:
    """Run the conformality, order and symmetry suites on one problem.

    ``steppers`` overrides the step functions under test (used by negative
    controls in the test harness). Returns one CheckResult per check.
    """
    if states < 1 or samples < 1:
        raise InvalidInputError("states and samples must be >= 1")
    steps = {"rattle": rattle_step, "sm1": sm1_step, "sm2": sm2_step}
    if steppers:
        steps.update(steppers)
    rng = np.random.default_rng(seed)
    results = []

    configs = {
        "rattle": RattleStepConfig(0.1, newton_tol=newton_tol),
        "sm1": IntegratorConfig(0.1, gamma=1.0, newton_tol=newton_tol),
        "sm2": IntegratorConfig(0.1, gamma=1.0, newton_tol=newton_tol),
    }
    for name in ("rattle", "sm1", "sm2"):
        worst = 0.0
        for i in range(states):
            s = random_phase_state(man, ham, rng)
            rep = conformality_check(steps[name], man, ham, s, configs[name],
                                     samples=samples, eps=eps, seed=seed + i)
            worst = max(worst, rep.max_residual)
        results.append(CheckResult(
            f"conformality-{name}", worst <= conformality_bound,
            f"max residual {worst:.3e} (bound {conformality_bound:g})"))

    s0 = random_phase_state(man, ham, rng)
    order_specs = {
        "sm1": (IntegratorConfig(0.02, gamma=1.0, newton_tol=newton_tol), (0.8, 1.2)),
        "sm2": (IntegratorConfig(0.02, gamma=1.0, newton_tol=newton_tol), (1.8, 2.2)),
        "rattle": (RattleStepConfig(0.02, newton_tol=newton_tol), (1.8, 2.2)),
    }
    h_list = (0.02, 0.01, 0.005, 0.0025)
    for name, (cfg, window) in order_specs.items():
        rep = measure_order(steps[name], man, ham, s0, cfg, T=1.0, h_list=h_list)
        ok = window[0] <= rep.slope <= window[1]
        results.append(CheckResult(
            f"order-{name}", ok,
            f"slope {rep.slope:.3f} (window [{window[0]}, {window[1]}])"))

    bound = 10.0 * newton_tol
    worst = 0.0
    for _ in range(states):
        s = random_phase_state(man, ham, rng)
        worst = max(worst, symmetry_check(
            man, ham, s, IntegratorConfig(0.1, gamma=1.0, newton_tol=newton_tol),
            stepper=steps["sm2"]))
    results.append(CheckResult(
        "symmetry-sm2", worst <= bound, f"max return error {worst:.3e} (bound {bound:g})"))
    return results
