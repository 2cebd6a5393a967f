"""One conservative RATTLE step for separable Hamiltonians.

The step solves, in order:
  1. implicit half-kick + drift with the position constraint enforced via a
     Newton iteration on the m-vector nu = h*lambda,
  2. the explicit drift q1 = q0 + h H_p(p_half),
  3. a final half-kick with the momentum projected exactly onto the hidden
     constraint through the Schur complement G H_pp G^T (linear because the
     kinetic energy is quadratic).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConstraintError, InvalidInputError, StepFailureError
from .geometry import ConstraintManifold, PhaseState, _check_dims
from .model import SeparableHamiltonian


@dataclass(frozen=True)
class RattleStepConfig:
    """Stepsize and Newton settings for a single constrained step.

    Negative h is allowed (used by reversibility checks); h = 0 is not.
    """

    h: float
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        if self.h == 0.0:
            raise InvalidInputError("stepsize h must be nonzero")
        if not self.newton_tol > 0.0:
            raise InvalidInputError("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise InvalidInputError("newton_max_iter must be >= 1")


@dataclass(frozen=True, eq=False)
class RattleStepResult:
    """Stepped state plus the multipliers and Newton effort of both stages."""

    state: PhaseState
    lam: np.ndarray
    mu: np.ndarray
    newton_iters_position: int
    newton_iters_projection: int


def rattle_step(man: ConstraintManifold, ham: SeparableHamiltonian,
                s: PhaseState, cfg: RattleStepConfig) -> RattleStepResult:
    """Advance (q, p) by one RATTLE step of size cfg.h.

    The Newton unknown is nu = h*lambda (well conditioned as h -> 0), with
    initial guess 0 and analytic Jacobian -(h/2) G(q1) H_pp G(q0)^T refreshed
    every iteration. Raises StepFailureError if the position stage does not
    reach |g(q1)|_inf <= newton_tol within newton_max_iter updates.
    """
    _check_dims(man, ham, s)
    h = cfg.h
    q0, p0 = s.q, s.p
    m = man.constraint_dim

    G0 = np.asarray(man.G(q0), dtype=float).reshape(m, -1)
    kick = p0 - 0.5 * h * np.asarray(ham.H_q(q0), dtype=float)
    MinvG0T = ham.apply_inverse_mass(G0.T)

    # Position stage: Newton on nu = h*lambda.
    nu = np.zeros(m)
    base = q0 + h * ham.H_p(kick)
    iters = 0
    while True:
        q1 = base - 0.5 * h * (MinvG0T @ nu)
        r = np.asarray(man.g(q1), dtype=float).reshape(-1)
        if not np.all(np.isfinite(r)):
            raise StepFailureError("constraint residual became non-finite",
                                   residual=float("nan"), iterations=iters)
        if np.max(np.abs(r)) <= cfg.newton_tol:
            break
        if iters >= cfg.newton_max_iter:
            raise StepFailureError(
                f"position stage did not converge within {cfg.newton_max_iter} "
                f"Newton iterations (|g| = {np.max(np.abs(r)):.3e})",
                residual=float(np.max(np.abs(r))), iterations=iters)
        G1 = np.asarray(man.G(q1), dtype=float).reshape(m, -1)
        J = -0.5 * h * (G1 @ MinvG0T)
        try:
            nu = nu - np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise DegenerateConstraintError("position-stage Newton matrix is singular") from exc
        iters += 1
    lam = nu / h
    p_half = kick - 0.5 * (G0.T @ nu)

    # Projection stage: exact linear solve through the Schur complement.
    G1 = np.asarray(man.G(q1), dtype=float).reshape(m, -1)
    w = p_half - 0.5 * h * np.asarray(ham.H_q(q1), dtype=float)
    S = G1 @ ham.apply_inverse_mass(G1.T)
    try:
        y = np.linalg.solve(S, G1 @ ham.H_p(w))
    except np.linalg.LinAlgError as exc:
        raise DegenerateConstraintError("Schur complement G H_pp G^T is singular") from exc
    mu = (2.0 / h) * y
    p1 = w - G1.T @ y

    return RattleStepResult(PhaseState(q1, p1), lam, mu, iters, 0)
