"""Projected gradient descent on the sphere and its stability analysis.

The iteration follows the negative gradient projected onto the sphere's
tangent plane and renormalizes. Convergence is governed by the spectral
radius of the step map's Jacobian DF(q): empirically rho(DF)*h approaches
1/(lambda_max - lambda_min) at the stability boundary, which yields the
limiting stepsize h_l = 1/(lambda_max - lambda_min) and the digit-truncation
rule for a practical h_opt below it.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal

import numpy as np

from . import backend
from .conformal import (CONVERGED, MAX_ITERATIONS, STEP_FAILURE, RunReport,
                        _kernel_report, _pack_trace)
from .errors import DegenerateConstraintError, InvalidInputError, StepFailureError
from .geometry import PhaseState
from .model import QuadraticProblem, SpectrumRange, eigen_oracle


@dataclass(frozen=True)
class GdConfig:
    """Stepsize and stopping budget for gradient-descent runs."""

    h: float
    tol: float = 1e-6
    max_iterations: int = 100_000

    def __post_init__(self):
        if not self.h > 0.0:
            raise InvalidInputError("stepsize h must be positive")
        if not self.tol > 0.0:
            raise InvalidInputError("tol must be positive")
        if self.max_iterations < 0:
            raise InvalidInputError("max_iterations must be >= 0")


@dataclass(frozen=True)
class GdAnalysisRecord:
    """Spectral radius of the step-map Jacobian at one iterate."""

    iteration: int
    rho: float
    f_value: float


def gd_step(prob: QuadraticProblem, q: np.ndarray, h: float) -> np.ndarray:
    """One normalized projected-gradient step.

    q_next = (q - h (I - q q^T) grad f(q)) / |...| with grad f = 2 A q. The
    map is well defined for any ambient q near the sphere, which finite
    difference checks rely on.
    """
    grad = 2.0 * (prob.A @ q)
    v = q - h * (grad - q * float(q @ grad))
    nv = float(np.linalg.norm(v))
    if nv < 1e-300:
        raise StepFailureError("projected-gradient step has vanishing norm", residual=nv)
    return v / nv


def gd_jacobian(prob: QuadraticProblem, q: np.ndarray, h: float) -> np.ndarray:
    """Closed-form Jacobian DF(q) of the normalized step map at unit q.

    With v = k q - 2h A q, c = q^T A q and k = 1 + 2h c:

      DF = (k I - 2h A + 4h q q^T A) / |v|
           - (k^3 q q^T - 2h k^2 A q q^T - 8 c k h^2 q q^T A) / |v|^3
           - (4 k h^2 q q^T A^2 + 16 c h^3 A q q^T A - 8 h^3 A q q^T A^2) / |v|^3
    """
    A = prob.A
    d = prob.dim
    Aq = A @ q
    AAq = A @ Aq
    c = float(q @ Aq)
    k = 1.0 + 2.0 * h * c
    v = k * q - 2.0 * h * Aq
    nv = float(np.linalg.norm(v))
    if nv < 1e-300:
        raise DegenerateConstraintError("step map is degenerate: |v| = 0")
    term1 = (k * np.eye(d) - 2.0 * h * A + 4.0 * h * np.outer(q, Aq)) / nv
    bracket1 = (k**3 * np.outer(q, q)
                - 2.0 * h * k**2 * np.outer(Aq, q)
                - 8.0 * c * k * h**2 * np.outer(q, Aq))
    bracket2 = (4.0 * k * h**2 * np.outer(q, AAq)
                + 16.0 * c * h**3 * np.outer(Aq, Aq)
                - 8.0 * h**3 * np.outer(Aq, AAq))
    return term1 - (bracket1 + bracket2) / nv**3


def spectral_radius(mtx: np.ndarray) -> float:
    """max |eigenvalue|, from the full dense spectrum."""
    mtx = np.asarray(mtx, dtype=float)
    if not np.all(np.isfinite(mtx)):
        raise InvalidInputError("matrix entries must be finite")
    return float(np.max(np.abs(np.linalg.eigvals(mtx))))


def limiting_stepsize(spectrum: SpectrumRange) -> float:
    """Empirical stability boundary 1 / (lambda_max - lambda_min)."""
    return 1.0 / spectrum.width


def _optimal_stepsize_decimal(h_l: float) -> Decimal:
    if not h_l > 0.0:
        raise InvalidInputError("h_l must be positive")
    d = Decimal(repr(float(h_l)))
    if d >= 1:
        return Decimal(int(d)) - Decimal("0.1")
    unit = Decimal(1).scaleb(d.adjusted())
    truncated = d.quantize(unit, rounding=ROUND_DOWN)
    if truncated == d:
        # h_l has a single significant digit: step one unit below it so that
        # h_opt stays strictly under the stability boundary (0.5 -> 0.49).
        return truncated - unit / 10
    return truncated


def optimal_stepsize(h_l: float) -> float:
    """Digit-truncation of the limiting stepsize, in exact base-10 terms.

    h_l >= 1: integer part minus 0.1. Otherwise truncate after the first
    nonzero decimal digit; if that truncation equals h_l itself, subtract one
    unit in the following decimal place instead.
    """
    return float(_optimal_stepsize_decimal(h_l))


def _gd_trace_row(prob: QuadraticProblem, q: np.ndarray, n: int, h: float) -> tuple:
    # No momentum: H is reported as f and the tangency residual as 0.
    fval = prob.f(q)
    return (n, n * h, fval, fval, abs(float(q @ q) - 1.0), 0.0, h)


def gd_optimize(prob: QuadraticProblem, q0: np.ndarray, cfg: GdConfig,
                f_target: float | None = None, backend_mode: str = "auto") -> RunReport:
    """Iterate gd_step until |f - f_target| <= tol or the budget runs out.

    f_target defaults to the exact minimum from the eigenvalue oracle.
    The report's final_state carries q with zero momentum.
    """
    q0 = np.asarray(q0, dtype=float)
    if abs(float(q0 @ q0) - 1.0) > 1e-10:
        raise InvalidInputError("q0 must be a unit vector within 1e-10")
    if f_target is None:
        f_target = eigen_oracle(prob)[0]

    use_kernel = backend_mode != "python" and backend.kernels() is not None
    if backend_mode == "compiled" and backend.kernels() is None:
        raise InvalidInputError("compiled backend is not available")
    if use_kernel:
        ker = backend.kernels()
        status, iters, raw, q = ker.gd_loop(
            np.ascontiguousarray(prob.A), q0.copy(), cfg.h,
            f_target, cfg.tol, cfg.max_iterations)
        return _kernel_report(status, iters, raw, PhaseState(q, np.zeros_like(q)))

    q = q0
    n = 0
    rows = [_gd_trace_row(prob, q, 0, cfg.h)]
    status, failure = None, None
    while True:
        if abs(rows[-1][2] - f_target) <= cfg.tol:
            status = CONVERGED
            break
        if n >= cfg.max_iterations:
            status = MAX_ITERATIONS
            break
        try:
            q = gd_step(prob, q, cfg.h)
        except StepFailureError as exc:
            status, failure = STEP_FAILURE, str(exc)
            break
        n += 1
        rows.append(_gd_trace_row(prob, q, n, cfg.h))
    return RunReport(_pack_trace(rows), PhaseState(q, np.zeros_like(q)),
                     n, status, failure)


def gd_analysis(prob: QuadraticProblem, q0: np.ndarray, h: float,
                tol: float = 1e-6, max_iterations: int = 100_000,
                f_target: float | None = None) -> list[GdAnalysisRecord]:
    """Run GD recording rho(DF(q_n)) and f at every iterate.

    Accepts h = 0 (stationary iteration, where DF is the pure normalization
    Jacobian I - q q^T). Used to re-plot the spectral-radius evolution.
    """
    if h < 0.0:
        raise InvalidInputError("h must be >= 0")
    q = np.asarray(q0, dtype=float)
    if f_target is None:
        f_target = eigen_oracle(prob)[0]
    records = [GdAnalysisRecord(0, spectral_radius(gd_jacobian(prob, q, h)), prob.f(q))]
    n = 0
    while abs(records[-1].f_value - f_target) > tol and n < max_iterations:
        q = gd_step(prob, q, h)
        n += 1
        records.append(GdAnalysisRecord(n, spectral_radius(gd_jacobian(prob, q, h)), prob.f(q)))
    return records


# Reference eigenvalue ranges for the bundled stepsize table.
DEFAULT_RANGES: tuple[tuple[float, float], ...] = (
    (-100.0, -10.0),
    (-100.0, 100.0),
    (-10.0, 1.0),
    (-10.0, 100.0),
    (-1.0, 1.0),
    (-1.0, 100.0),
    (1.0, 10.0),
    (1.0, 100.0),
    (-3.0, 8.0),
    (-27.0, 58.0),
    (-10.1, -9.9),
)


def stepsize_table(seed: int, dim: int = 10, run_gd: bool = True,
                   tol: float = 1e-6, max_iterations: int = 100_000,
                   backend_mode: str = "auto") -> list[dict]:
    """h_l and h_opt for the reference ranges, optionally with GD runs.

    Each row reports the limiting and optimal stepsizes for one eigenvalue
    range, plus (when run_gd) the convergence status and iteration count of a
    GD run at h_opt on a seeded matrix. Iteration counts are matrix-specific;
    only the stepsize columns are reproducible values.
    """
    from .model import generate_matrix, standard_initial_state

    rows = []
    for lmin, lmax in DEFAULT_RANGES:
        spectrum = SpectrumRange(lmin, lmax)
        h_l = limiting_stepsize(spectrum)
        h_opt_dec = _optimal_stepsize_decimal(h_l)
        row = {
            "lambda_min": lmin,
            "lambda_max": lmax,
            "h_l": h_l,
            "h_opt": float(h_opt_dec),
            "h_opt_str": str(h_opt_dec),
            "status": "",
            "iterations": -1,
        }
        if run_gd:
            prob = generate_matrix(spectrum, dim, seed)
            q0 = standard_initial_state(dim).q
            report = gd_optimize(prob, q0, GdConfig(float(h_opt_dec), tol, max_iterations),
                                 backend_mode=backend_mode)
            row["status"] = report.status
            row["iterations"] = report.iterations
        rows.append(row)
    return rows
