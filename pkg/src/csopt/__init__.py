"""Optimization on embedded constraint manifolds via dissipative
constrained Hamiltonian dynamics, integrated with conformal symplectic
splitting schemes (RATTLE-based, orders 1 and 2, fixed or adaptive
stepsize), plus a projected gradient-descent baseline with its empirical
stepsize rules."""

from .adaptive import (AdaptiveConfig, adaptive_optimize, adaptive_step,
                       controller_update, default_h0)
from .backend import compiled_available
from .conformal import (CONVERGED, MAX_ITERATIONS, STEP_FAILURE, IntegratorConfig,
                        RunReport, StoppingRule, dissipative_flow, optimize,
                        sm1_step, sm2_step)
from .errors import (CsoptError, DegenerateConstraintError, InvalidInputError,
                     StepFailureError)
from .gd import (GdAnalysisRecord, GdConfig, gd_analysis, gd_jacobian, gd_optimize,
                 gd_step, limiting_stepsize, optimal_stepsize, spectral_radius,
                 stepsize_table)
from .geometry import (ConstraintManifold, PhaseState, SphereConstraint,
                       consistency_residual, is_consistent, random_phase_state,
                       residuals, retract, tangent_basis)
from .model import (QuadraticHamiltonian, QuadraticProblem, SeparableHamiltonian,
                    SpectrumRange, eigen_oracle, generate_matrix,
                    standard_initial_state)
from .rattle import RattleStepConfig, RattleStepResult, rattle_step
from .verify import (ConformalityReport, OrderReport, conformality_check,
                     measure_order, run_certification, step_tangent_map,
                     symmetry_check)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
