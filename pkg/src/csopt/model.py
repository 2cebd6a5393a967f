"""Problem instances: separable Hamiltonians and sphere quadratics.

The built-in benchmark minimizes f(q) = q^T A q over the unit sphere, with
A symmetric and generated from prescribed extreme eigenvalues. The exact
minimum is the smallest eigenvalue of A, which doubles as the oracle the
optimizers stop against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError
from .geometry import PhaseState


@dataclass(frozen=True, eq=False)
class SeparableHamiltonian:
    """H(q, p) = f(q) + 0.5 p^T M^{-1} p with mass matrix M (None = identity)."""

    f: Callable[[np.ndarray], float]
    grad_f: Callable[[np.ndarray], np.ndarray]
    hess_f: Callable[[np.ndarray], np.ndarray]
    mass: np.ndarray | None = None

    def __post_init__(self):
        if self.mass is not None:
            M = np.asarray(self.mass, dtype=float)
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise InvalidInputError("mass matrix must be square")
            if np.max(np.abs(M - M.T)) > 1e-12:
                raise InvalidInputError("mass matrix must be symmetric")
            try:
                np.linalg.cholesky(M)
            except np.linalg.LinAlgError as exc:
                raise InvalidInputError("mass matrix must be positive definite") from exc
            object.__setattr__(self, "mass", M)
            object.__setattr__(self, "_mass_inv", np.linalg.inv(M))
        else:
            object.__setattr__(self, "_mass_inv", None)

    def H_p(self, p: np.ndarray) -> np.ndarray:
        """dH/dp = M^{-1} p (the velocity)."""
        if self._mass_inv is None:
            return p
        return self._mass_inv @ p

    def apply_inverse_mass(self, x: np.ndarray) -> np.ndarray:
        """M^{-1} x for a vector or a stack of columns (H_pp action)."""
        if self._mass_inv is None:
            return x
        return self._mass_inv @ x

    def kinetic(self, p: np.ndarray) -> float:
        return 0.5 * float(p @ self.H_p(p))

    def H(self, q: np.ndarray, p: np.ndarray) -> float:
        return float(self.f(q)) + self.kinetic(p)

    def H_q(self, q: np.ndarray) -> np.ndarray:
        """dH/dq, which for a separable Hamiltonian is grad f."""
        return self.grad_f(q)


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian(SeparableHamiltonian):
    """Separable Hamiltonian whose potential is q^T A q (A kept for fast paths)."""

    A: np.ndarray | None = None


@dataclass(frozen=True)
class SpectrumRange:
    """Extreme eigenvalues prescribed for a generated test matrix."""

    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if not self.lambda_min < self.lambda_max:
            raise InvalidInputError(
                f"need lambda_min < lambda_max, got ({self.lambda_min}, {self.lambda_max})"
            )

    @property
    def width(self) -> float:
        """lambda_max - lambda_min."""
        return self.lambda_max - self.lambda_min


@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    """f(q) = q^T A q with A symmetric; grad f = 2 A q, Hess f = 2 A."""

    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidInputError("A must be a square matrix")
        if np.max(np.abs(A - A.T)) > 1e-12:
            raise InvalidInputError("A must be symmetric within 1e-12")
        object.__setattr__(self, "A", A)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def f(self, q: np.ndarray) -> float:
        return float(q @ self.A @ q)

    def grad_f(self, q: np.ndarray) -> np.ndarray:
        return 2.0 * (self.A @ q)

    def hess_f(self, q: np.ndarray) -> np.ndarray:
        return 2.0 * self.A

    def hamiltonian(self, mass: np.ndarray | None = None) -> QuadraticHamiltonian:
        return QuadraticHamiltonian(self.f, self.grad_f, self.hess_f, mass, A=self.A)


def generate_matrix(spectrum: SpectrumRange, dim: int, seed: int) -> QuadraticProblem:
    """Random symmetric matrix with exact extreme eigenvalues.

    A = Q diag(l) Q^T with l_1 = lambda_min, l_d = lambda_max, the d-2
    interior eigenvalues uniform in (lambda_min, lambda_max), and Q the
    sign-normalized orthogonal factor of a seeded Gaussian matrix.
    Deterministic for a fixed seed.
    """
    if dim < 2:
        raise InvalidInputError(f"dim must be >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    interior = rng.uniform(spectrum.lambda_min, spectrum.lambda_max, size=dim - 2)
    eigs = np.concatenate([[spectrum.lambda_min], np.sort(interior), [spectrum.lambda_max]])
    gauss = rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(gauss)
    Q = Q * np.where(np.diag(R) < 0.0, -1.0, 1.0)
    A = (Q * eigs) @ Q.T
    A = 0.5 * (A + A.T)
    return QuadraticProblem(A)


def eigen_oracle(prob: QuadraticProblem) -> tuple[float, np.ndarray]:
    """Exact solution of min_{|q|=1} q^T A q: (lambda_min, unit eigenvector)."""
    w, V = np.linalg.eigh(prob.A)
    return float(w[0]), V[:, 0]


def standard_initial_state(dim: int) -> PhaseState:
    """Reference starting point for the sphere benchmark.

    For d = 10 this is the unit vector e_6 with momentum of all ones except a
    zero in the same slot; other dimensions use e_1 analogously. In all cases
    q0 . p0 = 0, so the state lies on the phase manifold for identity mass.
    """
    if dim < 2:
        raise InvalidInputError(f"dim must be >= 2, got {dim}")
    idx = 5 if dim == 10 else 0
    q0 = np.zeros(dim)
    q0[idx] = 1.0
    p0 = np.ones(dim)
    p0[idx] = 0.0
    return PhaseState(q0, p0)
