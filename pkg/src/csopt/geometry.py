"""Embedded constraint manifolds and phase-space geometry.

A configuration manifold is given implicitly as {q : g(q) = 0} with
g : R^n -> R^m, m < n. The associated phase manifold couples the position
constraint with the hidden momentum constraint G(q) H_p(p) = 0, so that
(q, p) stays in the cotangent bundle expressed in ambient coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from .errors import DegenerateConstraintError, InvalidInputError

if TYPE_CHECKING:
    from .model import SeparableHamiltonian


@dataclass(frozen=True, eq=False)
class ConstraintManifold:
    """Implicit manifold {q : g(q) = 0} with first- and second-order data.

    ``g`` maps an ambient point to the m-vector of constraint values, ``G``
    to the m-by-n Jacobian, and ``constraint_hessian(q, lam)`` to the n-by-n
    matrix sum_i lam_i * Hess(g_i)(q). ``project`` is an optional exact
    position projector used by retractions; when absent a Newton projection
    along G(q)^T directions is used.
    """

    ambient_dim: int
    constraint_dim: int
    g: Callable[[np.ndarray], np.ndarray]
    G: Callable[[np.ndarray], np.ndarray]
    constraint_hessian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    project: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.ambient_dim < 1:
            raise InvalidInputError("ambient_dim must be positive")
        if not 0 < self.constraint_dim < self.ambient_dim:
            raise InvalidInputError(
                "constraint_dim must satisfy 0 < m < ambient_dim, got "
                f"m={self.constraint_dim}, n={self.ambient_dim}"
            )


class SphereConstraint(ConstraintManifold):
    """Unit sphere S^{d-1} embedded in R^d: g(q) = q.q - 1."""

    def __init__(self, dim: int):
        if dim < 2:
            raise InvalidInputError(f"sphere needs ambient dimension >= 2, got {dim}")

        def g(q: np.ndarray) -> np.ndarray:
            return np.array([float(q @ q) - 1.0])

        def G(q: np.ndarray) -> np.ndarray:
            return 2.0 * q[np.newaxis, :]

        def hess(q: np.ndarray, lam: np.ndarray) -> np.ndarray:
            return 2.0 * float(np.asarray(lam).reshape(-1)[0]) * np.eye(dim)

        def project(v: np.ndarray) -> np.ndarray:
            return v / np.linalg.norm(v)

        super().__init__(dim, 1, g, G, hess, project)
        object.__setattr__(self, "dim", dim)

    def __repr__(self) -> str:
        return f"SphereConstraint(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class PhaseState:
    """A (q, p) pair in ambient coordinates. Treated as immutable."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.ndim != 1 or p.ndim != 1 or q.shape != p.shape:
            raise InvalidInputError(
                f"q and p must be 1-D vectors of equal length, got {q.shape} and {p.shape}"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def as_vector(self) -> np.ndarray:
        """Concatenated (q, p) as a 2n-vector."""
        return np.concatenate([self.q, self.p])


def _check_dims(man: ConstraintManifold, ham: "SeparableHamiltonian", s: PhaseState) -> None:
    if s.dim != man.ambient_dim:
        raise InvalidInputError(
            f"state dimension {s.dim} does not match ambient_dim {man.ambient_dim}"
        )
    if ham.mass is not None and ham.mass.shape[0] != s.dim:
        raise InvalidInputError(
            f"mass matrix is {ham.mass.shape[0]}x{ham.mass.shape[1]} but state has dim {s.dim}"
        )


def residuals(man: ConstraintManifold, ham: "SeparableHamiltonian",
              s: PhaseState) -> tuple[np.ndarray, np.ndarray]:
    """Primary residual g(q) and hidden residual G(q) H_p(p)."""
    _check_dims(man, ham, s)
    primary = np.asarray(man.g(s.q), dtype=float).reshape(-1)
    hidden = np.asarray(man.G(s.q) @ ham.H_p(s.p), dtype=float).reshape(-1)
    if primary.shape[0] != man.constraint_dim or hidden.shape[0] != man.constraint_dim:
        raise InvalidInputError("constraint callables returned the wrong dimension")
    return primary, hidden


def consistency_residual(man: ConstraintManifold, ham: "SeparableHamiltonian",
                         s: PhaseState) -> float:
    """Max-norm distance of (q, p) from the phase manifold's defining equations."""
    primary, hidden = residuals(man, ham, s)
    return max(float(np.max(np.abs(primary))), float(np.max(np.abs(hidden))))


def is_consistent(man: ConstraintManifold, ham: "SeparableHamiltonian",
                  s: PhaseState, eps: float = 1e-8) -> bool:
    return consistency_residual(man, ham, s) <= eps


def _constraint_block(man: ConstraintManifold, ham: "SeparableHamiltonian",
                      s: PhaseState) -> np.ndarray:
    """The 2m-by-2n Jacobian of the phase-manifold equations at s.

    Rows: [G(q), 0] and [d_q(G(q) H_p(p)), G(q) H_pp]. Its null space is the
    tangent space of the phase manifold.
    """
    n, m = man.ambient_dim, man.constraint_dim
    q, p = s.q, s.p
    Gq = np.asarray(man.G(q), dtype=float).reshape(m, n)
    Hp = ham.H_p(p)
    eye_m = np.eye(m)
    B = np.empty((m, n))
    for i in range(m):
        B[i] = np.asarray(man.constraint_hessian(q, eye_m[i]), dtype=float) @ Hp
    GHpp = ham.apply_inverse_mass(Gq.T).T
    K = np.zeros((2 * m, 2 * n))
    K[:m, :n] = Gq
    K[m:, :n] = B
    K[m:, n:] = GHpp
    return K


def tangent_basis(man: ConstraintManifold, ham: "SeparableHamiltonian",
                  s: PhaseState, consistency_tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of the phase-manifold tangent space at s.

    Returns a (2n, 2(n-m)) matrix whose columns are the basis vectors,
    computed from the SVD of the constraint block (deterministic ordering).
    """
    if consistency_residual(man, ham, s) > consistency_tol:
        raise InvalidInputError(
            "state is not on the phase manifold within "
            f"{consistency_tol:g}; residual = {consistency_residual(man, ham, s):g}"
        )
    K = _constraint_block(man, ham, s)
    m2 = K.shape[0]
    _, sv, vt = np.linalg.svd(K, full_matrices=True)
    if sv[-1] <= 1e-12 * sv[0]:
        raise DegenerateConstraintError(
            f"constraint block is rank deficient (singular values {sv})"
        )
    return vt[m2:].T


def _project_position(man: ConstraintManifold, v: np.ndarray,
                      tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
    """Return a nearby point with g = 0, moving along G(v)^T directions.

    Damped Newton on the multipliers: full steps near the manifold, halved
    until the residual improves otherwise.
    """
    if man.project is not None:
        return man.project(v)
    Gv = np.asarray(man.G(v), dtype=float)
    a = np.zeros(man.constraint_dim)
    q = v
    r = np.asarray(man.g(q), dtype=float).reshape(-1)
    best = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if best <= tol:
            return q
        J = np.asarray(man.G(q), dtype=float) @ Gv.T
        try:
            delta = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise DegenerateConstraintError("position projection is singular") from exc
        scale = 1.0
        for _ in range(30):
            a_new = a - scale * delta
            q_new = v + Gv.T @ a_new
            r_new = np.asarray(man.g(q_new), dtype=float).reshape(-1)
            if float(np.max(np.abs(r_new))) < best:
                break
            scale *= 0.5
        else:
            raise DegenerateConstraintError("position projection stalled")
        a, q, r = a_new, q_new, r_new
        best = float(np.max(np.abs(r)))
    raise DegenerateConstraintError("position projection did not converge")


def _project_momentum(man: ConstraintManifold, ham: "SeparableHamiltonian",
                      q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Project w onto {p : G(q) H_p(p) = 0} along G(q)^T directions."""
    Gq = np.asarray(man.G(q), dtype=float)
    S = Gq @ ham.apply_inverse_mass(Gq.T)
    try:
        y = np.linalg.solve(S, Gq @ ham.H_p(w))
    except np.linalg.LinAlgError as exc:
        raise DegenerateConstraintError("momentum projection is singular") from exc
    return w - Gq.T @ y


def retract(man: ConstraintManifold, ham: "SeparableHamiltonian", s: PhaseState,
            xi: np.ndarray, tau: float) -> PhaseState:
    """First-order curve on the phase manifold through s with velocity xi.

    Position part is constraint-normalized (for the sphere: q/|q|), momentum
    part is projected back onto the hidden constraint. At tau = 0 the state
    is returned unchanged.
    """
    if tau == 0.0:
        return s
    xi = np.asarray(xi, dtype=float)
    n = man.ambient_dim
    if xi.shape != (2 * n,):
        raise InvalidInputError(f"tangent vector must have shape ({2*n},), got {xi.shape}")
    q_new = _project_position(man, s.q + tau * xi[:n])
    p_new = _project_momentum(man, ham, q_new, s.p + tau * xi[n:])
    return PhaseState(q_new, p_new)


def random_phase_state(man: ConstraintManifold, ham: "SeparableHamiltonian",
                       rng: np.random.Generator,
                       momentum_scale: float = 1.0) -> PhaseState:
    """Draw a random state on the phase manifold (Gaussian, then projected)."""
    v = rng.standard_normal(man.ambient_dim)
    q = _project_position(man, v / np.linalg.norm(v))
    w = momentum_scale * rng.standard_normal(man.ambient_dim)
    return PhaseState(q, _project_momentum(man, ham, q, w))
