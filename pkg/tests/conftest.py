import numpy as np
import pytest

from csopt import (ConstraintManifold, SphereConstraint, SpectrumRange,
                   generate_matrix, standard_initial_state)
from csopt import backend as _backend


@pytest.fixture(scope="session")
def sphere10():
    return SphereConstraint(10)


@pytest.fixture(scope="session")
def problem10():
    """Seeded d=10 quadratic with eigenvalues spanning [-1, 1]."""
    return generate_matrix(SpectrumRange(-1.0, 1.0), 10, 7)


@pytest.fixture(scope="session")
def ham10(problem10):
    return problem10.hamiltonian()


@pytest.fixture(scope="session")
def start10():
    return standard_initial_state(10)


@pytest.fixture(scope="session")
def ellipsoid3():
    """Generic one-constraint manifold without an exact projector."""
    D = np.diag([1.0, 4.0, 0.25])

    return ConstraintManifold(
        ambient_dim=3,
        constraint_dim=1,
        g=lambda q: np.array([float(q @ D @ q) - 1.0]),
        G=lambda q: 2.0 * (D @ q)[np.newaxis, :],
        constraint_hessian=lambda q, lam: 2.0 * float(np.asarray(lam)[0]) * D,
    )


@pytest.fixture(scope="session")
def circle3():
    """Two-constraint manifold: unit sphere in R^3 cut by the plane q_0 = 0."""

    def g(q):
        return np.array([float(q @ q) - 1.0, q[0]])

    def G(q):
        return np.vstack([2.0 * q, [1.0, 0.0, 0.0]])

    def hess(q, lam):
        return 2.0 * float(np.asarray(lam)[0]) * np.eye(3)

    return ConstraintManifold(3, 2, g, G, hess)


def backend_modes():
    modes = ["python"]
    if _backend.kernels() is not None:
        modes.append("compiled")
    return modes


@pytest.fixture(params=backend_modes())
def backend_mode(request):
    return request.param
