import numpy as np
import pytest

from csopt import (InvalidInputError, QuadraticProblem, SeparableHamiltonian,
                   SpectrumRange, eigen_oracle, generate_matrix,
                   standard_initial_state)


def test_generate_dim2_has_exactly_the_extremes():
    prob = generate_matrix(SpectrumRange(-2.0, 3.0), 2, 11)
    eigs = np.sort(np.linalg.eigvalsh(prob.A))
    assert eigs == pytest.approx([-2.0, 3.0], abs=1e-10)


@pytest.mark.parametrize("seed", [0, 1, 42])
def test_generate_extreme_eigenvalues(seed):
    prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, seed)
    eigs = np.sort(np.linalg.eigvalsh(prob.A))
    assert abs(eigs[0] + 1.0) <= 1e-10
    assert abs(eigs[-1] - 1.0) <= 1e-10
    assert np.all(eigs[1:-1] > -1.0) and np.all(eigs[1:-1] < 1.0)


def test_generate_is_deterministic_and_seed_sensitive():
    a = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 5)
    b = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 5)
    c = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 6)
    assert np.array_equal(a.A, b.A)
    assert not np.array_equal(a.A, c.A)


def test_generate_matrix_is_exactly_symmetric():
    prob = generate_matrix(SpectrumRange(-10.0, 100.0), 10, 3)
    assert np.max(np.abs(prob.A - prob.A.T)) == 0.0


def test_generate_validation():
    with pytest.raises(InvalidInputError):
        generate_matrix(SpectrumRange(-1.0, 1.0), 1, 0)
    with pytest.raises(InvalidInputError):
        SpectrumRange(1.0, 1.0)


def test_eigen_oracle_diagonal():
    value, vec = eigen_oracle(QuadraticProblem(np.diag([3.0, -2.0, 5.0])))
    assert value == pytest.approx(-2.0, abs=1e-14)
    assert np.abs(vec) == pytest.approx([0.0, 1.0, 0.0], abs=1e-14)


def test_eigen_oracle_identity():
    value, vec = eigen_oracle(QuadraticProblem(np.eye(4)))
    assert value == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-14)


def test_eigen_oracle_matches_construction():
    prob = generate_matrix(SpectrumRange(-10.0, 1.0), 10, 9)
    value, vec = eigen_oracle(prob)
    assert abs(value + 10.0) <= 1e-10
    assert np.linalg.norm(prob.A @ vec - value * vec) <= 1e-10


def test_quadratic_bounds_on_unit_sphere():
    prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 2)
    rng = np.random.default_rng(8)
    for _ in range(1000):
        q = rng.standard_normal(10)
        q /= np.linalg.norm(q)
        value = prob.f(q)
        assert -1.0 - 1e-12 <= value <= 1.0 + 1e-12


def test_gradient_matches_directional_finite_differences(problem10):
    rng = np.random.default_rng(9)
    eps = 1e-5
    for _ in range(50):
        q = rng.standard_normal(10)
        v = rng.standard_normal(10)
        v /= np.linalg.norm(v)
        fd = (problem10.f(q + eps * v) - problem10.f(q - eps * v)) / (2 * eps)
        exact = problem10.grad_f(q) @ v
        assert fd == pytest.approx(exact, rel=1e-6, abs=1e-9)


def test_quadratic_problem_requires_symmetry():
    bad = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(InvalidInputError):
        QuadraticProblem(bad)


def test_hamiltonian_identity_mass(problem10):
    ham = problem10.hamiltonian()
    q = np.zeros(10)
    q[0] = 1.0
    p = np.arange(10.0)
    assert ham.H(q, p) == pytest.approx(problem10.f(q) + 0.5 * p @ p)
    assert np.array_equal(ham.H_p(p), p)
    assert np.array_equal(ham.H_q(q), 2.0 * problem10.A @ q)


def test_hamiltonian_general_mass(problem10):
    rng = np.random.default_rng(10)
    W = rng.standard_normal((10, 10))
    M = W @ W.T + 10.0 * np.eye(10)
    ham = problem10.hamiltonian(mass=M)
    p = rng.standard_normal(10)
    Minv_p = np.linalg.solve(M, p)
    assert ham.H_p(p) == pytest.approx(Minv_p, rel=1e-12)
    assert ham.kinetic(p) == pytest.approx(0.5 * p @ Minv_p, rel=1e-12)


def test_hamiltonian_mass_validation():
    f = lambda q: 0.0
    g = lambda q: np.zeros(2)
    h = lambda q: np.zeros((2, 2))
    with pytest.raises(InvalidInputError):
        SeparableHamiltonian(f, g, h, mass=np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidInputError):
        SeparableHamiltonian(f, g, h, mass=-np.eye(2))


def test_standard_initial_state_layout():
    s = standard_initial_state(10)
    expected_q = np.zeros(10)
    expected_q[5] = 1.0
    expected_p = np.ones(10)
    expected_p[5] = 0.0
    assert np.array_equal(s.q, expected_q)
    assert np.array_equal(s.p, expected_p)
    assert s.q @ s.p == 0.0

    s4 = standard_initial_state(4)
    assert s4.q[0] == 1.0 and s4.p[0] == 0.0 and s4.q @ s4.p == 0.0
