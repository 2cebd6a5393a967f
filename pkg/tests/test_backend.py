import numpy as np
import pytest

from csopt import (AdaptiveConfig, GdConfig, IntegratorConfig, InvalidInputError,
                   SpectrumRange, StoppingRule, adaptive_optimize,
                   compiled_available, eigen_oracle, gd_optimize,
                   generate_matrix, optimize)
from csopt import backend as backend_module
from csopt.conformal import STEP_FAILURE

needs_compiled = pytest.mark.skipif(backend_module.kernels() is None,
                                    reason="compiled kernels not built or disabled")


@needs_compiled
class TestBackendParity:
    """The compiled loops must reproduce the generic Python loops."""

    @pytest.mark.parametrize("method", ["sm1", "sm2"])
    def test_fixed_step_runs_agree(self, sphere10, start10, method):
        prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 2)
        ham = prob.hamiltonian()
        stop = StoppingRule.oracle(eigen_oracle(prob)[0])
        cfg = IntegratorConfig(0.1, gamma=0.7)
        py = optimize(sphere10, ham, start10, cfg, method, stop, backend_mode="python")
        co = optimize(sphere10, ham, start10, cfg, method, stop, backend_mode="compiled")
        assert py.status == co.status
        assert py.iterations == co.iterations
        assert np.max(np.abs(py.final_state.as_vector() - co.final_state.as_vector())) <= 1e-9
        for col in ("t", "f", "H", "g_resid", "tangency_resid", "h"):
            assert np.allclose(py.trace[col], co.trace[col], rtol=1e-9, atol=1e-12)

    def test_adaptive_runs_agree(self, sphere10, start10):
        prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 3)
        ham = prob.hamiltonian()
        stop = StoppingRule.oracle(eigen_oracle(prob)[0])
        cfg = AdaptiveConfig()
        icfg = IntegratorConfig(0.1, gamma=1.0)
        py = adaptive_optimize(sphere10, ham, start10, cfg, icfg, stop,
                               backend_mode="python")
        co = adaptive_optimize(sphere10, ham, start10, cfg, icfg, stop,
                               backend_mode="compiled")
        assert py.status == co.status
        assert py.iterations == co.iterations
        assert np.max(np.abs(py.final_state.as_vector() - co.final_state.as_vector())) <= 1e-9
        assert np.allclose(py.trace["h"], co.trace["h"], rtol=1e-12)

    def test_gd_runs_agree(self, start10):
        prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 4)
        py = gd_optimize(prob, start10.q, GdConfig(0.49), backend_mode="python")
        co = gd_optimize(prob, start10.q, GdConfig(0.49), backend_mode="compiled")
        assert py.status == co.status
        assert py.iterations == co.iterations
        assert np.max(np.abs(py.final_state.q - co.final_state.q)) <= 1e-10

    def test_step_failure_status_agrees(self, sphere10, start10):
        prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 2)
        ham = prob.hamiltonian()
        stop = StoppingRule.oracle(-10.0, max_iterations=50)
        cfg = IntegratorConfig(2.0, gamma=0.0, newton_max_iter=1)
        py = optimize(sphere10, ham, start10, cfg, "sm1", stop, backend_mode="python")
        co = optimize(sphere10, ham, start10, cfg, "sm1", stop, backend_mode="compiled")
        assert py.status == co.status == STEP_FAILURE
        assert py.iterations == co.iterations


class TestBackendSelection:
    def test_env_var_disables_kernels(self, monkeypatch):
        monkeypatch.setenv("CSOPT_PURE_PYTHON", "1")
        assert backend_module.kernels() is None
        monkeypatch.setenv("CSOPT_PURE_PYTHON", "0")
        assert (backend_module.kernels() is None) == (not compiled_available())

    @needs_compiled
    def test_compiled_mode_rejects_generic_problems(self, sphere10, start10):
        prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 2)
        ham = prob.hamiltonian(mass=2.0 * np.eye(10))
        stop = StoppingRule.oracle(eigen_oracle(prob)[0], max_iterations=10)
        with pytest.raises(InvalidInputError):
            optimize(sphere10, ham, start10, IntegratorConfig(0.1, gamma=1.0),
                     "sm1", stop, backend_mode="compiled")

    @needs_compiled
    def test_auto_mode_falls_back_for_general_mass(self, sphere10, start10):
        # general SPD mass keeps the generic path; the run must still work
        prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 2)
        ham = prob.hamiltonian(mass=np.diag(np.linspace(1.0, 1.5, 10)))
        stop = StoppingRule.oracle(eigen_oracle(prob)[0], max_iterations=300)
        report = optimize(sphere10, ham, start10, IntegratorConfig(0.1, gamma=1.0),
                          "sm1", stop)
        assert report.status in ("converged", "max-iterations")
        assert np.max(report.trace["g_resid"]) <= 1e-10
