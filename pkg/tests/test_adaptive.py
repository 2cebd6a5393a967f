import numpy as np
import pytest

from csopt import (AdaptiveConfig, IntegratorConfig, InvalidInputError,
                   PhaseState, QuadraticProblem, SphereConstraint,
                   SpectrumRange, StoppingRule, adaptive_optimize, adaptive_step,
                   controller_update, default_h0, eigen_oracle, generate_matrix,
                   optimize, random_phase_state)
from csopt.conformal import CONVERGED


class TestController:
    def test_delta_equal_to_target_keeps_h(self):
        cfg = AdaptiveConfig(r=0.06, theta=0.5)
        assert controller_update(0.1, 0.06, cfg) == pytest.approx(0.1, rel=1e-15)

    def test_zero_gain_keeps_h_for_any_delta(self):
        cfg = AdaptiveConfig(r=0.06, theta=0.0)
        for delta in (0.0, 1e-12, 0.06, 1e6):
            assert controller_update(0.1, delta, cfg) == 0.1

    def test_reference_update_value(self):
        cfg = AdaptiveConfig(r=0.06, theta=0.001)
        expected = 0.1 * (0.06 / 0.6) ** 0.0005
        out = controller_update(0.1, 0.6, cfg)
        assert out == pytest.approx(expected, rel=1e-15)
        assert out == pytest.approx(0.09988, abs=1e-5)

    def test_zero_delta_growth_is_capped(self):
        cfg = AdaptiveConfig(r=0.06, theta=0.001, h0=0.1, h_max=10.0)
        assert controller_update(0.1, 0.0, cfg) == pytest.approx(0.2, rel=1e-15)

    def test_monotone_decreasing_in_delta(self):
        cfg = AdaptiveConfig(r=0.06, theta=1.5, h_max=100.0)
        deltas = np.concatenate([[0.0], np.logspace(-12, 3, 40)])
        values = [controller_update(1.0, d, cfg) for d in deltas]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))

    def test_clamping_to_bounds(self):
        cfg = AdaptiveConfig(r=0.06, theta=2.0, h0=0.5, h_min=0.1, h_max=1.0)
        assert controller_update(0.5, 1e9, cfg) == 0.1
        assert controller_update(0.9, 1e-9, cfg) == 1.0

    def test_negative_delta_rejected(self):
        with pytest.raises(InvalidInputError):
            controller_update(0.1, -1.0, AdaptiveConfig())

    def test_config_validation(self):
        with pytest.raises(InvalidInputError):
            AdaptiveConfig(r=0.0)
        with pytest.raises(InvalidInputError):
            AdaptiveConfig(theta=2.5)
        with pytest.raises(InvalidInputError):
            AdaptiveConfig(h0=2.0, h_max=1.0)


def test_default_h0_thresholds():
    assert default_h0(2.0) == 0.1
    assert default_h0(199.99) == 0.1
    assert default_h0(200.0) == 0.09


class TestAdaptiveStep:
    def test_stationary_state_gives_zero_delta_and_growth(self):
        man = SphereConstraint(4)
        ham = QuadraticProblem(np.zeros((4, 4))).hamiltonian()
        s = PhaseState([1.0, 0.0, 0.0, 0.0], np.zeros(4))
        cfg = AdaptiveConfig(r=0.06, theta=0.001, h0=0.1, h_max=1.0)
        state, h_next, delta = adaptive_step(man, ham, s, 0.1, cfg,
                                             IntegratorConfig(0.1, gamma=0.0))
        assert delta == 0.0
        assert np.array_equal(state.as_vector(), s.as_vector())
        assert h_next == pytest.approx(0.2, rel=1e-15)

    def test_delta_scales_quadratically_with_h(self, sphere10, ham10):
        rng = np.random.default_rng(30)
        s = random_phase_state(sphere10, ham10, rng)
        cfg = AdaptiveConfig()
        icfg = IntegratorConfig(0.1, gamma=1.0)
        _, _, d_coarse = adaptive_step(sphere10, ham10, s, 0.1, cfg, icfg)
        _, _, d_fine = adaptive_step(sphere10, ham10, s, 0.05, cfg, icfg)
        assert 3.0 <= d_coarse / d_fine <= 5.0


class TestAdaptiveOptimize:
    def test_zero_gain_reproduces_fixed_run_bitwise(self, sphere10, start10, backend_mode):
        prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 4)
        ham = prob.hamiltonian()
        stop = StoppingRule.oracle(eigen_oracle(prob)[0])
        icfg = IntegratorConfig(0.1, gamma=1.0)
        fixed = optimize(sphere10, ham, start10, icfg, "sm1", stop,
                         backend_mode=backend_mode)
        adaptive = adaptive_optimize(sphere10, ham, start10,
                                     AdaptiveConfig(theta=0.0, h0=0.1),
                                     icfg, stop, backend_mode=backend_mode)
        assert adaptive.status == fixed.status == CONVERGED
        assert adaptive.iterations == fixed.iterations
        assert np.array_equal(adaptive.trace, fixed.trace)
        assert np.array_equal(adaptive.final_state.q, fixed.final_state.q)
        assert np.array_equal(adaptive.final_state.p, fixed.final_state.p)

    def test_zero_iteration_budget(self, sphere10, ham10, start10, problem10):
        stop = StoppingRule.oracle(eigen_oracle(problem10)[0], max_iterations=0)
        report = adaptive_optimize(sphere10, ham10, start10, AdaptiveConfig(),
                                   IntegratorConfig(0.1, gamma=1.0), stop)
        assert report.status == "max-iterations"
        assert len(report.trace) == 1

    def test_stepsizes_stay_within_bounds(self, sphere10, start10, backend_mode):
        prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, 4)
        ham = prob.hamiltonian()
        stop = StoppingRule.oracle(eigen_oracle(prob)[0])
        cfg = AdaptiveConfig(r=0.06, theta=0.001, h0=0.1, h_min=0.05, h_max=0.12)
        report = adaptive_optimize(sphere10, ham, start10, cfg,
                                   IntegratorConfig(0.1, gamma=1.0), stop,
                                   backend_mode=backend_mode)
        assert report.status == CONVERGED
        assert np.all(report.trace["h"] >= 0.05 - 1e-15)
        assert np.all(report.trace["h"] <= 0.12 + 1e-15)

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_adaptive_needs_no_more_iterations_than_fixed(self, sphere10, start10, seed):
        prob = generate_matrix(SpectrumRange(-1.0, 1.0), 10, seed)
        ham = prob.hamiltonian()
        stop = StoppingRule.oracle(eigen_oracle(prob)[0])
        icfg = IntegratorConfig(0.1, gamma=1.0)
        fixed = optimize(sphere10, ham, start10, icfg, "sm1", stop)
        adaptive = adaptive_optimize(sphere10, ham, start10, AdaptiveConfig(h0=0.1),
                                     icfg, stop)
        assert fixed.status == CONVERGED and adaptive.status == CONVERGED
        assert adaptive.iterations <= fixed.iterations
