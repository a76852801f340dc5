"""Material law validation and path-state evolution."""

import numpy as np
import pytest

import proxtruss as pt
from proxtruss.hardening import piecewise_radius, state_from_dict, state_to_dict

from conftest import bar_problem, random_problem, unit_bar


class TestLawValidation:
    def test_positive_moduli_required(self):
        with pytest.raises(ValueError):
            pt.LinearIsotropic(h=0.0)
        with pytest.raises(ValueError):
            pt.LinearIsotropic(h=np.array([0.1, -0.2]))

    def test_theta_range(self):
        with pytest.raises(ValueError):
            pt.Mixed(theta=1.5, h=0.1)
        with pytest.raises(ValueError):
            pt.Mixed(theta=-0.1, h=0.1)
        assert pt.Mixed(theta=0.0, h=0.1).theta == 0.0
        assert pt.Mixed(theta=1.0, h=0.1).theta == 1.0

    def test_piecewise_ordering(self):
        with pytest.raises(ValueError):
            pt.PiecewiseLinear(h1=0.1, h2=0.1, R_s=1.3)
        with pytest.raises(ValueError):
            pt.PiecewiseLinear(h1=0.1, h2=0.2, R_s=1.3)
        with pytest.raises(ValueError):
            pt.PiecewiseLinear(h1=0.1, h2=0.05, R_s=0.0)

    def test_eta_value(self):
        law = pt.PiecewiseLinear(h1=0.1, h2=0.05, R_s=1.3)
        assert law.eta == pytest.approx(0.1)
        law2 = pt.PiecewiseLinear(h1=np.array([0.3]), h2=np.array([0.1]), R_s=2.0)
        assert law2.eta == pytest.approx([0.15])


class TestInitialState:
    def test_zero_start(self, bar_model):
        state = pt.initial_state(bar_model, 1.0)
        assert np.all(state.q == 0.0)
        assert np.all(state.u == 0.0)
        assert np.all(state.c_total == 0.0)
        assert state.step_index == 0
        assert state.R.tolist() == [1.0]

    def test_yield_stress_sizing(self):
        # sigma_y * a = 200 MPa * 500 mm^2 = 100 kN
        model = pt.barrel_vault(2, 2)
        state = pt.initial_state(model, 200e6 * 500e-6)
        assert np.allclose(state.R, 100e3)

    def test_nonpositive_rejected(self, bar_model):
        with pytest.raises(ValueError):
            pt.initial_state(bar_model, 0.0)
        with pytest.raises(ValueError):
            pt.initial_state(bar_model, np.array([-1.0]))


def _solve(problem, eps=1e-10):
    return pt.solve_increment(problem, pt.SolverConfig(epsilon=eps))


class TestUpdateState:
    def test_isotropic_single_bar(self):
        problem = bar_problem(f=1.5)
        solution = _solve(problem)
        state = pt.update_state(problem.state, solution, problem.law)
        assert state.q[0] == pytest.approx(1.5, abs=1e-8)
        assert state.R[0] == pytest.approx(1.5, abs=1e-8)
        assert state.gamma_acc[0] == pytest.approx(5.0, abs=1e-7)
        assert state.u[0] == pytest.approx(6.5, abs=1e-7)
        assert state.step_index == 1

    def test_mixed_single_bar(self):
        law = pt.Mixed(theta=0.5, h=0.1)
        problem = bar_problem(f=1.5, law=law)
        solution = _solve(problem)
        state = pt.update_state(problem.state, solution, law)
        assert state.R[0] == pytest.approx(1.25, abs=1e-8)
        assert state.beta[0] == pytest.approx(0.25, abs=1e-8)

    def test_elastic_step_keeps_internal_variables(self):
        problem = bar_problem(f=0.5)
        solution = _solve(problem)
        assert np.max(np.abs(solution.p)) < 1e-9
        state = pt.update_state(problem.state, solution, problem.law)
        assert np.array_equal(state.R, problem.state.R)
        assert np.array_equal(state.beta, problem.state.beta)
        assert np.array_equal(state.gamma_acc, problem.state.gamma_acc)
        expected_q = problem.state.q + problem.model.k * solution.elongation
        assert state.q == pytest.approx(expected_q, abs=1e-12)

    def test_zero_solution_is_identity(self):
        problem = bar_problem(f=0.0)
        solution = _solve(problem)
        state = pt.update_state(problem.state, solution, problem.law)
        for name in ("q", "R", "beta", "c_total", "c_plastic", "gamma_acc", "u"):
            assert np.array_equal(getattr(state, name), getattr(problem.state, name)), name
        assert state.step_index == problem.state.step_index + 1

    def test_mixed_theta_one_matches_isotropic(self):
        iso = pt.LinearIsotropic(h=0.1)
        mix = pt.Mixed(theta=1.0, h=0.1)
        state_iso = bar_problem(f=0.0).state
        state_mix = state_iso
        for f in (1.2, 1.8, 0.3, -1.0):
            prob_iso = pt.IncrementProblem(
                model=unit_bar(), state=state_iso, law=iso, f=np.array([f]))
            prob_mix = pt.IncrementProblem(
                model=unit_bar(), state=state_mix, law=mix, f=np.array([f]))
            sol_iso = _solve(prob_iso)
            sol_mix = _solve(prob_mix)
            state_iso = pt.update_state(state_iso, sol_iso, iso)
            state_mix = pt.update_state(state_mix, sol_mix, mix)
            assert state_mix.R == pytest.approx(state_iso.R, abs=1e-9)
            assert state_mix.q == pytest.approx(state_iso.q, abs=1e-9)
            assert np.allclose(state_mix.beta, 0.0, atol=1e-12)

    def test_dimension_mismatch_rejected(self):
        problem = bar_problem(f=1.5)
        solution = _solve(problem)
        other_state = pt.initial_state(pt.barrel_vault(1, 1), 1.0)
        with pytest.raises(ValueError):
            pt.update_state(other_state, solution, problem.law)


class TestPiecewiseRadius:
    def test_curve_slopes(self):
        law = pt.PiecewiseLinear(h1=0.1, h2=0.05, R_s=1.3)
        R0 = np.array([1.0])
        # first regime slope h1 up to the kink at gamma = 3
        assert piecewise_radius(law, R0, np.array([2.0]))[0] == pytest.approx(1.2)
        assert piecewise_radius(law, R0, np.array([3.0]))[0] == pytest.approx(1.3)
        # second regime slope h2
        assert piecewise_radius(law, R0, np.array([7.0]))[0] == pytest.approx(1.5)
        assert piecewise_radius(law, R0, np.array([0.0]))[0] == pytest.approx(1.0)

    def test_piecewise_update_after_two_regime_step(self):
        law = pt.PiecewiseLinear(h1=0.1, h2=0.05, R_s=1.3)
        problem = bar_problem(f=1.5, law=law)
        solution = _solve(problem)
        state = pt.update_state(problem.state, solution, law)
        assert state.gamma_acc[0] == pytest.approx(7.0, abs=1e-7)
        assert state.R[0] == pytest.approx(1.5, abs=1e-8)
        assert state.c_plastic[0] == pytest.approx(7.0, abs=1e-7)

    def test_radius_never_decreases(self):
        law = pt.PiecewiseLinear(h1=0.1, h2=0.05, R_s=1.3)
        state = pt.initial_state(unit_bar(), 1.0)
        prev_R = state.R.copy()
        for f in (1.2, 1.5, 0.2, -1.6):
            problem = pt.IncrementProblem(model=unit_bar(), state=state, law=law,
                                          f=np.array([f]))
            solution = _solve(problem)
            state = pt.update_state(state, solution, law)
            assert np.all(state.R >= prev_R - 1e-12)
            prev_R = state.R.copy()


class TestAdmissibility:
    @pytest.mark.parametrize("seed", [1, 5, 9])
    def test_converged_states_admissible(self, seed):
        problem = random_problem(seed, target=2.5)
        law = problem.law
        state = problem.state
        rng = np.random.default_rng(seed)
        for _ in range(3):
            solution = _solve(problem)
            state = pt.update_state(state, solution, law)
            tol = 1e-6 * float(np.max(state.R))
            assert np.all(np.abs(state.q - state.beta) <= state.R + tol)
            f = problem.f * rng.uniform(-1.0, 1.0)
            problem = pt.IncrementProblem(model=problem.model, state=state,
                                          law=law, f=f)


class TestStateSerialization:
    def test_round_trip(self):
        problem = bar_problem(f=1.5)
        solution = _solve(problem)
        state = pt.update_state(problem.state, solution, problem.law)
        clone = state_from_dict(state_to_dict(state))
        for name in ("q", "R", "beta", "c_total", "c_plastic", "gamma_acc", "u", "R0"):
            assert np.array_equal(getattr(clone, name), getattr(state, name)), name
        assert clone.step_index == state.step_index
