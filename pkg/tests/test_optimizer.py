"""
Tests for the shooting transcription and the augmented-Lagrangian solver.
"""

import json
import logging
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import simpson

from eco_deflect.config import SolverOptions
from eco_deflect.dynamics import ControlHistory, propagate
from eco_deflect.elements import OrbitElements, elements_to_cartesian, spherical_from_cartesian
from eco_deflect.exceptions import EcoDeflectError, InfeasibleControlError
from eco_deflect.optimizer import (
    AugmentedLagrangian,
    BoundedProfile,
    ConstraintResiduals,
    Decision,
    NLPEvaluation,
    ShootingProblem,
    SolutionReport,
    TranscriptionSpec,
    check_feasibility,
    evaluate_constraints,
    laser_energy,
    objective,
    solve_bounded,
    solve_constant_power,
    solve_variable_power,
    sweep_start_times,
)
from eco_deflect.optimizer.transcription import _seed_decision, anti_velocity_angles, build_seeds
from eco_deflect.scenario import build_collision_scenario
from eco_deflect.units import SECONDS_PER_DAY


def _quadratic(x):
    """min x0^2 + x1^2 subject to x0 + x1 = 1 and x0 >= 0.8."""
    return NLPEvaluation(
        objective=float(x @ x),
        gradient=2.0 * x,
        eq=np.array([x[0] + x[1] - 1.0]),
        eq_jac=np.array([[1.0, 1.0]]),
        ineq=np.array([x[0] - 0.8]),
        ineq_jac=np.array([[1.0, 0.0]]),
    )


@pytest.fixture
def variable_problem(collision_setup):
    options = SolverOptions(nodes=4, restarts=1, rtol=1e-12, atol=1e-14, workers=1)
    spec = TranscriptionSpec(n_intervals=4, regime="variable", start_time=0.9)
    return ShootingProblem(collision_setup, spec, options)


class TestProblemDefinition:
    def test_profile_parsing(self):
        assert BoundedProfile.parse("const:0.3") == BoundedProfile.constant(0.3)
        ramp = BoundedProfile.parse("ramp:0.9:0")
        np.testing.assert_allclose(ramp.lower_bounds(2), [0.9, 0.45, 0.0])
        assert ramp.label == "ramp:0.9:0"

    @pytest.mark.parametrize("text", ["const", "ramp:0.1", "const:1.5", "spike:0.2"])
    def test_invalid_profiles(self, text):
        with pytest.raises(ValueError):
            BoundedProfile.parse(text)

    def test_constant_regime_fixes_acceleration(self):
        spec = TranscriptionSpec(n_intervals=10, regime="constant", start_time=0.9)
        assert spec.size == 2 + 11
        np.testing.assert_array_equal(spec.lower, np.ones(11))

    def test_bounded_regime_uses_profile(self):
        spec = TranscriptionSpec(
            n_intervals=4, regime="bounded", start_time=1.0, profile=BoundedProfile.constant(0.3)
        )
        assert spec.size == 2 + 2 * 5
        np.testing.assert_allclose(spec.lower, 0.3)

    def test_bounded_regime_needs_profile(self):
        with pytest.raises(ValueError):
            TranscriptionSpec(n_intervals=4, regime="bounded", start_time=1.0)

    def test_objective_is_trapezoid(self):
        ctrl = ControlHistory(
            np.array([0.0, 1.0, 3.0]), np.array([1.0, 3.0, 1.0]), np.zeros(3), np.zeros(3)
        )
        assert objective(ctrl) == pytest.approx(0.5 * (1 + 3) + 1.0 * (3 + 1))

    def test_decision_round_trip(self, variable_problem):
        decision = Decision(
            variable_problem.t_ref - 1e-3, 0.3, np.full(5, 0.7), np.linspace(3.0, 3.2, 5)
        )
        back = variable_problem.decision(variable_problem.vector(decision))
        assert back.t_soi == pytest.approx(decision.t_soi)
        assert back.t_op == pytest.approx(0.3)
        np.testing.assert_allclose(back.accel_frac, decision.accel_frac)
        np.testing.assert_allclose(back.sigma, decision.sigma)


class TestAugmentedLagrangian:
    def test_equality_and_active_inequality(self):
        solver = AugmentedLagrangian(
            _quadratic, [(None, None), (None, None)], feas_tol=1e-9, opt_tol=1e-12,
            max_outer=50, inner_maxiter=200,
        )
        result = solver.solve(np.array([0.0, 0.0]))
        assert result.feasible
        np.testing.assert_allclose(result.x, [0.8, 0.2], atol=1e-6)

    def test_bounds_respected(self):
        solver = AugmentedLagrangian(
            _quadratic, [(0.9, 2.0), (None, None)], feas_tol=1e-9, opt_tol=1e-12,
            max_outer=50, inner_maxiter=200,
        )
        result = solver.solve(np.array([1.5, 0.0]))
        np.testing.assert_allclose(result.x, [0.9, 0.1], atol=1e-6)

    def test_failed_initial_point(self):
        def failing(x):
            raise EcoDeflectError("cannot evaluate")

        solver = AugmentedLagrangian(
            failing, [(None, None)], feas_tol=1e-9, opt_tol=1e-9, max_outer=5, inner_maxiter=10
        )
        result = solver.solve(np.zeros(1))
        assert not result.feasible
        assert result.evaluation is None
        assert result.objective == math.inf

    def test_evaluations_are_cached(self):
        calls = []

        def counted(x):
            calls.append(x)
            return _quadratic(x)

        solver = AugmentedLagrangian(
            counted, [(None, None)] * 2, feas_tol=1e-9, opt_tol=1e-9, max_outer=5,
            inner_maxiter=10,
        )
        solver.evaluate(np.array([0.1, 0.2]))
        solver.evaluate(np.array([0.1, 0.2]))
        assert len(calls) == 1
        assert solver.nfev == 1


class TestShootingProblem:
    def test_sensitivity_gradients_match_central_differences(self, variable_problem):
        problem = variable_problem
        sigma = anti_velocity_angles(problem, 0.3)
        decision = Decision(problem.t_ref, 0.3, np.full(5, 0.7), sigma)
        x = problem.vector(decision)
        exact = problem.evaluate(x)
        problem.options = SolverOptions(
            nodes=4, restarts=1, rtol=1e-12, atol=1e-14, gradient="central", fd_step=1e-5
        )
        approx = problem.evaluate(x)
        np.testing.assert_allclose(exact.eq, approx.eq, rtol=1e-7, atol=1e-8)
        np.testing.assert_allclose(exact.gradient, approx.gradient, rtol=1e-6, atol=1e-9)
        for sens, fd in ((exact.eq_jac, approx.eq_jac), (exact.ineq_jac, approx.ineq_jac)):
            scale = max(1.0, float(np.abs(fd).max()))
            np.testing.assert_allclose(sens, fd, rtol=1e-3, atol=1e-3 * scale)

    def test_bounds_cover_window_and_controls(self, variable_problem):
        bounds = variable_problem.bounds()
        assert len(bounds) == variable_problem.spec.size
        assert bounds[0] == (-1.0, 1.0)
        assert bounds[2] == (0.0, 1.0)
        assert bounds[-1] == (None, None)

    def test_seed_residuals_agree_with_full_propagation(self, variable_problem, collision_setup):
        problem = variable_problem
        decision, _ = _seed_decision(problem, 0.3, np.ones(5))
        shot = evaluate_constraints(problem, decision)
        control = decision.control(problem.t_start, problem.a_max)
        full = check_feasibility(collision_setup, control)
        assert shot.soi_distance == pytest.approx(0.0, abs=1e-10)
        assert shot.impact_parameter == pytest.approx(full.impact_parameter, abs=1e-8)
        assert full.approach_rate < 0.0
        assert full.soi_margin == pytest.approx(shot.soi_margin, abs=1e-7)

    def test_window_after_soi_entry_is_infeasible(self, scenario):
        setup = build_collision_scenario(scenario, 0.001)
        spec = TranscriptionSpec(n_intervals=4, regime="constant", start_time=0.001)
        with pytest.raises(InfeasibleControlError):
            ShootingProblem(setup, spec, SolverOptions(nodes=4))

    def test_seeds_are_reproducible(self, collision_setup):
        options = SolverOptions(nodes=4, restarts=3, seed=7, workers=1)
        spec = TranscriptionSpec(n_intervals=4, regime="constant", start_time=0.9)
        first = build_seeds(ShootingProblem(collision_setup, spec, options))
        second = build_seeds(ShootingProblem(collision_setup, spec, options))
        assert len(first) == 3
        for a, b in zip(first, second, strict=True):
            np.testing.assert_array_equal(a.sigma, b.sigma)
            assert a.t_op == b.t_op


class TestEnergy:
    def test_constant_power_energy(self, scenario):
        t_op = scenario.units.tu_from_days(8.98)
        ctrl = ControlHistory.constant(0.0, t_op, scenario.max_accel, math.pi)
        energy = laser_energy(scenario, ctrl) / 1e3 / SECONDS_PER_DAY
        assert energy == pytest.approx(89_800.0, rel=1e-9)

    def test_mass_loss_lowers_energy(self, scenario):
        t_op = scenario.units.tu_from_days(10.0)
        ctrl = ControlHistory.constant(0.0, t_op, scenario.max_accel, math.pi)
        ablating = scenario.with_overrides(mass_loss=True)
        assert laser_energy(ablating, ctrl) < laser_energy(scenario, ctrl)

    def test_mass_loss_energy_closed_form(self, scenario):
        # Constant a: E = M0 * Q* * (1 - exp(-a t / (C_m Q*)))
        ablating = scenario.with_overrides(mass_loss=True)
        units, laser = scenario.units, scenario.laser
        t_op = units.tu_from_days(10.0)
        ctrl = ControlHistory.constant(0.0, t_op, scenario.max_accel, math.pi)
        exponent = (
            scenario.max_accel * units.accel_unit * t_op * units.time_unit
            / (laser.coupling_cm * laser.q_star)
        )
        expected = scenario.eco_mass * laser.q_star * -math.expm1(-exponent)
        assert laser_energy(ablating, ctrl) == pytest.approx(expected, rel=1e-8)

    def test_mass_loss_energy_matches_propagated_mass(self, scenario):
        ablating = scenario.with_overrides(mass_loss=True)
        units, laser = scenario.units, scenario.laser
        t_op = units.tu_from_days(10.0)
        times = np.linspace(0.0, t_op, 101)
        accel = scenario.max_accel * np.linspace(0.2, 1.0, times.size)
        ctrl = ControlHistory(times, accel, np.full(times.size, math.pi), np.zeros(times.size))

        el = OrbitElements(a=1.2, e=0.6, anomaly=0.4)
        st = spherical_from_cartesian(elements_to_cartesian(el, 1.0), scenario.eco_mass)
        res = propagate(st, ctrl, (0.0, t_op), laser=laser, units=units, mass_loss=True,
                        rtol=1e-12, atol=1e-13)
        samples = np.linspace(0.0, t_op, 2001)
        mass = np.array([res.state_at(t)[6] for t in samples])
        a_si = np.interp(samples, times, accel) * units.accel_unit
        power = a_si * mass / laser.coupling_cm
        integrated = simpson(power, x=samples * units.time_unit)
        assert laser_energy(ablating, ctrl) == pytest.approx(integrated, rel=1e-8)

    def test_no_thrust_no_energy(self, scenario):
        assert laser_energy(scenario, ControlHistory.zero()) == 0.0


class TestSolutionReport:
    def test_json_round_trip(self):
        report = SolutionReport(
            regime="variable",
            start_time=1.0,
            status="converged",
            t_soi=-0.02,
            t_op_day=4.5,
            window_day=6.0,
            idle_day=1.5,
            energy_kw_day=30_000.0,
            dv_mps=0.1,
            objective=3e-6,
            residuals=ConstraintResiduals(0.0, 1e-12, -0.3, 0.1, 0.05),
            control=ControlHistory.constant(-5.0, -4.9, 1e-5, 3.0),
            delta_deg=np.array([180.0, 181.0]),
            n_outer=4,
            nfev=120,
            seeds=8,
            message="converged",
        )
        back = SolutionReport.from_dict(json.loads(json.dumps(report.to_dict())))
        assert back.as_row() == report.as_row()
        assert back.residuals == report.residuals
        np.testing.assert_array_equal(back.control.accel, report.control.accel)
        np.testing.assert_array_equal(back.delta_deg, report.delta_deg)
        assert back.nfev == 120

    def test_row_columns(self):
        row = SolutionReport("constant", 0.9, "failed").as_row()
        assert list(row) == [
            "ti_tp", "regime", "t_op_day", "idle_day", "energy_kw_day", "dv_mps",
            "residual_b_lu", "status",
        ]
        assert not SolutionReport("constant", 0.9, "failed").feasible

    def test_residuals_satisfied(self):
        assert ConstraintResiduals(0.0, 1e-10, -0.1, 0.1, 0.01).satisfied()
        assert not ConstraintResiduals(0.0, 1e-10, 0.1, 0.1, 0.01).satisfied()


class TestInfeasibleStarts:
    def test_too_late_start_reported_infeasible(self, scenario, fast_options):
        report = solve_constant_power(scenario, 0.001, fast_options)
        assert report.status == "infeasible"
        assert not report.feasible

    def test_short_window_cannot_reach_impact_parameter(self, scenario, fast_options):
        report = solve_constant_power(scenario, 0.003, fast_options)
        assert report.status == "infeasible"

    def test_sweep_records_failures_and_continues(self, scenario, fast_options):
        reports = sweep_start_times(scenario, [0.001, 0.003], "constant", fast_options)
        assert [r.status for r in reports] == ["infeasible", "infeasible"]

    def test_parallel_sweep_logs_cold_start(self, scenario, fast_options, caplog):
        caplog.set_level(logging.INFO, logger="eco_deflect.optimizer.transcription")
        options = replace(fast_options, workers=2)
        reports = sweep_start_times(scenario, [0.001, 0.003], "constant", options)
        assert [r.status for r in reports] == ["infeasible", "infeasible"]
        assert "start cold" in caplog.text

    def test_serial_sweep_does_not_log_cold_start(self, scenario, fast_options, caplog):
        caplog.set_level(logging.INFO, logger="eco_deflect.optimizer.transcription")
        sweep_start_times(scenario, [0.001, 0.003], "constant", fast_options)
        assert "start cold" not in caplog.text

    def test_empty_sweep_rejected(self, scenario, fast_options):
        with pytest.raises(ValueError):
            sweep_start_times(scenario, [], "constant", fast_options)


@pytest.mark.slow
class TestContinuousSolutions:
    """Full solves on the default scenario; minutes each."""

    @pytest.fixture(scope="class")
    def options(self):
        return SolverOptions(workers=1)

    @pytest.fixture(scope="class")
    def constant(self, scenario, options):
        return solve_constant_power(scenario, 0.9, options)

    @pytest.fixture(scope="class")
    def variable(self, scenario, options):
        return solve_variable_power(scenario, 0.9, options)

    def test_constant_solution_is_feasible_at_tight_tolerance(self, scenario, constant):
        assert constant.feasible
        full = check_feasibility(build_collision_scenario(scenario, 0.9), constant.control)
        assert abs(full.impact_parameter) < 1e-6
        assert full.approach_rate < 0.0

    def test_constant_energy_is_power_times_duration(self, scenario, constant):
        expected = scenario.laser.power_max / 1e3 * constant.t_op_day
        assert constant.energy_kw_day == pytest.approx(expected, rel=1e-3)

    def test_operational_angle_stays_near_anti_velocity(self, constant):
        assert np.all((constant.delta_deg >= 150.0) & (constant.delta_deg <= 210.0))

    def test_regime_ordering(self, scenario, options, constant, variable):
        bounded = solve_bounded(scenario, 0.9, BoundedProfile.constant(0.3), options)
        assert variable.energy_kw_day <= bounded.energy_kw_day * 1.005
        assert bounded.energy_kw_day <= constant.energy_kw_day * 1.005

    def test_mesh_refinement_changes_little(self, scenario, constant):
        fine = solve_constant_power(scenario, 0.9, SolverOptions(nodes=120, workers=1))
        assert fine.objective == pytest.approx(constant.objective, rel=5e-3)

    def test_variable_power_plateau(self, scenario, options, variable):
        later = solve_variable_power(scenario, 1.2, options)
        assert later.energy_kw_day == pytest.approx(variable.energy_kw_day, rel=1e-2)
        assert later.idle_day > 0.0

    def test_operation_time_has_perihelion_structure(self, scenario):
        grid = np.round(np.arange(0.9, 1.96, 0.02), 2)
        reports = sweep_start_times(scenario, grid, "constant", SolverOptions(nodes=30))
        t_op = np.array([r.t_op_day for r in reports])
        interior = [k for k in range(1, len(grid) - 1)
                    if t_op[k] >= t_op[k - 1] and t_op[k] >= t_op[k + 1]]
        assert any(1.2 < grid[k] < 1.5 for k in interior)
        minima = [k for k in range(1, len(grid) - 1)
                  if t_op[k] <= t_op[k - 1] and t_op[k] <= t_op[k + 1]]
        assert any(1.8 < grid[k] < 1.95 for k in minima)
