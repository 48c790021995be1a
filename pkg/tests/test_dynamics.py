"""
Tests for the thrust-perturbed equations of motion and their integration.
"""

import math

import numpy as np
import pytest
from scipy.integrate import simpson

from eco_deflect.dynamics import (
    ControlHistory,
    ControlSample,
    derivatives,
    eom_rhs,
    operational_angle,
    propagate,
    relative_states,
)
from eco_deflect.elements import (
    OrbitElements,
    SphericalState,
    cartesian_from_spherical,
    elements_to_cartesian,
    kepler_positions,
    spherical_from_cartesian,
)
from eco_deflect.exceptions import NoCrossingError, PolarSingularityError


def _energy(y):
    r, u, v, w = y[0], y[1], y[2], y[3]
    return 0.5 * (u * u + v * v + w * w) - 1.0 / r


@pytest.fixture
def start_state():
    el = OrbitElements(a=1.2, e=0.6, anomaly=0.4)
    return el, spherical_from_cartesian(elements_to_cartesian(el, 1.0), 1.0)


class TestControlHistory:
    def test_zero_thrust_outside_window(self):
        ctrl = ControlHistory.constant(1.0, 2.0, 0.5, 0.3)
        assert ctrl.evaluate(0.5) == (0.0, 0.0, 0.0)
        assert ctrl.evaluate(2.5) == (0.0, 0.0, 0.0)
        assert ctrl.evaluate(1.5) == pytest.approx((0.5, 0.3, 0.0))

    def test_sigma_unwrapped_before_interpolation(self):
        ctrl = ControlHistory(
            times=np.array([0.0, 1.0]),
            accel=np.ones(2),
            sigma=np.array([3.1, -3.1]),
            beta=np.zeros(2),
        )
        _, sigma, _ = ctrl.evaluate(0.5)
        assert sigma == pytest.approx(math.pi, abs=1e-12)

    def test_from_nodes_round_trip(self):
        nodes = [ControlSample(0.1, 3.0, 0.0, 0.0), ControlSample(0.2, 3.1, 0.0, 1.0)]
        ctrl = ControlHistory.from_nodes(nodes)
        assert ctrl.nodes == nodes

    def test_single_node_rejected(self):
        with pytest.raises(ValueError):
            ControlHistory(np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1))

    def test_non_increasing_times_rejected(self):
        with pytest.raises(ValueError):
            ControlHistory(np.array([1.0, 1.0]), np.zeros(2), np.zeros(2), np.zeros(2))

    def test_negative_acceleration_rejected(self):
        with pytest.raises(ValueError):
            ControlSample(-1.0, 0.0)


class TestEquationsOfMotion:
    def test_circular_orbit_is_equilibrium(self):
        st = SphericalState(r=1.0, u=0.0, v=1.0, w=0.0, theta=0.0, phi=0.0)
        rates = eom_rhs(st, ControlSample(0.0, 0.0), 1.0)
        np.testing.assert_allclose(rates, [0.0, 0.0, 0.0, 0.0, 1.0, 0.0], atol=1e-15)

    def test_thrust_components(self):
        y = np.array([1.0, 0.0, 1.0, 0.0, 0.0, 0.0])
        rates = derivatives(y, 0.01, math.pi / 2, 0.0, 1.0)
        assert rates[1] == pytest.approx(0.01)
        assert rates[2] == pytest.approx(0.0, abs=1e-17)

    def test_pole_rejected(self):
        y = np.array([1.0, 0.0, 1.0, 0.0, 0.0, math.pi / 2])
        with pytest.raises(PolarSingularityError):
            derivatives(y, 0.0, 0.0, 0.0, 1.0)

    def test_operational_angle_anti_velocity(self):
        # Thrust opposite the velocity on a circular orbit
        assert operational_angle(math.pi, 0.0, 1.0) == pytest.approx(180.0)


class TestPropagate:
    def test_zero_thrust_matches_kepler_over_five_periods(self, start_state):
        el, st = start_state
        span = 5.0 * el.period(1.0)
        res = propagate(st, ControlHistory.zero(), (0.0, span), rtol=1e-12, atol=1e-13,
                        method="DOP853")
        pos = cartesian_from_spherical(res.final).position
        expected = kepler_positions(el, [span], 1.0)[0]
        assert np.linalg.norm(pos - expected) < 1e-7

    def test_zero_thrust_conserves_energy_and_momentum(self, start_state):
        el, st = start_state
        span = 10.0 * el.period(1.0)
        res = propagate(st, ControlHistory.zero(), (0.0, span),
                        rtol=1e-12, atol=1e-13, method="DOP853")
        y0 = res.y[:, 0]
        states = np.array([res.state_at(t) for t in np.linspace(0.0, span, 2001)])
        energy = np.array([_energy(y) for y in states])
        momentum = states[:, 0] * states[:, 2]
        assert np.max(np.abs(energy - _energy(y0))) < 1e-9 * abs(_energy(y0))
        assert np.max(np.abs(momentum - y0[0] * y0[2])) < 1e-9 * abs(y0[0] * y0[2])

    def test_thrust_work_identity(self, start_state):
        _, st = start_state
        accel, sigma = 1e-3, 0.4
        ctrl = ControlHistory.constant(0.0, 1.0, accel, sigma)
        res = propagate(st, ctrl, (0.0, 1.0), rtol=1e-12, atol=1e-13)
        times = np.linspace(0.0, 1.0, 2001)
        states = np.array([res.state_at(t) for t in times]).T
        power = accel * (math.cos(sigma) * states[2] + math.sin(sigma) * states[1])
        work = simpson(power, x=times)
        gained = _energy(res.y[:, -1]) - _energy(res.y[:, 0])
        assert gained == pytest.approx(work, rel=1e-6)

    def test_mass_stays_constant_without_mass_loss(self, start_state):
        _, st = start_state
        ctrl = ControlHistory.constant(0.0, 0.5, 1e-3, 0.0)
        res = propagate(st, ctrl, (0.0, 1.0))
        assert res.y[6, -1] == st.mass

    def test_mass_loss_follows_rocket_equation(self, scenario):
        units = scenario.units
        el = OrbitElements(a=1.2, e=0.6, anomaly=0.4)
        st = spherical_from_cartesian(elements_to_cartesian(el, 1.0), scenario.eco_mass)
        accel = 0.5 * scenario.max_accel
        res = propagate(
            st,
            ControlHistory.constant(0.0, 0.2, accel, 0.0),
            (0.0, 0.2),
            laser=scenario.laser,
            units=units,
            mass_loss=True,
        )
        rate = accel * units.accel_unit / (scenario.laser.coupling_cm * scenario.laser.q_star)
        expected = scenario.eco_mass * math.exp(-rate * 0.2 * units.time_unit)
        assert res.y[6, -1] == pytest.approx(expected, rel=1e-8)
        assert res.y[6, -1] < scenario.eco_mass

    def test_mass_loss_leaves_trajectory_unchanged(self, scenario):
        el = OrbitElements(a=1.2, e=0.6, anomaly=0.4)
        st = spherical_from_cartesian(elements_to_cartesian(el, 1.0), scenario.eco_mass)
        ctrl = ControlHistory.constant(0.0, 0.2, scenario.max_accel, 3.0)
        runs = [
            propagate(st, ctrl, (0.0, 0.3), laser=scenario.laser, units=scenario.units,
                      mass_loss=flag, rtol=1e-12, atol=1e-13)
            for flag in (False, True)
        ]
        np.testing.assert_allclose(runs[1].y[:6, -1], runs[0].y[:6, -1], rtol=1e-10, atol=1e-11)
        assert runs[1].y[6, -1] < runs[0].y[6, -1]

    def test_mass_loss_needs_laser(self, start_state):
        _, st = start_state
        with pytest.raises(ValueError):
            propagate(st, ControlHistory.zero(), (0.0, 1.0), mass_loss=True)

    def test_stops_at_soi_entry(self, scenario, collision_setup):
        res = propagate(
            collision_setup.initial_state,
            ControlHistory.zero(),
            (collision_setup.t_start, scenario.impact_epoch),
            stop_at_soi=True,
            earth=scenario.earth_model,
            soi_radius=scenario.soi_radius,
        )
        assert res.soi_event is not None
        assert collision_setup.t_start < res.soi_event.t_soi < scenario.impact_epoch
        rel_pos, _ = relative_states(res, scenario.earth_model)
        assert np.linalg.norm(rel_pos[-1]) == pytest.approx(scenario.soi_radius, rel=1e-8)

    def test_missing_soi_crossing_raises(self, scenario, collision_setup):
        t0 = collision_setup.t_start
        with pytest.raises(NoCrossingError):
            propagate(
                collision_setup.initial_state,
                ControlHistory.zero(),
                (t0, t0 + 0.1),
                stop_at_soi=True,
                earth=scenario.earth_model,
                soi_radius=scenario.soi_radius,
            )

    def test_reversed_span_rejected(self, start_state):
        _, st = start_state
        with pytest.raises(ValueError):
            propagate(st, ControlHistory.zero(), (1.0, 0.0))
