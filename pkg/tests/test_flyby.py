"""
Tests for the patched-conic encounter geometry.
"""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from eco_deflect.elements import CartesianState, kepler_states
from eco_deflect.exceptions import CapturedEntryError, DegenerateFlybyError, NoCrossingError
from eco_deflect.flyby import (
    approach_distance,
    elevation_angle,
    encounter_geometry,
    find_soi_crossing,
    flyby_map,
    impact_parameter,
    nominal_soi_entry,
    perigee_from_impact_parameter,
    relative_distance,
    separation_along,
)


def _two_body(t, y, mu):
    r = y[:3]
    return np.concatenate([y[3:], -mu * r / np.linalg.norm(r) ** 3])


def _perigee_event(t, y, mu):
    return float(y[:3] @ y[3:])


_perigee_event.terminal = True
_perigee_event.direction = 1.0


def _entry(soi_radius, b, speed, angle):
    """Entry on the SOI sphere moving along a line that passes b from the centre."""
    pos = np.array([-math.sqrt(soi_radius**2 - b**2), b, 0.0])
    vel = np.array([speed, 0.0, 0.0])
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return CartesianState(rot @ pos, rot @ vel)


class TestImpactParameter:
    def test_inverse_of_perigee(self):
        b = impact_parameter(1e-4, 0.3, 3e-6)
        assert perigee_from_impact_parameter(b, 0.3, 3e-6) == pytest.approx(1e-4, rel=1e-12)

    def test_no_gravity_means_straight_line(self):
        assert impact_parameter(2e-4, 0.3, 0.0) == pytest.approx(2e-4)

    def test_focusing_widens_the_keyhole(self):
        assert impact_parameter(1e-4, 0.3, 3e-6) > 1e-4

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValueError):
            impact_parameter(0.0, 0.3, 3e-6)
        with pytest.raises(ValueError):
            impact_parameter(1e-4, 0.0, 3e-6)


class TestApproachGeometry:
    def test_approach_distance_is_ell_cos_elevation(self, rng):
        for _ in range(20):
            rel = rng.normal(size=3)
            vel = rng.normal(size=3)
            b = approach_distance(rel, vel)
            ell = float(np.linalg.norm(rel))
            assert b == pytest.approx(ell * math.cos(elevation_angle(rel, vel)), rel=1e-10)

    def test_head_on_has_zero_approach_distance(self):
        assert approach_distance([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]) == pytest.approx(0.0)

    def test_zero_velocity_is_degenerate(self):
        with pytest.raises(DegenerateFlybyError):
            approach_distance([1.0, 0.0, 0.0], [0.0, 0.0, 0.0])

    def test_relative_distance_rate(self):
        earth = CartesianState(np.zeros(3), np.zeros(3))
        eco = CartesianState(np.array([3.0, 4.0, 0.0]), np.array([-3.0, -4.0, 0.0]))
        ell, ell_dot = relative_distance(earth, eco)
        assert ell == pytest.approx(5.0)
        assert ell_dot == pytest.approx(-5.0)

    def test_encounter_geometry_bundles_targets(self, scenario):
        eco = _entry(scenario.soi_radius, 1e-4, 0.35, 0.2)
        geo = encounter_geometry(
            eco,
            CartesianState(np.zeros(3), np.zeros(3)),
            scenario.miss_distance,
            scenario.mu_earth,
            scenario.soi_radius,
        )
        assert geo.ell == pytest.approx(scenario.soi_radius)
        assert geo.ell_dot < 0.0
        assert geo.b == pytest.approx(1e-4, rel=1e-9)
        assert geo.b_required == pytest.approx(
            impact_parameter(scenario.miss_distance, 0.35, scenario.mu_earth)
        )


class TestFlybyMap:
    def test_hyperbolic_relations_against_direct_integration(self, scenario, rng):
        mu = scenario.mu_earth
        radius = scenario.soi_radius
        for _ in range(100):
            entry = _entry(
                radius, rng.uniform(5e-5, 3e-3), rng.uniform(0.25, 0.6), rng.uniform(0, 2 * np.pi)
            )
            y0 = np.concatenate([entry.position, entry.velocity])
            sol = solve_ivp(_two_body, (0.0, 1.0), y0, method="DOP853", args=(mu,),
                            events=_perigee_event, rtol=1e-12, atol=1e-15)
            perigee = float(np.linalg.norm(sol.y_events[0][0][:3]))

            v_inf = math.sqrt(entry.speed**2 - 2.0 * mu / radius)
            h = float(np.linalg.norm(np.cross(entry.position, entry.velocity)))
            assert perigee_from_impact_parameter(h / v_inf, v_inf, mu) == pytest.approx(
                perigee, abs=1e-9
            )

    def test_exit_state_matches_direct_integration(self, scenario, rng):
        mu = scenario.mu_earth
        radius = scenario.soi_radius
        for _ in range(100):
            entry = _entry(
                radius, rng.uniform(5e-5, 3e-3), rng.uniform(0.25, 0.6), rng.uniform(0, 2 * np.pi)
            )
            out = flyby_map(entry, mu)
            y0 = np.concatenate([entry.position, entry.velocity])
            sol = solve_ivp(_two_body, (0.0, out.exit_epoch), y0, method="DOP853", args=(mu,),
                            rtol=1e-12, atol=1e-15)
            assert np.linalg.norm(sol.y[:3, -1] - out.exit_relative.position) < 1e-6
            assert np.linalg.norm(sol.y[3:, -1] - out.exit_relative.velocity) < 1e-6
            assert out.exit_relative.radius == pytest.approx(radius, rel=1e-12)

    def test_perigee_close_to_exact_conic(self, scenario):
        mu = scenario.mu_earth
        entry = _entry(scenario.soi_radius, 2e-4, 0.4, 0.0)
        out = flyby_map(entry, mu)
        y0 = np.concatenate([entry.position, entry.velocity])
        sol = solve_ivp(_two_body, (0.0, 1.0), y0, method="DOP853", args=(mu,),
                        events=_perigee_event, rtol=1e-12, atol=1e-15)
        exact = float(np.linalg.norm(sol.y_events[0][0][:3]))
        assert out.perigee_distance == pytest.approx(exact, rel=1e-2)

    def test_turn_preserves_speed(self, scenario):
        entry = _entry(scenario.soi_radius, 2e-4, 0.4, 0.3)
        out = flyby_map(entry, scenario.mu_earth)
        assert np.linalg.norm(out.v_inf_out) == pytest.approx(entry.speed)
        cos_turn = float(out.v_inf_out @ entry.velocity) / entry.speed**2
        assert math.acos(np.clip(cos_turn, -1.0, 1.0)) == pytest.approx(out.turn_angle)

    def test_exit_expressed_heliocentrically(self, scenario):
        entry = _entry(scenario.soi_radius, 2e-4, 0.4, 0.3)
        out = flyby_map(entry, scenario.mu_earth, earth=scenario.earth_model)
        earth = scenario.earth_model.state(out.exit_epoch)
        np.testing.assert_allclose(
            out.post_state.position - earth.position, out.exit_relative.position, atol=1e-14
        )

    def test_centre_impact_is_degenerate(self, scenario):
        entry = _entry(scenario.soi_radius, 0.0, 0.4, 0.0)
        with pytest.raises(DegenerateFlybyError):
            flyby_map(entry, scenario.mu_earth)

    def test_captured_entry_rejected(self, scenario):
        entry = _entry(scenario.soi_radius, 1e-4, 1e-3, 0.0)
        with pytest.raises(CapturedEntryError):
            flyby_map(entry, scenario.mu_earth)


class TestSoiCrossing:
    def test_nominal_entry_is_on_the_sphere(self, scenario):
        t_soi = nominal_soi_entry(
            scenario.eco_elements, scenario.earth_model, scenario.soi_radius, mu=scenario.mu_sun
        )
        assert -0.5 < t_soi < 0.0
        ell, ell_dot = separation_along(
            scenario.eco_elements, scenario.earth_model, [t_soi], scenario.mu_sun
        )
        assert ell[0] == pytest.approx(scenario.soi_radius, rel=1e-9)
        assert ell_dot[0] < 0.0

    def test_crossing_is_the_first_one(self, scenario):
        t_soi = nominal_soi_entry(
            scenario.eco_elements, scenario.earth_model, scenario.soi_radius, mu=scenario.mu_sun
        )
        times = np.linspace(t_soi - 0.3, t_soi - 1e-6, 500)
        ell, _ = separation_along(scenario.eco_elements, scenario.earth_model, times)
        assert np.all(ell > scenario.soi_radius)

    def test_far_window_has_no_crossing(self, scenario):
        with pytest.raises(NoCrossingError):
            find_soi_crossing(
                scenario.eco_elements, scenario.earth_model, scenario.soi_radius, -4.5, -4.0
            )

    def test_relative_states_consistent_with_kepler(self, scenario):
        pos, _ = kepler_states(scenario.eco_elements, [0.0], scenario.mu_sun)
        earth_pos, _ = scenario.earth_model.states([0.0])
        assert np.linalg.norm(pos[0] - earth_pos[0]) < 1e-8
