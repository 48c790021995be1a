"""
Tests for orbital elements, Kepler propagation and the state conversions.
"""

import math

import numpy as np
import pytest

from eco_deflect.elements import (
    TWO_PI,
    CartesianState,
    OrbitElements,
    SphericalState,
    cartesian_from_spherical,
    cartesian_to_elements,
    elements_to_cartesian,
    kepler_positions,
    kepler_propagate,
    kepler_states,
    rotation_matrix,
    solve_kepler,
    spherical_arrays_to_cartesian,
    spherical_from_cartesian,
    specific_energy,
)
from eco_deflect.exceptions import (
    DegenerateStateError,
    ElementsError,
    KeplerConvergenceError,
    PolarSingularityError,
)


class TestOrbitElements:
    def test_period_of_one_au_orbit_is_two_pi(self):
        assert OrbitElements(a=1.0, e=0.0).period(1.0) == pytest.approx(TWO_PI)

    def test_perihelion_and_aphelion(self):
        el = OrbitElements(a=1.2, e=0.6)
        assert el.perihelion == pytest.approx(0.48)
        assert el.aphelion == pytest.approx(1.92)


class TestSolveKepler:
    def test_residual_below_tolerance(self):
        m = np.linspace(-3.0, 3.0, 41)
        for e in (0.0, 0.3, 0.6, 0.95):
            big_e = solve_kepler(m, e)
            assert np.max(np.abs(big_e - e * np.sin(big_e) - m)) < 1e-12

    def test_scalar_input_returns_scalar_shape(self):
        assert np.shape(solve_kepler(1.0, 0.5)) == ()

    def test_iteration_cap_raises(self):
        with pytest.raises(KeplerConvergenceError):
            solve_kepler(0.1, 0.99, max_iter=0)


class TestElementConversions:
    def test_round_trip_recovers_elements(self):
        el = OrbitElements(a=1.2, e=0.6, i=0.2, raan=0.7, argp=1.3, anomaly=2.1, epoch=3.0)
        back = cartesian_to_elements(elements_to_cartesian(el, 1.0), 1.0)
        assert back.a == pytest.approx(el.a, rel=1e-12)
        assert back.e == pytest.approx(el.e, rel=1e-12)
        assert back.i == pytest.approx(el.i, abs=1e-12)
        assert back.raan == pytest.approx(el.raan, abs=1e-12)
        assert back.argp == pytest.approx(el.argp, abs=1e-11)
        assert back.anomaly == pytest.approx(el.anomaly, abs=1e-11)
        assert back.epoch == 3.0

    def test_planar_orbit_reports_zero_node(self):
        el = OrbitElements(a=1.2, e=0.6, argp=0.4, anomaly=0.5)
        back = cartesian_to_elements(elements_to_cartesian(el, 1.0), 1.0)
        assert back.raan == 0.0
        assert back.argp == pytest.approx(0.4, abs=1e-12)

    def test_circular_orbit_reports_zero_argp(self):
        st = CartesianState(np.array([0.0, 1.0, 0.0]), np.array([-1.0, 0.0, 0.0]))
        el = cartesian_to_elements(st, 1.0)
        assert el.e == 0.0
        assert el.argp == 0.0
        assert el.anomaly == pytest.approx(math.pi / 2)

    def test_hyperbolic_elements_rejected(self):
        with pytest.raises(ElementsError):
            elements_to_cartesian(OrbitElements(a=1.0, e=1.2), 1.0)

    def test_hyperbolic_state_rejected(self):
        st = CartesianState(np.array([1.0, 0.0, 0.0]), np.array([0.0, 2.0, 0.0]))
        with pytest.raises(ElementsError):
            cartesian_to_elements(st, 1.0)

    def test_rectilinear_state_rejected(self):
        st = CartesianState(np.array([1.0, 0.0, 0.0]), np.array([0.3, 0.0, 0.0]))
        with pytest.raises(DegenerateStateError):
            cartesian_to_elements(st, 1.0)

    def test_non_finite_state_rejected(self):
        with pytest.raises(DegenerateStateError):
            CartesianState(np.array([np.nan, 0.0, 0.0]), np.zeros(3))


class TestKeplerPropagation:
    def test_full_period_returns_to_start(self, eco_elements):
        after = kepler_propagate(eco_elements, eco_elements.period(1.0), 1.0)
        assert after.anomaly == pytest.approx(eco_elements.anomaly, abs=1e-10)
        assert after.epoch == pytest.approx(eco_elements.period(1.0))

    def test_backward_then_forward_is_identity(self, eco_elements):
        back = kepler_propagate(eco_elements, -2.7, 1.0)
        forth = kepler_propagate(back, 2.7, 1.0)
        assert forth.anomaly == pytest.approx(eco_elements.anomaly, abs=1e-10)

    def test_vectorised_positions_match_scalar_path(self, eco_elements):
        times = np.array([0.0, 0.5, 3.0, -1.2])
        positions = kepler_positions(eco_elements, times, 1.0)
        for t, pos in zip(times, positions, strict=True):
            expected = elements_to_cartesian(kepler_propagate(eco_elements, t, 1.0), 1.0)
            np.testing.assert_allclose(pos, expected.position, atol=1e-11)

    def test_states_conserve_energy(self, eco_elements):
        pos, vel = kepler_states(eco_elements, np.linspace(0.0, 10.0, 25), 1.0)
        energies = [specific_energy(r, v, 1.0) for r, v in zip(pos, vel, strict=True)]
        np.testing.assert_allclose(energies, -1.0 / (2.0 * eco_elements.a), rtol=1e-12)


class TestSphericalState:
    def test_rotation_matrix_is_orthonormal(self, rng):
        for theta, phi in rng.uniform(-1.4, 1.4, size=(20, 2)):
            rot = rotation_matrix(theta, phi)
            np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-14)
            assert np.linalg.det(rot) == pytest.approx(1.0, abs=1e-14)

    def test_cartesian_round_trip(self):
        st = CartesianState(np.array([0.3, -0.8, 0.1]), np.array([0.9, 0.2, -0.05]), 1.5)
        back = cartesian_from_spherical(spherical_from_cartesian(st, 1e9))
        np.testing.assert_allclose(back.position, st.position, atol=1e-14)
        np.testing.assert_allclose(back.velocity, st.velocity, atol=1e-14)
        assert back.epoch == 1.5

    def test_array_conversion_matches_scalar(self):
        sph = SphericalState(r=1.1, u=0.1, v=0.9, w=0.02, theta=2.0, phi=0.05)
        pos, vel = spherical_arrays_to_cartesian(sph.as_array().reshape(7, 1))
        expected = cartesian_from_spherical(sph)
        np.testing.assert_allclose(pos[0], expected.position, atol=1e-14)
        np.testing.assert_allclose(vel[0], expected.velocity, atol=1e-14)

    def test_pole_rejected(self):
        st = CartesianState(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
        with pytest.raises(PolarSingularityError):
            spherical_from_cartesian(st, 1.0)

    def test_non_positive_mass_rejected(self):
        with pytest.raises(DegenerateStateError):
            SphericalState(r=1.0, u=0.0, v=1.0, w=0.0, theta=0.0, phi=0.0, mass=0.0)
