"""
Tests for the laser-ablation thrust model.
"""

import pytest

from eco_deflect.exceptions import InfeasibleControlError, LaserConfigError
from eco_deflect.laser import LaserConfig, accel_from_power, mass_loss_rate, power_from_accel


@pytest.fixture
def laser():
    return LaserConfig(power_max=10e6, coupling_cm=5e-5)


class TestLaserConfig:
    def test_specific_ablation_energy(self, laser):
        assert laser.q_star == pytest.approx(2.0 / (5e-5) ** 2)

    def test_ablation_efficiency_scales_q_star(self):
        half = LaserConfig(power_max=1e6, coupling_cm=5e-5, ablation_eff=0.5)
        assert half.q_star == pytest.approx(1.0 / (5e-5) ** 2)

    def test_invalid_values_are_all_reported(self):
        with pytest.raises(LaserConfigError) as exc:
            LaserConfig(power_max=-1.0, coupling_cm=0.0, ablation_eff=1.5)
        message = str(exc.value)
        assert "power_max" in message
        assert "coupling_cm" in message
        assert "ablation_eff" in message


class TestThrust:
    def test_accel_from_power(self, laser):
        assert accel_from_power(laser, 10e6, 1.5708e9) == pytest.approx(500.0 / 1.5708e9)

    def test_max_accel_uses_full_power(self, laser):
        assert laser.max_accel(2e9) == pytest.approx(accel_from_power(laser, 10e6, 2e9))

    def test_power_round_trip(self, laser):
        accel = accel_from_power(laser, 3.3e6, 1e9)
        assert power_from_accel(laser, accel, 1e9) == pytest.approx(3.3e6)

    def test_power_above_max_rejected(self, laser):
        with pytest.raises(LaserConfigError):
            accel_from_power(laser, 11e6, 1e9)

    def test_negative_power_rejected(self, laser):
        with pytest.raises(LaserConfigError):
            mass_loss_rate(laser, -1.0)

    def test_non_positive_mass_rejected(self, laser):
        with pytest.raises(LaserConfigError):
            accel_from_power(laser, 1e6, 0.0)

    def test_unreachable_acceleration_is_infeasible(self, laser):
        with pytest.raises(InfeasibleControlError):
            power_from_accel(laser, 1.0, 1e9)

    def test_infeasible_is_a_laser_config_error(self):
        assert issubclass(InfeasibleControlError, LaserConfigError)


class TestMassLoss:
    def test_rate_is_power_over_q_star(self, laser):
        assert mass_loss_rate(laser, 10e6) == pytest.approx(10e6 / laser.q_star)

    def test_zero_power_loses_nothing(self, laser):
        assert mass_loss_rate(laser, 0.0) == 0.0
