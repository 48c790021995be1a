"""
Lumped-parameter laser-ablation thrust model.

The ablation jet produces a force F = P * C_m, so an object of mass M feels
a = P * C_m / M, and material leaves at dM/dt = -P / Q* with the specific
ablation energy Q* = 2 * eta / C_m^2.

All quantities here are SI (W, N*s/J, kg, m/s^2, kg/s); the dynamics module
converts accelerations to canonical units.
"""

from dataclasses import dataclass, field

from eco_deflect.exceptions import InfeasibleControlError, LaserConfigError

# Relative slack when comparing a derived power with power_max
POWER_RTOL = 1e-9


@dataclass(frozen=True)
class LaserConfig:
    """
    Laser ablation system parameters.

    Attributes:
        power_max: Maximum laser power (W).
        coupling_cm: Momentum coupling coefficient C_m (N*s/J).
        ablation_eff: Ablation efficiency eta_AB, in (0, 1].
        q_star: Specific ablation energy Q* = 2*eta/C_m^2 (J/kg), derived.
    """

    power_max: float
    coupling_cm: float
    ablation_eff: float = 1.0
    q_star: float = field(init=False)

    def __post_init__(self) -> None:
        errors = []
        if not self.power_max > 0.0:
            errors.append(f"power_max must be positive, got {self.power_max}")
        if not self.coupling_cm > 0.0:
            errors.append(f"coupling_cm must be positive, got {self.coupling_cm}")
        if not 0.0 < self.ablation_eff <= 1.0:
            errors.append(f"ablation_eff must lie in (0, 1], got {self.ablation_eff}")
        if errors:
            raise LaserConfigError("; ".join(errors))
        object.__setattr__(self, "q_star", 2.0 * self.ablation_eff / self.coupling_cm**2)

    def max_accel(self, mass: float) -> float:
        """Acceleration at full power for an object of the given mass (m/s^2)."""
        return accel_from_power(self, self.power_max, mass)


def _check_power(cfg: LaserConfig, power: float) -> None:
    if power < 0.0:
        raise LaserConfigError(f"laser power must be non-negative, got {power} W")
    if power > cfg.power_max * (1.0 + POWER_RTOL):
        raise LaserConfigError(f"laser power {power} W exceeds power_max {cfg.power_max} W")


def accel_from_power(cfg: LaserConfig, power: float, mass: float) -> float:
    """
    Acceleration produced by the ablation jet.

    Args:
        cfg: Laser configuration.
        power: Laser power (W), within [0, power_max].
        mass: Object mass (kg).

    Returns:
        power * C_m / mass (m/s^2).

    Raises:
        LaserConfigError: If power is outside [0, power_max] or mass <= 0.
    """
    _check_power(cfg, power)
    if not mass > 0.0:
        raise LaserConfigError(f"mass must be positive, got {mass} kg")
    return power * cfg.coupling_cm / mass


def mass_loss_rate(cfg: LaserConfig, power: float) -> float:
    """
    Rate at which ablated material leaves the object.

    Returns:
        power / Q* (kg/s), always >= 0.

    Raises:
        LaserConfigError: If power is outside [0, power_max].
    """
    _check_power(cfg, power)
    return power / cfg.q_star


def power_from_accel(cfg: LaserConfig, accel: float, mass: float) -> float:
    """
    Laser power needed to produce a given acceleration.

    Args:
        cfg: Laser configuration.
        accel: Acceleration magnitude (m/s^2), >= 0.
        mass: Object mass (kg).

    Returns:
        accel * mass / C_m (W).

    Raises:
        LaserConfigError: If accel < 0 or mass <= 0.
        InfeasibleControlError: If the required power exceeds power_max.
    """
    if accel < 0.0:
        raise LaserConfigError(f"acceleration must be non-negative, got {accel}")
    if not mass > 0.0:
        raise LaserConfigError(f"mass must be positive, got {mass} kg")
    power = accel * mass / cfg.coupling_cm
    if power > cfg.power_max * (1.0 + POWER_RTOL):
        raise InfeasibleControlError(
            f"acceleration {accel:.6e} m/s^2 on {mass:.6e} kg needs {power:.6e} W "
            f"> power_max {cfg.power_max:.6e} W"
        )
    return power
