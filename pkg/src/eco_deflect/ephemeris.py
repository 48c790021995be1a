"""
Two-body ephemerides for the Earth (about the Sun) and the Moon (about the Earth).
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from eco_deflect.elements import CartesianState, OrbitElements, kepler_states


@dataclass(frozen=True)
class EarthModel:
    """
    Circular heliocentric Earth orbit in the ecliptic.

    Attributes:
        radius: Orbit radius (LU).
        longitude_at_impact: Heliocentric longitude of the Earth at epoch 0 (rad).
        mu_sun: Solar gravitational parameter (LU^3/TU^2).
    """

    radius: float = 1.0
    longitude_at_impact: float = 0.0
    mu_sun: float = 1.0

    @property
    def mean_motion(self) -> float:
        return math.sqrt(self.mu_sun / self.radius**3)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.mean_motion

    def longitude(self, t: float) -> float:
        return self.longitude_at_impact + self.mean_motion * t

    def state(self, t: float) -> CartesianState:
        """Heliocentric Earth state at epoch ``t`` (TU)."""
        pos, vel = self.states(np.array([t]))
        return CartesianState(pos[0], vel[0], t)

    def states(self, times: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Vectorised positions and velocities, each shape (n, 3)."""
        t = np.atleast_1d(np.asarray(times, dtype=float))
        lam = self.longitude_at_impact + self.mean_motion * t
        speed = self.radius * self.mean_motion
        zeros = np.zeros_like(lam)
        pos = self.radius * np.stack([np.cos(lam), np.sin(lam), zeros], axis=1)
        vel = speed * np.stack([-np.sin(lam), np.cos(lam), zeros], axis=1)
        return pos, vel


@dataclass(frozen=True)
class MoonModel:
    """
    Moon on a fixed Kepler ellipse about the Earth.

    Attributes:
        elements: Lunar elements relative to the Earth, epoch = 0 at SOI entry.
        mu: Gravitational parameter used for the relative orbit (Earth + Moon).
    """

    elements: OrbitElements
    mu: float

    def position(self, t: float) -> NDArray[np.float64]:
        pos, _ = kepler_states(self.elements, np.array([t]), self.mu)
        return pos[0]

    def positions(self, times: ArrayLike) -> NDArray[np.float64]:
        pos, _ = kepler_states(self.elements, times, self.mu)
        return pos
