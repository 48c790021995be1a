"""
Canonical unit system and physical constants.

Distances are scaled by 1 LU = 1 au and times by 1 TU = P/(2*pi), where P is
the period of a circular orbit of radius 1 au about the Sun. With this choice
the Sun's gravitational parameter is 1 LU^3/TU^2 by construction and
1 SU = 1 LU/TU is about 29.785 km/s.

Physical constants are the IAU 2015 nominal values (au, solar and terrestrial
mass parameters). The lunar mass parameter and the Earth radius used for
miss-distance units are not part of that resolution and are listed separately.
"""

import math
from dataclasses import dataclass, field

# IAU 2012 B2 / IAU 2015 B3 nominal values
AU_M = 1.495978707e11
GM_SUN_SI = 1.3271244e20
GM_EARTH_SI = 3.986004e14

GM_MOON_SI = 4.9028e12
EARTH_RADIUS_M = 6.371e6
SOI_RADIUS_M = 9.31e8

SECONDS_PER_DAY = 86400.0
SECONDS_PER_JULIAN_YEAR = 365.25 * SECONDS_PER_DAY


@dataclass(frozen=True)
class CanonicalUnits:
    """
    Heliocentric canonical units.

    Attributes:
        length_unit: Meters per LU.
        time_unit: Seconds per TU.
        speed_unit: Meters per second per SU (always length_unit / time_unit).
        grav_param_sun: Solar gravitational parameter in LU^3/TU^2 (1 in heliocentric units).
        grav_param_earth: Terrestrial gravitational parameter in LU^3/TU^2.
        grav_param_moon: Lunar gravitational parameter in LU^3/TU^2.
    """

    length_unit: float
    time_unit: float
    grav_param_sun: float
    grav_param_earth: float
    grav_param_moon: float
    speed_unit: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "speed_unit", self.length_unit / self.time_unit)

    @property
    def accel_unit(self) -> float:
        """Meters per second squared per canonical acceleration unit (SU/TU)."""
        return self.speed_unit / self.time_unit

    @property
    def earth_radius(self) -> float:
        """Earth radius in LU."""
        return EARTH_RADIUS_M / self.length_unit

    def days(self, tu: float) -> float:
        """Convert a duration in TU to days."""
        return tu * self.time_unit / SECONDS_PER_DAY

    def tu_from_days(self, days: float) -> float:
        """Convert a duration in days to TU."""
        return days * SECONDS_PER_DAY / self.time_unit

    def lu_from_meters(self, meters: float) -> float:
        return meters / self.length_unit

    def years(self, tu: float) -> float:
        """Convert a duration in TU to Julian years."""
        return tu * self.time_unit / SECONDS_PER_JULIAN_YEAR


def make_canonical_units() -> CanonicalUnits:
    """
    Build the canonical unit system used throughout the package.

    Returns:
        Units with 1 LU = 1 au, 1 TU = sqrt(au^3 / GM_sun) and GM_sun = 1.
    """
    length_unit = AU_M
    time_unit = math.sqrt(length_unit**3 / GM_SUN_SI)
    scale = time_unit**2 / length_unit**3
    return CanonicalUnits(
        length_unit=length_unit,
        time_unit=time_unit,
        grav_param_sun=GM_SUN_SI * scale,
        grav_param_earth=GM_EARTH_SI * scale,
        grav_param_moon=GM_MOON_SI * scale,
    )


def make_earth_centred_units() -> CanonicalUnits:
    """
    Units for motion inside the Earth's SOI.

    Returns:
        Units with 1 LU = 1 Earth radius, 1 TU = sqrt(R^3 / GM_earth) and GM_earth = 1.
    """
    length_unit = EARTH_RADIUS_M
    time_unit = math.sqrt(length_unit**3 / GM_EARTH_SI)
    scale = time_unit**2 / length_unit**3
    return CanonicalUnits(
        length_unit=length_unit,
        time_unit=time_unit,
        grav_param_sun=GM_SUN_SI * scale,
        grav_param_earth=GM_EARTH_SI * scale,
        grav_param_moon=GM_MOON_SI * scale,
    )
