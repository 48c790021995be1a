"""
Collision scenarios and scenario files.

A Scenario fixes the ECO orbit, the Earth model, the laser, the ECO mass and
the encounter targets. Both bodies are phased so that, without any action,
the ECO reaches the Earth's centre at epoch 0; start times are then measured
backwards from that impact.

Scenario files are JSON with unit-suffixed keys::

    {
      "name": "apollo_a12_e06",
      "eco": {"a_au": 1.2, "e": 0.6, "density_kg_m3": 3000.0, "diameter_m": 100.0},
      "laser": {"power_mw": 10.0, "cm_ns_per_j": 5e-05, "ablation_eff": 1.0},
      "encounter": {"miss_re": 2.0, "soi_m": 931000000.0, "crossing": "inbound"},
      "flags": {"mass_loss": "off", "planar": "on"}
    }

Omitted keys take the defaults in SCHEMA. Validation collects every problem
before raising.
"""

import json
import logging
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Literal

from eco_deflect.elements import (
    TWO_PI,
    OrbitElements,
    SphericalState,
    elements_to_cartesian,
    kepler_propagate,
    spherical_from_cartesian,
)
from eco_deflect.ephemeris import EarthModel
from eco_deflect.exceptions import ScenarioError
from eco_deflect.laser import LaserConfig
from eco_deflect.units import (
    EARTH_RADIUS_M,
    SECONDS_PER_DAY,
    CanonicalUnits,
    make_canonical_units,
)

logger = logging.getLogger(__name__)

Crossing = Literal["inbound", "outbound"]
CROSSINGS = ("inbound", "outbound")
SWITCH_VALUES = {"on": True, "off": False, True: True, False: False}

# |r_eco - r_earth| allowed at the nominal impact epoch
IMPACT_TOL = 1e-8

_REQUIRED = object()

# section -> key -> default (``_REQUIRED`` when the key must be present)
SCHEMA: dict[str, dict[str, Any]] = {
    "eco": {
        "a_au": _REQUIRED,
        "e": _REQUIRED,
        "i_deg": 0.0,
        "raan_deg": 0.0,
        "argp_deg": 0.0,
        "density_kg_m3": 3000.0,
        "diameter_m": 100.0,
        "mass_kg": None,
    },
    "earth": {"radius_au": 1.0},
    "laser": {"power_mw": 10.0, "cm_ns_per_j": 5e-5, "ablation_eff": 1.0},
    "encounter": {"miss_re": 2.0, "soi_m": 9.31e8, "crossing": "inbound"},
    "flags": {"mass_loss": "off", "planar": "on"},
}
_STRING_KEYS = {"crossing"}
_SWITCH_KEYS = {"mass_loss", "planar"}

SHIPPED_SCENARIOS = ("apollo_a12_e06", "bennu_like")


@dataclass(frozen=True)
class ScenarioFlags:
    mass_loss: bool = False
    planar: bool = True
    crossing: Crossing = "inbound"


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    A fully specified deflection problem in canonical units.

    Attributes:
        name: Scenario label.
        eco_elements: ECO elements at the impact epoch (anomaly at the crossing).
        earth_model: Earth ephemeris phased to the impact.
        laser: Laser parameters (SI).
        eco_mass: Initial ECO mass (kg).
        miss_distance: Target perigee l_m (LU).
        soi_radius: SOI radius (LU).
        units: Canonical unit system.
        flags: Model switches.
        settings: Normalised file values the scenario was built from.
        mass_source: How eco_mass was obtained.
        impact_epoch: Nominal impact epoch (TU), 0 by convention.
    """

    name: str
    eco_elements: OrbitElements
    earth_model: EarthModel
    laser: LaserConfig
    eco_mass: float
    miss_distance: float
    soi_radius: float
    units: CanonicalUnits
    flags: ScenarioFlags
    settings: dict[str, dict[str, Any]]
    mass_source: str = "mass_kg"
    impact_epoch: float = 0.0

    @property
    def mu_sun(self) -> float:
        return self.units.grav_param_sun

    @property
    def mu_earth(self) -> float:
        return self.units.grav_param_earth

    @property
    def period(self) -> float:
        """ECO orbital period Tp (TU)."""
        return eco_period(self.eco_elements, self.mu_sun)

    @property
    def max_accel(self) -> float:
        """Full-power laser acceleration on the initial mass (SU/TU)."""
        return self.laser.max_accel(self.eco_mass) / self.units.accel_unit

    @property
    def miss_distance_re(self) -> float:
        return self.miss_distance * self.units.length_unit / EARTH_RADIUS_M

    def with_overrides(
        self, *, miss_re: float | None = None, mass_loss: bool | None = None
    ) -> "Scenario":
        """Rebuild the scenario with a different miss distance or mass-loss flag."""
        data = to_dict(self)
        if miss_re is not None:
            data["encounter"]["miss_re"] = miss_re
        if mass_loss is not None:
            data["flags"]["mass_loss"] = "on" if mass_loss else "off"
        return from_dict(data)

    def mass_note(self) -> str:
        """One-line summary of the mass assumption and the resulting acceleration."""
        accel_si = self.laser.max_accel(self.eco_mass)
        dv_per_day = accel_si * SECONDS_PER_DAY
        return (
            f"ECO mass {self.eco_mass:.6e} kg from {self.mass_source}; full-power acceleration "
            f"{accel_si:.6e} m/s^2 ({dv_per_day:.6f} m/s per day of firing at "
            f"{self.laser.power_max / 1e6:g} MW)"
        )


@dataclass(frozen=True)
class CollisionSetup:
    """
    Initial condition for a deflection run.

    Attributes:
        scenario: The scenario the run belongs to.
        initial_state: ECO state at epoch -lead_time.
        lead_time: Time left to impact at the start (TU).
        lead_time_tp: Same, in ECO periods.
    """

    scenario: Scenario
    initial_state: SphericalState
    lead_time: float
    lead_time_tp: float

    @property
    def t_start(self) -> float:
        return self.scenario.impact_epoch - self.lead_time


def eco_period(eco_elements: OrbitElements, mu: float = 1.0) -> float:
    """Orbital period 2*pi*sqrt(a^3/mu) (TU); a=1, mu=1 gives one year."""
    if not eco_elements.a > 0.0:
        raise ScenarioError([f"eco.a_au: semimajor axis must be positive, got {eco_elements.a}"])
    return eco_elements.period(mu)


def crossing_anomaly(elements: OrbitElements, radius: float, crossing: Crossing) -> float:
    """
    True anomaly at which the ECO orbit reaches the given heliocentric radius.

    Returns f* in (0, pi) for the outbound crossing (after perihelion) and
    2*pi - f* for the inbound one (before perihelion).

    Raises:
        ScenarioError: If the orbit never reaches that radius.
    """
    p = elements.a * (1.0 - elements.e**2)
    if not elements.e > 0.0:
        raise ScenarioError(["eco.e: a circular orbit has no crossing point"])
    cos_f = (p / radius - 1.0) / elements.e
    if not -1.0 < cos_f < 1.0:
        raise ScenarioError(
            [
                f"orbit does not cross the Earth's orbit: perihelion {elements.perihelion:.6f} au, "
                f"aphelion {elements.aphelion:.6f} au, Earth at {radius:.6f} au"
            ]
        )
    f_star = math.acos(cos_f)
    return f_star if crossing == "outbound" else TWO_PI - f_star


def phase_for_impact(
    elements: OrbitElements, earth: EarthModel, crossing: Crossing
) -> tuple[OrbitElements, EarthModel]:
    """
    Place the ECO at the orbit crossing at epoch 0 and the Earth on top of it.

    Returns:
        ECO elements with the crossing anomaly at epoch 0 and the Earth model
        whose longitude at epoch 0 is the ECO's.
    """
    f_c = crossing_anomaly(elements, earth.radius, crossing)
    at_impact = replace(elements, anomaly=f_c, epoch=0.0)
    pos = elements_to_cartesian(at_impact, earth.mu_sun).position
    longitude = math.atan2(pos[1], pos[0])
    return at_impact, replace(earth, longitude_at_impact=longitude)


def impact_offset(scenario: Scenario) -> float:
    """|r_eco - r_earth| at the nominal impact epoch, a check on the phasing."""
    eco = elements_to_cartesian(scenario.eco_elements, scenario.mu_sun)
    earth = scenario.earth_model.state(scenario.impact_epoch)
    return float(((eco.position - earth.position) ** 2).sum() ** 0.5)


def build_collision_scenario(scenario: Scenario, lead_time: float) -> CollisionSetup:
    """
    ECO initial state ``lead_time`` ECO periods before the nominal impact.

    Args:
        scenario: Phased scenario.
        lead_time: t_i in units of Tp, > 0.

    Returns:
        CollisionSetup holding the spherical state at epoch -t_i.

    Raises:
        ScenarioError: If lead_time is not positive or the phasing is broken.
    """
    if not lead_time > 0.0:
        raise ScenarioError([f"lead time must be positive, got {lead_time} Tp"])
    offset = impact_offset(scenario)
    if offset > IMPACT_TOL:
        raise ScenarioError([f"scenario is not on a collision course (offset {offset:.3e} LU)"])
    lead = lead_time * scenario.period
    el0 = kepler_propagate(scenario.eco_elements, -lead, scenario.mu_sun)
    state = spherical_from_cartesian(
        elements_to_cartesian(el0, scenario.mu_sun), scenario.eco_mass
    )
    return CollisionSetup(scenario, state, lead, lead_time)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _normalise(data: Any, errors: list[str]) -> dict[str, dict[str, Any]]:
    if not isinstance(data, dict):
        errors.append("scenario must be a JSON object")
        return {}
    unknown = set(data) - set(SCHEMA) - {"name"}
    errors.extend(f"{key}: unknown section" for key in sorted(unknown))
    settings: dict[str, dict[str, Any]] = {}
    for section, keys in SCHEMA.items():
        raw = data.get(section, {})
        if not isinstance(raw, dict):
            errors.append(f"{section}: must be an object")
            raw = {}
        errors.extend(f"{section}.{k}: unknown key" for k in sorted(set(raw) - set(keys)))
        values: dict[str, Any] = {}
        for key, default in keys.items():
            value = raw.get(key, default)
            where = f"{section}.{key}"
            if value is _REQUIRED:
                errors.append(f"{where}: required")
                continue
            if key in _SWITCH_KEYS:
                if value not in SWITCH_VALUES:
                    errors.append(f"{where}: expected 'on' or 'off', got {value!r}")
                    continue
                value = "on" if SWITCH_VALUES[value] else "off"
            elif key in _STRING_KEYS:
                if value not in CROSSINGS:
                    errors.append(f"{where}: expected one of {CROSSINGS}, got {value!r}")
                    continue
            elif value is not None and not _is_number(value):
                errors.append(f"{where}: expected a number, got {value!r}")
                continue
            elif value is not None and not math.isfinite(value):
                errors.append(f"{where}: must be finite, got {value!r}")
                continue
            values[key] = float(value) if _is_number(value) else value
        settings[section] = values
    name = data.get("name", "scenario")
    if not isinstance(name, str):
        errors.append(f"name: expected a string, got {name!r}")
    settings["_meta"] = {"name": name if isinstance(name, str) else "scenario"}
    return settings


def _positive(settings: dict, section: str, key: str, errors: list[str]) -> None:
    value = settings.get(section, {}).get(key)
    if value is not None and not value > 0.0:
        errors.append(f"{section}.{key}: must be positive, got {value}")


def _check_ranges(settings: dict[str, dict[str, Any]], errors: list[str]) -> None:
    eco = settings.get("eco", {})
    for section, key in (
        ("eco", "a_au"),
        ("eco", "density_kg_m3"),
        ("eco", "diameter_m"),
        ("eco", "mass_kg"),
        ("earth", "radius_au"),
        ("laser", "power_mw"),
        ("laser", "cm_ns_per_j"),
        ("encounter", "miss_re"),
        ("encounter", "soi_m"),
    ):
        _positive(settings, section, key, errors)
    e = eco.get("e")
    if e is not None and not 0.0 <= e < 1.0:
        errors.append(f"eco.e: eccentricity must satisfy 0 <= e < 1, got {e}")
    inc = eco.get("i_deg")
    if inc is not None and not 0.0 <= inc < 180.0:
        errors.append(f"eco.i_deg: inclination must lie in [0, 180), got {inc}")
    eta = settings.get("laser", {}).get("ablation_eff")
    if eta is not None and not 0.0 < eta <= 1.0:
        errors.append(f"laser.ablation_eff: must lie in (0, 1], got {eta}")

    enc = settings.get("encounter", {})
    miss, soi = enc.get("miss_re"), enc.get("soi_m")
    if miss and soi and miss * EARTH_RADIUS_M >= soi:
        errors.append(f"encounter.miss_re: miss distance {miss} R_E lies outside the SOI")

    a, radius = eco.get("a_au"), settings.get("earth", {}).get("radius_au")
    if a and radius and e is not None and 0.0 <= e < 1.0 and a > 0.0 and radius > 0.0:
        if not a * (1.0 - e) < radius < a * (1.0 + e):
            errors.append(
                f"eco: orbit does not cross the Earth's orbit, need a(1-e) < {radius} < a(1+e) "
                f"but a(1-e) = {a * (1.0 - e):.6f} and a(1+e) = {a * (1.0 + e):.6f}"
            )
        elif inc:
            _check_node_crossing(settings, errors)


def _check_node_crossing(settings: dict[str, dict[str, Any]], errors: list[str]) -> None:
    eco = settings["eco"]
    if settings.get("flags", {}).get("planar") == "on":
        errors.append("eco.i_deg: planar scenarios need i = 0 (set flags.planar to 'off')")
        return
    el = OrbitElements(eco["a_au"], eco["e"], argp=math.radians(eco["argp_deg"]))
    f_c = crossing_anomaly(el, settings["earth"]["radius_au"], settings["encounter"]["crossing"])
    if abs(math.sin(el.argp + f_c)) > 1e-9:
        errors.append("eco: inclined orbit crosses the Earth's orbit radius off the ecliptic")


def from_dict(data: Any) -> Scenario:
    """
    Build a Scenario from a decoded scenario document.

    Raises:
        ScenarioError: With every field-level problem found.
    """
    errors: list[str] = []
    settings = _normalise(data, errors)
    if not errors:
        _check_ranges(settings, errors)
    if errors:
        raise ScenarioError(errors)

    units = make_canonical_units()
    eco, laser_s, enc, flags_s = (
        settings["eco"],
        settings["laser"],
        settings["encounter"],
        settings["flags"],
    )
    flags = ScenarioFlags(
        mass_loss=flags_s["mass_loss"] == "on",
        planar=flags_s["planar"] == "on",
        crossing=enc["crossing"],
    )
    elements = OrbitElements(
        # 1 LU is 1 au
        a=eco["a_au"],
        e=eco["e"],
        i=math.radians(eco["i_deg"]),
        raan=math.radians(eco["raan_deg"]),
        argp=math.radians(eco["argp_deg"]),
    )
    earth = EarthModel(radius=settings["earth"]["radius_au"], mu_sun=units.grav_param_sun)
    elements, earth = phase_for_impact(elements, earth, flags.crossing)

    if eco["mass_kg"] is not None:
        mass, source = eco["mass_kg"], "mass_kg"
    else:
        radius_m = 0.5 * eco["diameter_m"]
        mass = eco["density_kg_m3"] * 4.0 / 3.0 * math.pi * radius_m**3
        source = f"density {eco['density_kg_m3']:g} kg/m^3 and diameter {eco['diameter_m']:g} m"

    scenario = Scenario(
        name=settings["_meta"]["name"],
        eco_elements=elements,
        earth_model=earth,
        laser=LaserConfig(
            power_max=laser_s["power_mw"] * 1e6,
            coupling_cm=laser_s["cm_ns_per_j"],
            ablation_eff=laser_s["ablation_eff"],
        ),
        eco_mass=mass,
        miss_distance=units.lu_from_meters(enc["miss_re"] * EARTH_RADIUS_M),
        soi_radius=units.lu_from_meters(enc["soi_m"]),
        units=units,
        flags=flags,
        settings=settings,
        mass_source=source,
    )
    logger.debug("built scenario %s (Tp = %.6f TU)", scenario.name, scenario.period)
    return scenario


def to_dict(scenario: Scenario) -> dict[str, Any]:
    """Scenario document with the values it was built from."""
    data: dict[str, Any] = {"name": scenario.name}
    for section in SCHEMA:
        data[section] = dict(scenario.settings[section])
    return data


def validate_scenario(path: str | Path) -> Scenario:
    """
    Load and validate a scenario file.

    Args:
        path: Path to a UTF-8 JSON scenario file.

    Returns:
        The validated Scenario.

    Raises:
        ScenarioError: If the file cannot be read or parsed, or fails validation.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioError([f"cannot read scenario file {path}: {err}"]) from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError([f"{path}: invalid JSON ({err})"]) from err
    return from_dict(data)


def dump_scenario(scenario: Scenario, path: str | Path) -> None:
    """Write a scenario file that reloads to identical parameters."""
    Path(path).write_text(json.dumps(to_dict(scenario), indent=2) + "\n", encoding="utf-8")


def shipped_scenario_path(name: str = "apollo_a12_e06") -> Path:
    """Path of a scenario file shipped with the package."""
    if name not in SHIPPED_SCENARIOS:
        raise ScenarioError(
            [f"unknown shipped scenario {name!r}, expected one of {SHIPPED_SCENARIOS}"]
        )
    return Path(str(resources.files("eco_deflect") / "data" / f"{name}.json"))


def load_shipped(name: str = "apollo_a12_e06") -> Scenario:
    return validate_scenario(shipped_scenario_path(name))
