"""
Lunar perturbation of the close approach.

Inside the SOI the ECO is integrated in an Earth-centred frame under the
Earth's gravity and the Moon's, the Moon moving on a fixed Kepler ellipse
about the Earth. The frame is not inertial, so the Moon's pull on the Earth
enters as the indirect term:

    r'' = -mu_e r / |r|^3 - mu_m (r - r_m) / |r - r_m|^3 - mu_m r_m / |r_m|^3

Lengths are in Earth radii and times in sqrt(R^3 / GM_earth), so mu_e = 1.
Sweeping the Moon's true anomaly at SOI entry shows how far the perigee
moves from its two-body value.
"""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from eco_deflect.elements import CartesianState, OrbitElements, kepler_states
from eco_deflect.ephemeris import MoonModel
from eco_deflect.exceptions import CapturedEntryError, EcoDeflectError, PropagationError
from eco_deflect.flyby import nominal_soi_entry
from eco_deflect.scenario import Scenario
from eco_deflect.units import GM_EARTH_SI, GM_MOON_SI, make_earth_centred_units

logger = logging.getLogger(__name__)

MOON_SEMI_AXIS_M = 3.844e8
MOON_ECCENTRICITY = 0.0549
MOON_MASS_RATIO = GM_MOON_SI / GM_EARTH_SI
DEFAULT_NOMINAL_MISS_RE = 10.0
# Relative change between grid neighbours flagged for inspection
JUMP_THRESHOLD = 0.05
DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-12


def build_entry_state(
    scenario: Scenario, nominal_miss_re: float = DEFAULT_NOMINAL_MISS_RE
) -> CartesianState:
    """
    Earth-frame SOI entry state whose two-body perigee is ``nominal_miss_re``.

    The speed and direction of the entry velocity are those of the undeflected
    ECO at its nominal SOI entry. The state lies on the exact hyperbola with
    that energy and the requested perigee, on the inbound leg, with the
    orbit plane in the ecliptic and prograde about the Earth.

    Args:
        scenario: Heliocentric scenario providing the approach velocity.
        nominal_miss_re: Target perigee (Earth radii), > 0.

    Returns:
        Entry state in Earth radii and Earth-centred time units, epoch 0.

    Raises:
        ValueError: If the miss distance is not positive.
        CapturedEntryError: If the approach is not hyperbolic at the SOI.
    """
    if not nominal_miss_re > 0.0:
        raise ValueError(f"nominal miss must be positive, got {nominal_miss_re} R_earth")
    helio = scenario.units
    earth_units = make_earth_centred_units()
    t_ref = nominal_soi_entry(
        scenario.eco_elements,
        scenario.earth_model,
        scenario.soi_radius,
        scenario.impact_epoch,
        mu=scenario.mu_sun,
    )
    _, vel = kepler_states(scenario.eco_elements, [t_ref], scenario.mu_sun)
    _, e_vel = scenario.earth_model.states([t_ref])
    v_rel = (vel[0] - e_vel[0]) * helio.speed_unit / earth_units.speed_unit
    speed = float(np.linalg.norm(v_rel))
    r_soi = scenario.soi_radius * helio.length_unit / earth_units.length_unit

    energy = 0.5 * speed * speed - 1.0 / r_soi
    if energy <= 0.0:
        raise CapturedEntryError(f"Earth-frame energy {energy:.3e} at the SOI is not hyperbolic")
    semi_axis = 1.0 / (2.0 * energy)
    ecc = 1.0 + nominal_miss_re / semi_axis
    p = semi_axis * (ecc * ecc - 1.0)
    cos_f = float(np.clip((p / r_soi - 1.0) / ecc, -1.0, 1.0))
    f = -math.acos(cos_f)
    pos = r_soi * np.array([math.cos(f), math.sin(f), 0.0])
    vel_pf = math.sqrt(1.0 / p) * np.array([-math.sin(f), ecc + math.cos(f), 0.0])

    psi = math.atan2(v_rel[1], v_rel[0]) - math.atan2(vel_pf[1], vel_pf[0])
    c, s = math.cos(psi), math.sin(psi)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return CartesianState(rot @ pos, rot @ vel_pf, 0.0)


@dataclass(frozen=True, eq=False)
class LunarSweepConfig:
    """
    Inputs of a Moon-anomaly sweep, in Earth-centred units.

    Attributes:
        nominal_miss_re: Two-body perigee the entry state targets (Earth radii).
        entry_state: Earth-frame state at SOI entry.
        anomaly_grid_deg: Moon true anomalies at SOI entry (deg).
        mu_moon: Lunar gravitational parameter (Earth = 1); 0 switches the Moon off.
        moon_semi_axis: Lunar semimajor axis (Earth radii).
        moon_eccentricity: Lunar eccentricity.
        rtol: Relative integration tolerance.
        atol: Absolute integration tolerance.
        workers: Parallel workers for the sweep.
    """

    nominal_miss_re: float
    entry_state: CartesianState
    anomaly_grid_deg: NDArray[np.float64] = field(
        default_factory=lambda: np.arange(0.0, 360.0, 1.0)
    )
    mu_moon: float = MOON_MASS_RATIO
    moon_semi_axis: float = MOON_SEMI_AXIS_M / make_earth_centred_units().length_unit
    moon_eccentricity: float = MOON_ECCENTRICITY
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    workers: int = 1

    def __post_init__(self) -> None:
        grid = np.atleast_1d(np.asarray(self.anomaly_grid_deg, dtype=float))
        if grid.size == 0:
            raise ValueError("anomaly grid is empty")
        if self.mu_moon < 0.0:
            raise ValueError(f"mu_moon must be non-negative, got {self.mu_moon}")
        object.__setattr__(self, "anomaly_grid_deg", grid)

    @classmethod
    def from_scenario(
        cls,
        scenario: Scenario,
        nominal_miss_re: float = DEFAULT_NOMINAL_MISS_RE,
        **overrides: Any,
    ) -> "LunarSweepConfig":
        return cls(
            nominal_miss_re=nominal_miss_re,
            entry_state=build_entry_state(scenario, nominal_miss_re),
            **overrides,
        )

    def moon(self, anomaly_deg: float) -> MoonModel:
        el = OrbitElements(
            a=self.moon_semi_axis, e=self.moon_eccentricity, anomaly=math.radians(anomaly_deg)
        )
        return MoonModel(el, 1.0 + self.mu_moon)


@dataclass(frozen=True)
class LunarSweepPoint:
    f_deg: float
    miss_re: float
    rel_error: float
    jump: bool = False
    status: str = "ok"


@dataclass(frozen=True, eq=False)
class LunarSweepResult:
    nominal_miss_re: float
    points: list[LunarSweepPoint]

    def _valid(self) -> list[LunarSweepPoint]:
        return [p for p in self.points if p.status == "ok"]

    def max_reduction(self) -> LunarSweepPoint:
        """Anomaly at which the Moon pulls the perigee in the most."""
        return min(self._valid(), key=lambda p: p.rel_error)

    def max_gain(self) -> LunarSweepPoint:
        """Anomaly at which the Moon pushes the perigee out the most."""
        return max(self._valid(), key=lambda p: p.rel_error)

    @property
    def max_abs_error(self) -> float:
        return max(abs(p.rel_error) for p in self._valid())

    @property
    def jumps(self) -> list[LunarSweepPoint]:
        return [p for p in self.points if p.jump]

    def rows(self) -> list[dict[str, Any]]:
        return [
            {"f_deg": p.f_deg, "miss_re": p.miss_re, "rel_error": p.rel_error}
            for p in self.points
        ]


def _acceleration(
    t: float, y: NDArray[np.float64], moon: MoonModel, mu_moon: float
) -> NDArray[np.float64]:
    r = y[:3]
    acc = -r / float(np.linalg.norm(r)) ** 3
    if mu_moon > 0.0:
        r_m = moon.position(t)
        d = r - r_m
        d3 = float(np.linalg.norm(d)) ** 3
        m3 = float(np.linalg.norm(r_m)) ** 3
        acc -= mu_moon * (d / d3 + r_m / m3)
    return np.concatenate([y[3:], acc])


def _perigee_event(t: float, y: NDArray[np.float64], *args: Any) -> float:
    return float(y[:3] @ y[3:])


_perigee_event.terminal = True  # type: ignore[attr-defined]
_perigee_event.direction = 1.0  # type: ignore[attr-defined]


def perigee_distance(cfg: LunarSweepConfig, anomaly_deg: float) -> float:
    """
    Closest approach (Earth radii) for one Moon anomaly at SOI entry.

    Raises:
        PropagationError: If the integration fails or never reaches perigee.
    """
    entry = cfg.entry_state
    y0 = np.concatenate([entry.position, entry.velocity])
    r0 = float(np.linalg.norm(entry.position))
    horizon = 10.0 * r0 / float(np.linalg.norm(entry.velocity))
    sol = solve_ivp(
        _acceleration,
        (0.0, horizon),
        y0,
        method="DOP853",
        args=(cfg.moon(anomaly_deg), cfg.mu_moon),
        events=_perigee_event,
        rtol=cfg.rtol,
        atol=cfg.atol,
    )
    if sol.status == -1:
        raise PropagationError(f"lunar sweep integration failed: {sol.message}")
    if sol.t_events is None or sol.t_events[0].size == 0:
        raise PropagationError(f"no perigee within {horizon:.1f} TU of SOI entry")
    return float(np.linalg.norm(sol.y_events[0][0][:3]))


def _sweep_point(cfg: LunarSweepConfig, f_deg: float) -> LunarSweepPoint:
    try:
        miss = perigee_distance(cfg, f_deg)
    except EcoDeflectError as err:
        logger.warning("lunar sweep at f=%.2f deg failed: %s", f_deg, err)
        return LunarSweepPoint(f_deg, math.nan, math.nan, status="failed")
    return LunarSweepPoint(f_deg, miss, (miss - cfg.nominal_miss_re) / cfg.nominal_miss_re)


def sweep_moon_anomaly(cfg: LunarSweepConfig) -> LunarSweepResult:
    """
    Perigee distance against the Moon's true anomaly at SOI entry.

    Failed points are recorded with status "failed". A point is flagged as a
    jump when its miss distance differs from the previous grid point's by
    more than JUMP_THRESHOLD of the nominal.
    """
    grid: Sequence[float] = [float(f) for f in cfg.anomaly_grid_deg]
    if cfg.workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            points = list(pool.map(_sweep_point, [cfg] * len(grid), grid))
    else:
        points = [_sweep_point(cfg, f) for f in grid]

    flagged = []
    for k, point in enumerate(points):
        jump = False
        if k > 0 and point.status == "ok" and points[k - 1].status == "ok":
            change = abs(point.miss_re - points[k - 1].miss_re) / cfg.nominal_miss_re
            jump = change > JUMP_THRESHOLD
        flagged.append(LunarSweepPoint(point.f_deg, point.miss_re, point.rel_error, jump,
                                       point.status))
    result = LunarSweepResult(cfg.nominal_miss_re, flagged)
    if result.jumps:
        logger.warning("lunar sweep: %d jump(s) above %.0f%%", len(result.jumps),
                       100 * JUMP_THRESHOLD)
    return result
