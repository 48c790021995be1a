"""
Patched-conic encounter geometry at the Earth's sphere of influence.

Outside the SOI the ECO is on a heliocentric conic, inside it follows an
Earth-centred hyperbola. The SOI boundary is treated as the asymptotic patch
point: the relative velocity there is used as v_inf, and the approach
distance b is the rejection of the Earth-ECO vector from the v_inf line.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq, minimize_scalar

from eco_deflect.elements import CartesianState, OrbitElements, kepler_states
from eco_deflect.ephemeris import EarthModel
from eco_deflect.exceptions import (
    CapturedEntryError,
    DegenerateFlybyError,
    DegenerateStateError,
    NoCrossingError,
)

logger = logging.getLogger(__name__)

# Sampling step (TU) used when scanning for SOI crossings
DEFAULT_SCAN_STEP = 1e-3
CROSSING_XTOL = 1e-14


@dataclass(frozen=True, eq=False)
class FlybyGeometry:
    """
    Encounter quantities at SOI entry.

    Attributes:
        ell: Earth-ECO distance (LU).
        ell_dot: Rate of change of ell (SU); negative when approaching.
        v_inf_in: Earth-relative velocity at entry (SU), shape (3,).
        elevation: Elevation angle of the entry point phi_e (rad).
        b: Approach distance (LU).
        b_required: Impact parameter b_i giving the target miss distance (LU).
        soi_radius: SOI radius (LU).
        rel_position: Earth-to-ECO vector at entry (LU), shape (3,).
        epoch: Entry epoch (TU).
    """

    ell: float
    ell_dot: float
    v_inf_in: NDArray[np.float64]
    elevation: float
    b: float
    b_required: float
    soi_radius: float
    rel_position: NDArray[np.float64]
    epoch: float = 0.0

    @property
    def v_inf(self) -> float:
        return float(np.linalg.norm(self.v_inf_in))

    @property
    def b_residual(self) -> float:
        return self.b - self.b_required


@dataclass(frozen=True, eq=False)
class FlybyOutcome:
    """
    Result of mapping an SOI entry through the Earth-centred hyperbola.

    Attributes:
        perigee_distance: Closest approach to the Earth's centre (LU).
        v_inf_out: Outbound asymptotic relative velocity (SU), shape (3,).
        turn_angle: Angle between inbound and outbound v_inf (rad).
        post_state: Heliocentric state at SOI exit, or the Earth-relative exit
            state when no Earth model was supplied.
        eccentricity: Hyperbolic eccentricity.
        exit_epoch: Epoch of SOI exit (TU).
        exit_relative: Earth-relative state at SOI exit.
    """

    perigee_distance: float
    v_inf_out: NDArray[np.float64]
    turn_angle: float
    post_state: CartesianState
    eccentricity: float
    exit_epoch: float
    exit_relative: CartesianState


def relative_distances(
    eco_pos: NDArray[np.float64],
    eco_vel: NDArray[np.float64],
    earth_pos: NDArray[np.float64],
    earth_vel: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Vectorised (ell, ell_dot) for row-stacked states of shape (n, 3)."""
    rel_pos = eco_pos - earth_pos
    rel_vel = eco_vel - earth_vel
    ell = np.linalg.norm(rel_pos, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ell_dot = np.einsum("...i,...i->...", rel_pos, rel_vel) / ell
    return ell, ell_dot


def relative_distance(r_earth: CartesianState, r_ast: CartesianState) -> tuple[float, float]:
    """
    Earth-ECO distance and its rate of change.

    ell = sqrt(r_e.r_e + r_a.r_a - 2 r_e.r_a) and
    ell_dot = (r_a - r_e).(v_a - v_e) / ell.

    Raises:
        DegenerateStateError: If the two positions coincide.
    """
    re, ra = r_earth.position, r_ast.position
    ell_sq = float(re @ re + ra @ ra - 2.0 * re @ ra)
    ell = math.sqrt(max(ell_sq, 0.0))
    if ell == 0.0:
        raise DegenerateStateError("Earth and ECO positions coincide")
    ell_dot = float((ra - re) @ (r_ast.velocity - r_earth.velocity)) / ell
    return ell, ell_dot


def _unit(vec: NDArray[np.float64], what: str) -> NDArray[np.float64]:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise DegenerateFlybyError(f"{what} is zero")
    return vec / norm


def elevation_angle(rel_position: ArrayLike, v_inf: ArrayLike) -> float:
    """Elevation phi_e with cos(phi_e + pi/2) = v_inf.ell / (|v_inf| ell)."""
    ell_hat = _unit(np.asarray(rel_position, dtype=float), "relative position")
    v_hat = _unit(np.asarray(v_inf, dtype=float), "relative velocity")
    cos_angle = float(np.clip(v_hat @ ell_hat, -1.0, 1.0))
    return math.acos(cos_angle) - 0.5 * math.pi


def approach_distance(rel_position: ArrayLike, v_inf: ArrayLike) -> float:
    """
    Approach distance b at the SOI.

    Rejection of the Earth-centre vector -ell from the v_inf line:
    b = |(-ell) - ((-ell).v_hat) v_hat|.

    Args:
        rel_position: Earth-to-ECO vector at entry (LU).
        v_inf: Earth-relative velocity at entry (SU).

    Returns:
        b (LU), equal to ell*cos(phi_e).

    Raises:
        DegenerateFlybyError: If the relative velocity is zero.
    """
    to_earth = -np.asarray(rel_position, dtype=float)
    v_hat = _unit(np.asarray(v_inf, dtype=float), "relative velocity")
    return float(np.linalg.norm(to_earth - (to_earth @ v_hat) * v_hat))


def impact_parameter(miss_distance: float, v_inf: float, mu_earth: float) -> float:
    """
    Impact parameter producing a given perigee distance.

    Args:
        miss_distance: Target perigee l_m (LU), > 0.
        v_inf: Hyperbolic excess speed (SU), > 0.
        mu_earth: Earth gravitational parameter, >= 0.

    Returns:
        b_i = l_m * sqrt(1 + 2*mu/(v_inf^2 * l_m)).

    Raises:
        ValueError: For non-positive miss distance or speed, or negative mu.
    """
    if not miss_distance > 0.0:
        raise ValueError(f"miss distance must be positive, got {miss_distance}")
    if not v_inf > 0.0:
        raise ValueError(f"v_inf must be positive, got {v_inf}")
    if mu_earth < 0.0:
        raise ValueError(f"gravitational parameter must be non-negative, got {mu_earth}")
    return miss_distance * math.sqrt(1.0 + 2.0 * mu_earth / (v_inf * v_inf * miss_distance))


def perigee_from_impact_parameter(b: float, v_inf: float, mu_earth: float) -> float:
    """Perigee of the hyperbola with approach distance b and excess speed v_inf."""
    if b < 0.0 or not v_inf > 0.0:
        raise ValueError(f"need b >= 0 and v_inf > 0, got b={b}, v_inf={v_inf}")
    k = mu_earth / (v_inf * v_inf)
    # sqrt(b^2 + k^2) - k without cancellation
    return b * b / (math.hypot(b, k) + k) if b > 0.0 else 0.0


def encounter_geometry(
    eco: CartesianState,
    earth: CartesianState,
    miss_distance: float,
    mu_earth: float,
    soi_radius: float,
) -> FlybyGeometry:
    """
    Bundle the SOI-entry quantities for an ECO and Earth state at the same epoch.

    Args:
        eco: Heliocentric ECO state.
        earth: Heliocentric Earth state.
        miss_distance: Target perigee l_m (LU).
        mu_earth: Earth gravitational parameter.
        soi_radius: SOI radius (LU).

    Returns:
        FlybyGeometry with b and b_i evaluated for the current relative velocity.
    """
    ell, ell_dot = relative_distance(earth, eco)
    rel = eco.shifted(earth)
    return FlybyGeometry(
        ell=ell,
        ell_dot=ell_dot,
        v_inf_in=rel.velocity,
        elevation=elevation_angle(rel.position, rel.velocity),
        b=approach_distance(rel.position, rel.velocity),
        b_required=impact_parameter(miss_distance, rel.speed, mu_earth),
        soi_radius=soi_radius,
        rel_position=rel.position,
        epoch=eco.epoch,
    )


def rotate_about(
    vec: NDArray[np.float64], axis: NDArray[np.float64], angle: float
) -> NDArray[np.float64]:
    """Rodrigues rotation of ``vec`` about the unit vector ``axis``."""
    c, s = math.cos(angle), math.sin(angle)
    return vec * c + np.cross(axis, vec) * s + axis * float(axis @ vec) * (1.0 - c)


def hyperbolic_time_of_flight(radius: float, ecc: float, semi_axis: float, mu: float) -> float:
    """
    Time from perigee to a given radius on a hyperbola.

    Args:
        radius: Target radius (>= perigee).
        ecc: Eccentricity (> 1).
        semi_axis: |a| of the hyperbola.
        mu: Gravitational parameter.

    Returns:
        Elapsed time from the hyperbolic Kepler equation M = e*sinh(H) - H.
    """
    if not ecc > 1.0:
        raise ValueError(f"hyperbolic eccentricity must exceed 1, got {ecc}")
    cosh_h = (1.0 + radius / semi_axis) / ecc
    big_h = math.acosh(max(cosh_h, 1.0))
    return math.sqrt(semi_axis**3 / mu) * (ecc * math.sinh(big_h) - big_h)


def flyby_map(
    entry: CartesianState, mu_earth: float, *, earth: EarthModel | None = None
) -> FlybyOutcome:
    """
    Map an SOI entry through the Earth-centred hyperbola.

    Perigee, turn angle and v_inf_out follow from (b, |v_inf|) with the entry
    velocity taken as the asymptotic one. The exit point and exit velocity are
    the mirror image of the entry about the apse line of the conic through
    the entry state, reached after the hyperbolic time of flight.

    Args:
        entry: ECO state relative to the Earth at SOI entry.
        mu_earth: Earth gravitational parameter.
        earth: Earth ephemeris used to express the exit state heliocentrically.

    Returns:
        FlybyOutcome for the pass.

    Raises:
        DegenerateFlybyError: If b = 0 (radial plunge, centre impact).
        CapturedEntryError: If the Earth-frame energy is not positive.
    """
    r_vec, v_vec = entry.position, entry.velocity
    r = entry.radius
    speed = entry.speed
    energy = 0.5 * speed * speed - mu_earth / r
    if energy <= 0.0:
        raise CapturedEntryError(f"Earth-frame energy {energy:.3e} is not hyperbolic")
    h_vec = np.cross(r_vec, v_vec)
    b = approach_distance(r_vec, v_vec)
    if b <= 1e-14 * r:
        raise DegenerateFlybyError("approach distance is zero: radial plunge into the Earth")
    h_hat = h_vec / float(np.linalg.norm(h_vec))

    ecc_asym = math.sqrt(1.0 + (b * speed * speed / mu_earth) ** 2)
    turn = 2.0 * math.asin(1.0 / ecc_asym)
    v_inf_out = rotate_about(v_vec, h_hat, turn)
    perigee = perigee_from_impact_parameter(b, speed, mu_earth)

    e_vec = ((speed * speed - mu_earth / r) * r_vec - float(r_vec @ v_vec) * v_vec) / mu_earth
    ecc = float(np.linalg.norm(e_vec))
    apse = e_vec / ecc
    r_exit = 2.0 * float(r_vec @ apse) * apse - r_vec
    v_exit = v_vec - 2.0 * float(v_vec @ apse) * apse
    semi_axis = mu_earth / (2.0 * energy)
    tof = 2.0 * hyperbolic_time_of_flight(r, ecc, semi_axis, mu_earth)
    exit_epoch = entry.epoch + tof
    exit_rel = CartesianState(r_exit, v_exit, exit_epoch)

    if earth is None:
        post = exit_rel
    else:
        e_state = earth.state(exit_epoch)
        post = CartesianState(e_state.position + r_exit, e_state.velocity + v_exit, exit_epoch)
    logger.debug(
        "flyby: b=%.6e LU, perigee=%.6e LU, turn=%.4f deg, transit=%.4e TU",
        b,
        perigee,
        math.degrees(turn),
        tof,
    )
    return FlybyOutcome(
        perigee_distance=perigee,
        v_inf_out=v_inf_out,
        turn_angle=turn,
        post_state=post,
        eccentricity=ecc_asym,
        exit_epoch=exit_epoch,
        exit_relative=exit_rel,
    )


def separation_along(
    eco_elements: OrbitElements, earth: EarthModel, times: ArrayLike, mu: float = 1.0
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """(ell, ell_dot) of a coasting ECO against the Earth at the given epochs."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    pos, vel = kepler_states(eco_elements, t, mu)
    e_pos, e_vel = earth.states(t)
    return relative_distances(pos, vel, e_pos, e_vel)


def find_soi_crossing(
    eco_elements: OrbitElements,
    earth: EarthModel,
    soi_radius: float,
    t_start: float,
    t_end: float,
    *,
    mu: float = 1.0,
    step: float = DEFAULT_SCAN_STEP,
) -> float:
    """
    First inbound SOI crossing of a coasting ECO within [t_start, t_end].

    ell(t) is sampled on a uniform grid; sign changes of ell - ell_soi from
    positive to negative bracket the root, and sampled local minima that come
    close to the sphere are refined so grazing passes between samples are
    not missed. The earliest bracket is solved with Brent's method.

    Args:
        eco_elements: ECO heliocentric elements.
        earth: Earth ephemeris.
        soi_radius: SOI radius (LU).
        t_start: Start of the search window (TU).
        t_end: End of the search window (TU).
        mu: Solar gravitational parameter.
        step: Sampling step (TU).

    Returns:
        Epoch of the crossing (TU).

    Raises:
        NoCrossingError: If the ECO does not enter the SOI in the window.
    """
    if not t_end > t_start:
        raise ValueError(f"empty search window [{t_start}, {t_end}]")
    n = max(math.ceil((t_end - t_start) / step), 2) + 1
    times = np.linspace(t_start, t_end, n)
    ell, _ = separation_along(eco_elements, earth, times, mu)
    g = ell - soi_radius

    def gap(t: float) -> float:
        return float(separation_along(eco_elements, earth, [t], mu)[0][0]) - soi_radius

    brackets: list[tuple[float, float]] = []
    for k in np.flatnonzero((g[:-1] > 0.0) & (g[1:] <= 0.0)):
        brackets.append((float(times[k]), float(times[k + 1])))
    interior = np.flatnonzero(
        (g[1:-1] > 0.0) & (g[1:-1] <= g[:-2]) & (g[1:-1] <= g[2:]) & (ell[1:-1] < 2 * soi_radius)
    )
    for k in interior + 1:
        lo, hi = float(times[k - 1]), float(times[k + 1])
        res = minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if res.fun < 0.0:
            brackets.append((lo, float(res.x)))
    if not brackets:
        raise NoCrossingError(
            f"ECO stays outside the SOI in [{t_start:.6f}, {t_end:.6f}] TU "
            f"(closest sampled approach {float(ell.min()):.6e} LU)"
        )
    lo, hi = min(brackets)
    return float(brentq(gap, lo, hi, xtol=CROSSING_XTOL))


def nominal_soi_entry(
    eco_elements: OrbitElements,
    earth: EarthModel,
    soi_radius: float,
    impact_epoch: float = 0.0,
    *,
    mu: float = 1.0,
    search: float = 0.5,
) -> float:
    """SOI entry epoch of the undeflected ECO, searched ``search`` TU back from impact."""
    return find_soi_crossing(
        eco_elements, earth, soi_radius, impact_epoch - search, impact_epoch, mu=mu
    )
