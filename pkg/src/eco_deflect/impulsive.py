"""
Minimum-magnitude impulsive deflection.

An impulse of magnitude m is applied at t = -t_impulse in the orbital plane,
at angle lambda from the ECO velocity towards h x v. The ECO then coasts on
a Kepler orbit to the SOI. For each lambda the smallest m giving b = b_i is
found by root solving; the required magnitude has two minima half a turn
apart, one raising and one lowering the post-flyby orbit energy.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq, minimize_scalar

from eco_deflect.elements import (
    CartesianState,
    OrbitElements,
    cartesian_to_elements,
    kepler_states,
)
from eco_deflect.ephemeris import EarthModel
from eco_deflect.exceptions import DegenerateFlybyError, EcoDeflectError, NoCrossingError
from eco_deflect.flyby import (
    FlybyGeometry,
    encounter_geometry,
    find_soi_crossing,
    flyby_map,
    nominal_soi_entry,
    separation_along,
)
from eco_deflect.scenario import Scenario

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_STEP = 1.0
# Trial impulse magnitude (SU) used to estimate the linear response of b
TRIAL_DV = 1e-6
MAX_DV = 1e-2
CROSSING_SEARCH = 0.05
DEFAULT_HORIZON_TP = 200.0
ENCOUNTER_STEP = 2e-3
ENCOUNTER_CHUNK = 100_000
# Encounters are searched from this many ECO periods after SOI exit
ENCOUNTER_SKIP_TP = 0.1
# Sampled minima closer than this many threshold radii are refined between samples
DIP_REFINE_FACTOR = 2.0


class FlybyEffect(str, Enum):
    GAIN = "energy_gain"
    LOSS = "energy_loss"


@dataclass(frozen=True, eq=False)
class ImpulseSolution:
    """
    One optimal impulse and its consequences.

    Attributes:
        delta_v: Impulse magnitude (SU).
        delta_v_cms: Impulse magnitude (cm/s).
        lambda_deg: Angle from the ECO velocity in the orbital plane, [0, 360).
        impulse_epoch: Epoch of the impulse (TU).
        impulse_time_tp: Lead time of the impulse (ECO periods).
        pre_flyby_elements: Heliocentric elements after the impulse.
        post_flyby_elements: Heliocentric elements after the Earth pass.
        geometry: SOI-entry geometry of the deflected ECO.
        perigee: Closest approach to the Earth (LU).
        exit_epoch: SOI exit epoch (TU).
        next_encounter_tp: Periods from SOI exit to the next SOI entry.
    """

    delta_v: float
    delta_v_cms: float
    lambda_deg: float
    impulse_epoch: float
    impulse_time_tp: float
    pre_flyby_elements: OrbitElements
    post_flyby_elements: OrbitElements | None
    geometry: FlybyGeometry
    perigee: float = math.nan
    exit_epoch: float = math.nan
    next_encounter_tp: float = math.nan

    def with_encounter(self, interval_tp: float) -> "ImpulseSolution":
        return replace(self, next_encounter_tp=interval_tp)

    def as_row(self) -> dict[str, Any]:
        post = self.post_flyby_elements
        return {
            "ti_tp": self.impulse_time_tp,
            "dv_cms": self.delta_v_cms,
            "lambda_deg": self.lambda_deg,
            "a_pre_au": self.pre_flyby_elements.a,
            "e_pre": self.pre_flyby_elements.e,
            "a_post_au": post.a if post else math.nan,
            "e_post": post.e if post else math.nan,
            "tp_post_yr": post.period(1.0) / (2.0 * math.pi) if post else math.nan,
            "effect": classify_flyby(self).value if post else "",
            "next_encounter_tp": self.next_encounter_tp,
        }


class ImpulseProblem:
    """Shooting map (m, lambda) -> b - b_i for impulses at a fixed epoch."""

    def __init__(self, scenario: Scenario, impulse_time_tp: float):
        if not impulse_time_tp > 0.0:
            raise ValueError(f"impulse time must be positive, got {impulse_time_tp} Tp")
        self.scenario = scenario
        self.impulse_time_tp = impulse_time_tp
        self.mu = scenario.mu_sun
        self.epoch = scenario.impact_epoch - impulse_time_tp * scenario.period
        pos, vel = kepler_states(scenario.eco_elements, [self.epoch], self.mu)
        self.position, self.velocity = pos[0], vel[0]
        self.v_hat = self.velocity / np.linalg.norm(self.velocity)
        h = np.cross(self.position, self.velocity)
        self.h_hat = h / np.linalg.norm(h)
        self.n_hat = np.cross(self.h_hat, self.v_hat)
        self.t_ref = nominal_soi_entry(
            scenario.eco_elements,
            scenario.earth_model,
            scenario.soi_radius,
            scenario.impact_epoch,
            mu=self.mu,
        )

    def direction(self, lam: float, elevation: float = 0.0) -> NDArray[np.float64]:
        """Unit impulse direction for in-plane angle ``lam`` and out-of-plane ``elevation``."""
        in_plane = math.cos(lam) * self.v_hat + math.sin(lam) * self.n_hat
        return math.cos(elevation) * in_plane + math.sin(elevation) * self.h_hat

    def elements_after(self, delta_v: NDArray[np.float64]) -> OrbitElements:
        state = CartesianState(self.position, self.velocity + delta_v, self.epoch)
        return cartesian_to_elements(state, self.mu)

    def encounter(self, magnitude: float, lam: float, elevation: float = 0.0) -> FlybyGeometry:
        """
        SOI-entry geometry after the impulse.

        Raises:
            NoCrossingError: If the deflected ECO misses the SOI near the nominal entry.
        """
        scenario = self.scenario
        el = self.elements_after(magnitude * self.direction(lam, elevation))
        lo = max(self.epoch, self.t_ref - CROSSING_SEARCH)
        t_soi = find_soi_crossing(
            el, scenario.earth_model, scenario.soi_radius, lo, self.t_ref + CROSSING_SEARCH,
            mu=self.mu,
        )
        pos, vel = kepler_states(el, [t_soi], self.mu)
        return encounter_geometry(
            CartesianState(pos[0], vel[0], t_soi),
            scenario.earth_model.state(t_soi),
            scenario.miss_distance,
            scenario.mu_earth,
            scenario.soi_radius,
        )

    def residual(self, magnitude: float, lam: float, elevation: float = 0.0) -> float:
        return self.encounter(magnitude, lam, elevation).b_residual

    def required_magnitude(self, lam: float, elevation: float = 0.0) -> float:
        """Smallest magnitude reaching b = b_i along the given direction; inf if above MAX_DV."""
        try:
            trial = self.encounter(TRIAL_DV, lam, elevation)
        except NoCrossingError:
            return math.inf
        if not trial.b > 0.0:
            return math.inf
        hi = min(2.0 * TRIAL_DV * trial.b_required / trial.b, MAX_DV)
        try:
            while self.residual(hi, lam, elevation) < 0.0:
                if hi >= MAX_DV:
                    return math.inf
                hi = min(2.0 * hi, MAX_DV)
            return float(brentq(self.residual, 0.0, hi, args=(lam, elevation), xtol=1e-15))
        except NoCrossingError:
            return math.inf


def _local_minima(values: NDArray[np.float64]) -> NDArray[np.intp]:
    """Indices of local minima on a periodic grid."""
    prev = np.roll(values, 1)
    nxt = np.roll(values, -1)
    return np.flatnonzero(np.isfinite(values) & (values <= prev) & (values < nxt))


def _solution(problem: ImpulseProblem, magnitude: float, lam: float) -> ImpulseSolution:
    scenario = problem.scenario
    pre = problem.elements_after(magnitude * problem.direction(lam))
    geom = problem.encounter(magnitude, lam)
    post: OrbitElements | None = None
    perigee = math.nan
    exit_epoch = math.nan
    try:
        entry = CartesianState(geom.rel_position, geom.v_inf_in, geom.epoch)
        outcome = flyby_map(entry, scenario.mu_earth, earth=scenario.earth_model)
        post = cartesian_to_elements(outcome.post_state, problem.mu)
        perigee = outcome.perigee_distance
        exit_epoch = outcome.exit_epoch
    except DegenerateFlybyError as err:
        logger.warning("impulse at lambda=%.2f deg leaves a centre impact: %s",
                       math.degrees(lam), err)
    return ImpulseSolution(
        delta_v=magnitude,
        delta_v_cms=magnitude * scenario.units.speed_unit * 100.0,
        lambda_deg=math.degrees(lam) % 360.0,
        impulse_epoch=problem.epoch,
        impulse_time_tp=problem.impulse_time_tp,
        pre_flyby_elements=pre,
        post_flyby_elements=post,
        geometry=geom,
        perigee=perigee,
        exit_epoch=exit_epoch,
    )


def solve_min_impulse(
    scenario: Scenario,
    impulse_time_tp: float,
    *,
    step_deg: float = DEFAULT_LAMBDA_STEP,
) -> list[ImpulseSolution]:
    """
    The optimal impulses at one epoch, sorted by lambda.

    lambda is scanned on a ``step_deg`` grid, each point solved for its
    required magnitude, and the two deepest local minima are refined by
    bounded golden-section search.

    Returns:
        Usually two solutions; fewer when the scan finds fewer basins, which
        is logged as a warning.
    """
    problem = ImpulseProblem(scenario, impulse_time_tp)
    grid = np.radians(np.arange(0.0, 360.0, step_deg))
    required = np.array([problem.required_magnitude(float(lam)) for lam in grid])
    minima = _local_minima(required)
    minima = minima[np.argsort(required[minima])][:2]
    if minima.size < 2:
        logger.warning(
            "found %d impulse optimum(s) at t=%.4f Tp", minima.size, impulse_time_tp
        )
    half = math.radians(step_deg)
    solutions = []
    for k in minima:
        lam0 = float(grid[k])
        res = minimize_scalar(
            problem.required_magnitude,
            bounds=(lam0 - half, lam0 + half),
            method="bounded",
            options={"xatol": 1e-7},
        )
        lam, magnitude = (float(res.x), float(res.fun))
        if not magnitude <= required[k]:
            lam, magnitude = lam0, float(required[k])
        solutions.append(_solution(problem, magnitude, lam))
    solutions.sort(key=lambda s: s.lambda_deg)
    for sol in solutions:
        logger.info(
            "impulse at %.4f Tp: %.4f cm/s at lambda=%.3f deg",
            impulse_time_tp, sol.delta_v_cms, sol.lambda_deg,
        )
    return solutions


def classify_flyby(sol: ImpulseSolution) -> FlybyEffect:
    """
    Whether the Earth pass raised or lowered the ECO's orbit energy.

    Raises:
        DegenerateFlybyError: If the solution has no post-flyby orbit (centre impact).
    """
    if sol.post_flyby_elements is None or not sol.delta_v > 0.0:
        raise DegenerateFlybyError("no flyby to classify: the ECO hits the Earth")
    if sol.post_flyby_elements.a > sol.pre_flyby_elements.a:
        return FlybyEffect.GAIN
    return FlybyEffect.LOSS


def _dips_to_refine(gap: NDArray[np.float64], threshold: float) -> NDArray[np.intp]:
    """
    Indices of sampled minima of ``gap = ell - threshold`` that stay outside the
    threshold but come within DIP_REFINE_FACTOR * threshold of the Earth.
    """
    inner = gap[1:-1]
    dips = np.flatnonzero((inner > 0.0) & (inner <= gap[:-2]) & (inner <= gap[2:])) + 1
    ell = gap[dips] + threshold
    return dips[ell <= DIP_REFINE_FACTOR * threshold]


def next_encounter_interval(
    post_elements: OrbitElements,
    earth: EarthModel,
    start_epoch: float,
    period: float,
    *,
    horizon_tp: float = DEFAULT_HORIZON_TP,
    threshold: float,
    mu: float = 1.0,
    step: float = ENCOUNTER_STEP,
) -> float:
    """
    Time to the next close pass, in ECO periods.

    Both bodies move on Kepler orbits. ell(t) is sampled in chunks; the first
    sample below ``threshold`` or the first sampled minimum whose refinement
    dips below it marks the pass, which is then solved to the crossing epoch.

    Args:
        post_elements: ECO elements after the flyby.
        earth: Earth ephemeris.
        start_epoch: SOI exit epoch (TU).
        period: ECO period used as the unit of the result (TU).
        horizon_tp: Search horizon (periods).
        threshold: Close-approach distance (LU), usually the SOI radius.
        mu: Solar gravitational parameter.
        step: Sampling step (TU).

    Returns:
        Interval in periods, or inf if no pass occurs within the horizon.
    """
    if not post_elements.e < 1.0:
        raise ValueError("post-flyby orbit is not elliptic")

    def gap(t: float) -> float:
        return float(separation_along(post_elements, earth, [t], mu)[0][0]) - threshold

    t_begin = start_epoch + ENCOUNTER_SKIP_TP * period
    t_final = start_epoch + horizon_tp * period
    chunk_span = step * ENCOUNTER_CHUNK
    t0 = t_begin
    while t0 < t_final:
        times = np.arange(t0, min(t0 + chunk_span, t_final) + step, step)
        g = separation_along(post_elements, earth, times, mu)[0] - threshold
        inside = np.flatnonzero(g <= 0.0)
        candidates: list[float] = []
        if inside.size:
            k = int(inside[0])
            candidates.append(
                float(times[0]) if k == 0 else float(brentq(gap, times[k - 1], times[k]))
            )
        for k in _dips_to_refine(g, threshold):
            lo, hi = float(times[k - 1]), float(times[k + 1])
            res = minimize_scalar(gap, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10})
            if res.fun < 0.0:
                candidates.append(float(brentq(gap, lo, float(res.x))))
                break
        if candidates:
            return (min(candidates) - start_epoch) / period
        t0 = float(times[-1])
    return math.inf


def attach_encounters(
    solutions: list[ImpulseSolution],
    scenario: Scenario,
    *,
    horizon_tp: float = DEFAULT_HORIZON_TP,
    threshold: float | None = None,
) -> list[ImpulseSolution]:
    """Fill in next_encounter_tp for each solution with a post-flyby orbit."""
    limit = scenario.soi_radius if threshold is None else threshold
    out = []
    for sol in solutions:
        if sol.post_flyby_elements is None or sol.post_flyby_elements.e >= 1.0:
            out.append(sol)
            continue
        interval = next_encounter_interval(
            sol.post_flyby_elements,
            scenario.earth_model,
            sol.exit_epoch,
            scenario.period,
            horizon_tp=horizon_tp,
            threshold=limit,
            mu=scenario.mu_sun,
        )
        out.append(sol.with_encounter(interval))
    return out


@dataclass(frozen=True)
class ImpulseSweepPoint:
    impulse_time_tp: float
    delta_v_cms: float
    lambda_deg: float
    status: str = "ok"


def sweep_impulse_times(
    scenario: Scenario, times_tp: list[float], *, step_deg: float = DEFAULT_LAMBDA_STEP
) -> list[ImpulseSweepPoint]:
    """Smallest optimal impulse at each lead time; failures are recorded and skipped."""
    points = []
    for t in times_tp:
        try:
            sols = solve_min_impulse(scenario, t, step_deg=step_deg)
        except EcoDeflectError as err:
            logger.warning("impulse sweep at %.4f Tp failed: %s", t, err)
            points.append(ImpulseSweepPoint(t, math.nan, math.nan, "failed"))
            continue
        if not sols:
            points.append(ImpulseSweepPoint(t, math.nan, math.nan, "failed"))
            continue
        best = min(sols, key=lambda s: s.delta_v)
        points.append(ImpulseSweepPoint(t, best.delta_v_cms, best.lambda_deg))
    return points


def separation_history(
    sol: ImpulseSolution, scenario: Scenario, span_tp: float, samples: int = 2000
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Earth-ECO distance after the flyby.

    Returns:
        Periods since SOI exit and distances (LU).
    """
    if sol.post_flyby_elements is None:
        raise DegenerateFlybyError("no post-flyby orbit")
    t_tp = np.linspace(0.0, span_tp, samples)
    times = sol.exit_epoch + t_tp * scenario.period
    ell, _ = separation_along(
        sol.post_flyby_elements, scenario.earth_model, times, scenario.mu_sun
    )
    return t_tp, ell
