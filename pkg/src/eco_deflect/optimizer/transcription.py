"""
Minimum-energy continuous deflection by direct shooting.

Each solve builds a ShootingProblem for one start time and regime, seeds it
with anti-velocity thrust histories that already reach the required impact
parameter, runs the augmented-Lagrangian solver from every seed and keeps
the best feasible result.
"""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from eco_deflect.config import SolverOptions
from eco_deflect.dynamics import ControlHistory, operational_angle, propagate
from eco_deflect.elements import (
    CartesianState,
    cartesian_from_spherical,
    cartesian_to_elements,
    kepler_states,
    spherical_arrays_to_cartesian,
    spherical_from_cartesian,
)
from eco_deflect.exceptions import EcoDeflectError, InfeasibleControlError, NoCrossingError
from eco_deflect.flyby import encounter_geometry, find_soi_crossing
from eco_deflect.optimizer.auglag import AugLagResult, AugmentedLagrangian
from eco_deflect.optimizer.problem import (
    BoundedProfile,
    Decision,
    Regime,
    TranscriptionSpec,
    objective,
)
from eco_deflect.optimizer.shooting import MIN_WINDOW, ShootingProblem, TerminalState
from eco_deflect.scenario import CollisionSetup, Scenario, build_collision_scenario
from eco_deflect.units import SECONDS_PER_DAY

logger = logging.getLogger(__name__)

# Window-length multipliers of the constant-regime seeds
CONSTANT_SEED_FACTORS = (1.0, 0.9, 1.1, 0.8, 1.25, 0.7, 1.5, 0.6)
SEED_SCAN_POINTS = 16
SIGMA_JITTER = 0.05
# Half-width (TU) of the search for the perturbed SOI crossing around the nominal one
CROSSING_SEARCH = 0.05
FEASIBILITY_RTOL = 1e-12
FEASIBILITY_ATOL = 1e-14
RESIDUAL_TOL = 1e-8

STATUSES = ("converged", "feasible", "failed", "infeasible")


@dataclass(frozen=True)
class ConstraintResiduals:
    """
    Terminal conditions at SOI entry.

    Attributes:
        soi_distance: l_soi - l (LU), target 0.
        impact_parameter: b - b_i (LU), target 0.
        approach_rate: l_dot (SU), must be negative.
        t_op: Window length (TU), must be positive.
        soi_margin: t_soi - (t_i + t_op) (TU), must be positive.
    """

    soi_distance: float
    impact_parameter: float
    approach_rate: float
    t_op: float
    soi_margin: float

    def satisfied(self, tol: float = RESIDUAL_TOL) -> bool:
        return (
            abs(self.soi_distance) < tol
            and abs(self.impact_parameter) < tol
            and self.approach_rate < 0.0
            and self.t_op > 0.0
            and self.soi_margin > 0.0
        )

    def as_array(self) -> NDArray[np.float64]:
        return np.array(
            [self.soi_distance, self.impact_parameter, self.approach_rate, self.t_op,
             self.soi_margin]
        )


@dataclass(frozen=True, eq=False)
class SolutionReport:
    """
    Result of one continuous-thrust solve.

    Attributes:
        regime: Power regime.
        start_time: t_i (ECO periods).
        status: "converged", "feasible", "failed" or "infeasible".
        t_soi: SOI entry epoch (TU).
        t_op_day: Active burn duration, first to last active node (days).
        window_day: Operation window length (days).
        idle_day: Leading span of the window with the laser idle (days).
        energy_kw_day: Laser energy (kW*day).
        dv_mps: Integral of |a_l| over the window (m/s).
        objective: Trapezoidal objective in canonical units (SU).
        residuals: Terminal conditions of the solution.
        control: Control history in canonical units.
        delta_deg: Operational angle at the nodes (deg).
        profile: Bounded-regime profile label.
        n_outer: Outer iterations of the selected run.
        nfev: Shooting evaluations over all restarts.
        seeds: Number of seeds tried.
        message: Solver message of the selected run.
        decision: Decision variables, for warm starts.
    """

    regime: Regime
    start_time: float
    status: str
    t_soi: float = math.nan
    t_op_day: float = math.nan
    window_day: float = math.nan
    idle_day: float = math.nan
    energy_kw_day: float = math.nan
    dv_mps: float = math.nan
    objective: float = math.nan
    residuals: ConstraintResiduals | None = None
    control: ControlHistory = field(default_factory=ControlHistory.zero)
    delta_deg: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    profile: str = ""
    n_outer: int = 0
    nfev: int = 0
    seeds: int = 0
    message: str = ""
    decision: Decision | None = None

    @property
    def feasible(self) -> bool:
        return self.status in ("converged", "feasible")

    def as_row(self) -> dict[str, Any]:
        """Row of results.csv."""
        residual = self.residuals.impact_parameter if self.residuals else math.nan
        return {
            "ti_tp": self.start_time,
            "regime": self.regime,
            "t_op_day": self.t_op_day,
            "idle_day": self.idle_day,
            "energy_kw_day": self.energy_kw_day,
            "dv_mps": self.dv_mps,
            "residual_b_lu": residual,
            "status": self.status,
        }

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready document; control arrays in canonical units."""
        return {
            "regime": self.regime,
            "ti_tp": self.start_time,
            "status": self.status,
            "profile": self.profile,
            "t_soi_tu": self.t_soi,
            "t_op_day": self.t_op_day,
            "window_day": self.window_day,
            "idle_day": self.idle_day,
            "energy_kw_day": self.energy_kw_day,
            "dv_mps": self.dv_mps,
            "objective": self.objective,
            "residuals": None if self.residuals is None else vars(self.residuals).copy(),
            "control": {
                "times_tu": self.control.times.tolist(),
                "accel": self.control.accel.tolist(),
                "sigma_rad": self.control.sigma.tolist(),
            },
            "delta_deg": self.delta_deg.tolist(),
            "solver": {
                "n_outer": self.n_outer,
                "nfev": self.nfev,
                "seeds": self.seeds,
                "message": self.message,
            },
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SolutionReport":
        """Inverse of :meth:`to_dict` (the warm-start decision is not stored)."""
        ctrl = data["control"]
        times = np.asarray(ctrl["times_tu"], dtype=float)
        control = ControlHistory(
            times=times,
            accel=np.asarray(ctrl["accel"], dtype=float),
            sigma=np.asarray(ctrl["sigma_rad"], dtype=float),
            beta=np.zeros_like(times),
        )
        residuals = data.get("residuals")
        solver = data.get("solver", {})
        return cls(
            regime=data["regime"],
            start_time=float(data["ti_tp"]),
            status=data["status"],
            t_soi=_float(data["t_soi_tu"]),
            t_op_day=_float(data["t_op_day"]),
            window_day=_float(data["window_day"]),
            idle_day=_float(data["idle_day"]),
            energy_kw_day=_float(data["energy_kw_day"]),
            dv_mps=_float(data["dv_mps"]),
            objective=_float(data["objective"]),
            residuals=None if residuals is None else ConstraintResiduals(**residuals),
            control=control,
            delta_deg=np.asarray(data.get("delta_deg", []), dtype=float),
            profile=data.get("profile", ""),
            n_outer=int(solver.get("n_outer", 0)),
            nfev=int(solver.get("nfev", 0)),
            seeds=int(solver.get("seeds", 0)),
            message=solver.get("message", ""),
        )


def _float(value: Any) -> float:
    return math.nan if value is None else float(value)


# -- constraints ------------------------------------------------------------


def _residuals(problem: ShootingProblem, decision: Decision, term: TerminalState):
    return ConstraintResiduals(
        soi_distance=problem.soi_radius - term.ell,
        impact_parameter=term.b - term.b_required,
        approach_rate=term.ell_dot,
        t_op=decision.t_op,
        soi_margin=decision.t_soi - problem.t_start - decision.t_op,
    )


def evaluate_constraints(problem: ShootingProblem, decision: Decision) -> ConstraintResiduals:
    """
    Shoot a candidate decision and evaluate the five terminal conditions.

    Raises:
        EcoDeflectError: If the shooting map cannot be evaluated.
    """
    arc = problem.shoot(decision)
    return _residuals(problem, decision, problem.terminal(decision, arc))


def check_feasibility(
    setup: CollisionSetup,
    control: ControlHistory,
    *,
    rtol: float = FEASIBILITY_RTOL,
    atol: float = FEASIBILITY_ATOL,
) -> ConstraintResiduals:
    """
    Re-simulate a control history with the full integrator and check the SOI entry.

    The ECO is integrated from the start state through the window until the
    SOI event; b and l_dot come from the state at that event.

    Raises:
        NoCrossingError: If the trajectory never enters the SOI.
        PropagationError: On integrator failure.
    """
    scenario = setup.scenario
    span_end = scenario.impact_epoch + 2.0 * CROSSING_SEARCH
    result = propagate(
        setup.initial_state,
        control,
        (setup.t_start, span_end),
        mu=scenario.mu_sun,
        stop_at_soi=True,
        earth=scenario.earth_model,
        soi_radius=scenario.soi_radius,
        laser=scenario.laser,
        units=scenario.units,
        mass_loss=scenario.flags.mass_loss,
        rtol=rtol,
        atol=atol,
    )
    assert result.soi_event is not None
    event = result.soi_event
    geom = encounter_geometry(
        cartesian_from_spherical(event.state),
        scenario.earth_model.state(event.t_soi),
        scenario.miss_distance,
        scenario.mu_earth,
        scenario.soi_radius,
    )
    t_op = control.t_end - control.t_start if not control.is_empty else 0.0
    return ConstraintResiduals(
        soi_distance=scenario.soi_radius - geom.ell,
        impact_parameter=geom.b_residual,
        approach_rate=geom.ell_dot,
        t_op=t_op,
        soi_margin=event.t_soi - setup.t_start - t_op,
    )


# -- seeds --------------------------------------------------------------------


def anti_velocity_angles(problem: ShootingProblem, t_op: float) -> NDArray[np.float64]:
    """sigma at the nodes pointing the thrust against the unperturbed velocity."""
    scenario = problem.setup.scenario
    times = problem.t_start + t_op * np.linspace(0.0, 1.0, problem.spec.n_nodes)
    pos, vel = kepler_states(scenario.eco_elements, times, problem.mu)
    sigma = np.empty(times.size)
    for k, t in enumerate(times):
        sph = spherical_from_cartesian(CartesianState(pos[k], vel[k], float(t)), 1.0)
        sigma[k] = math.atan2(sph.u, sph.v) + math.pi
    return np.unwrap(sigma)


def _crossing_after(problem: ShootingProblem, final: NDArray[np.float64], t_f: float) -> float:
    pos, vel = spherical_arrays_to_cartesian(final.reshape(6, 1))
    el = cartesian_to_elements(CartesianState(pos[0], vel[0], t_f), problem.mu)
    lo = max(t_f, problem.t_ref - CROSSING_SEARCH)
    return find_soi_crossing(
        el, problem.earth, problem.soi_radius, lo, problem.t_ref + CROSSING_SEARCH, mu=problem.mu
    )


def _seed_decision(
    problem: ShootingProblem, t_op: float, accel_frac: NDArray[np.float64]
) -> tuple[Decision, float]:
    """Decision with t_soi at the actual crossing and its b - b_i."""
    sigma = anti_velocity_angles(problem, t_op)
    trial = Decision(problem.t_ref, t_op, accel_frac, sigma)
    arc = problem.shoot(trial)
    t_soi = _crossing_after(problem, arc.final, problem.t_start + t_op)
    decision = Decision(t_soi, t_op, accel_frac, sigma)
    term = problem.terminal(decision, arc)
    return decision, term.b - term.b_required


def _full_thrust_window(problem: ShootingProblem) -> float:
    """
    Shortest full-thrust window reaching b = b_i.

    Raises:
        InfeasibleControlError: If even the longest admissible window falls short.
    """
    n1 = problem.spec.n_nodes
    t_avail = problem.max_window
    ones = np.ones(n1)

    def residual(t_op: float) -> float:
        try:
            return _seed_decision(problem, t_op, ones)[1]
        except NoCrossingError:
            return math.inf

    grid = np.geomspace(max(MIN_WINDOW, 1e-3 * t_avail), t_avail, SEED_SCAN_POINTS)
    values = [residual(float(t)) for t in grid]
    for k, value in enumerate(values):
        if value >= 0.0:
            if k == 0:
                return float(grid[0])
            if not math.isfinite(value):
                return float(grid[k])
            return float(brentq(residual, grid[k - 1], grid[k], xtol=1e-10 * t_avail))
    raise InfeasibleControlError(
        f"full thrust over the whole {t_avail:.6f} TU window leaves b - b_i = {values[-1]:.3e} LU"
    )


def _uniform_seed(
    problem: ShootingProblem, t_op: float
) -> Decision | None:
    """Seed with a uniform fraction above the lower bounds reaching b = b_i, if one exists."""
    lower = problem.spec.lower

    def frac(c: float) -> NDArray[np.float64]:
        return lower + c * (1.0 - lower)

    def residual(c: float) -> float:
        return _seed_decision(problem, t_op, frac(c))[1]

    try:
        if residual(0.0) > 0.0 or residual(1.0) < 0.0:
            return None
        c = brentq(residual, 0.0, 1.0, xtol=1e-12)
        return _seed_decision(problem, t_op, frac(c))[0]
    except EcoDeflectError as err:
        logger.debug("seed at t_op=%.6f TU skipped: %s", t_op, err)
        return None


def _warm_seed(problem: ShootingProblem, previous: Decision, previous_start: float) -> Decision:
    """Resample a neighbouring solution onto this problem's window."""
    n1 = problem.spec.n_nodes
    prev_times = previous.node_times(previous_start)
    if problem.spec.free_accel:
        # keep the burn at the same absolute epochs
        t_op = prev_times[-1] - problem.t_start
    else:
        t_op = previous.t_op
    t_op = float(np.clip(t_op, MIN_WINDOW, problem.max_window))
    times = problem.t_start + t_op * np.linspace(0.0, 1.0, n1)
    if problem.spec.free_accel:
        accel = np.interp(times, prev_times, previous.accel_frac, left=0.0, right=0.0)
        sigma = np.interp(times, prev_times, np.unwrap(previous.sigma))
    else:
        accel = np.ones(n1)
        s_prev = np.linspace(0.0, 1.0, previous.sigma.size)
        sigma = np.interp(np.linspace(0.0, 1.0, n1), s_prev, np.unwrap(previous.sigma))
    accel = np.clip(accel, problem.spec.lower, problem.spec.upper)
    return Decision(previous.t_soi, t_op, accel, sigma)


def build_seeds(
    problem: ShootingProblem, initial: Decision | None = None, initial_start: float | None = None
) -> list[Decision]:
    """
    Initial guesses for one solve, at most ``options.restarts`` of them.

    Raises:
        InfeasibleControlError: If no admissible window reaches the impact parameter.
    """
    options = problem.options
    t_star = _full_thrust_window(problem)
    logger.debug("full-thrust window %.6f TU", t_star)
    seeds: list[Decision] = []
    if initial is not None and initial_start is not None:
        seeds.append(_warm_seed(problem, initial, initial_start))
    if problem.spec.free_accel:
        windows = np.geomspace(t_star, max(problem.max_window, t_star), options.restarts)
        for k, t_op in enumerate(windows):
            if k == 0:
                seed = _seed_decision(problem, float(t_op), np.ones(problem.spec.n_nodes))[0]
            else:
                seed = _uniform_seed(problem, float(t_op))
            if seed is not None:
                seeds.append(seed)
    else:
        for factor in CONSTANT_SEED_FACTORS[: options.restarts]:
            t_op = float(np.clip(factor * t_star, MIN_WINDOW, problem.max_window))
            try:
                seeds.append(_seed_decision(problem, t_op, np.ones(problem.spec.n_nodes))[0])
            except EcoDeflectError as err:
                logger.debug("seed at t_op=%.6f TU skipped: %s", t_op, err)
    seeds = seeds[: options.restarts]
    rng = np.random.default_rng(options.seed)
    jittered = []
    for k, seed in enumerate(seeds):
        if k > 0:
            noise = rng.normal(0.0, SIGMA_JITTER, seed.sigma.size)
            seed = Decision(seed.t_soi, seed.t_op, seed.accel_frac, seed.sigma + noise)
        jittered.append(seed)
    return jittered


# -- solves -------------------------------------------------------------------


def _preferred(candidate: AugLagResult, incumbent: AugLagResult | None, t_op_cand: float,
               t_op_inc: float) -> bool:
    if incumbent is None:
        return True
    if candidate.feasible != incumbent.feasible:
        return candidate.feasible
    if not candidate.feasible:
        return candidate.violation < incumbent.violation
    if candidate.objective != incumbent.objective:
        return candidate.objective < incumbent.objective
    return t_op_cand < t_op_inc


def _idle_and_active(
    times: NDArray[np.float64], accel_frac: NDArray[np.float64], threshold: float
) -> tuple[float, float]:
    active = np.flatnonzero(accel_frac >= threshold)
    if active.size == 0:
        return float(times[-1] - times[0]), 0.0
    idle = float(times[active[0]] - times[0])
    return idle, float(times[active[-1]] - times[active[0]])


def laser_energy(scenario: Scenario, control: ControlHistory) -> float:
    """
    Energy drawn by the laser over a control history (J).

    Power is a * M / C_m. With mass loss on, M follows the ablation rocket
    equation M = M0 * exp(-dv / (C_m * Q*)); otherwise M = M0.
    """
    if control.is_empty:
        return 0.0
    units = scenario.units
    laser = scenario.laser
    t_si = control.times * units.time_unit
    a_si = control.accel * units.accel_unit
    mass = np.full(t_si.size, scenario.eco_mass)
    if scenario.flags.mass_loss:
        dv = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t_si) * (a_si[:-1] + a_si[1:]))])
        mass = scenario.eco_mass * np.exp(-dv / (laser.coupling_cm * laser.q_star))
    power = a_si * mass / laser.coupling_cm
    return float(np.sum(0.5 * np.diff(t_si) * (power[:-1] + power[1:])))


def _build_report(
    problem: ShootingProblem,
    result: AugLagResult,
    *,
    n_seeds: int,
    nfev: int,
) -> SolutionReport:
    spec = problem.spec
    scenario = problem.setup.scenario
    units = scenario.units
    decision = problem.decision(result.x)
    arc = problem.shoot(decision)
    residuals = _residuals(problem, decision, problem.terminal(decision, arc))
    control = decision.control(problem.t_start, problem.a_max)
    times = decision.node_times(problem.t_start)
    idle, active = _idle_and_active(
        times, decision.accel_frac, problem.options.idle_fraction
    )
    delta = operational_angle(control.sigma, arc.node_states[:, 1], arc.node_states[:, 2])
    if result.feasible:
        status = "converged" if result.converged else "feasible"
    else:
        status = "failed"
    value = objective(control)
    return SolutionReport(
        regime=spec.regime,
        start_time=spec.start_time,
        status=status,
        t_soi=decision.t_soi,
        t_op_day=units.days(active),
        window_day=units.days(decision.t_op),
        idle_day=units.days(idle),
        energy_kw_day=laser_energy(scenario, control) / 1e3 / SECONDS_PER_DAY,
        dv_mps=value * units.speed_unit,
        objective=value,
        residuals=residuals,
        control=control,
        delta_deg=delta,
        profile=spec.profile.label if spec.profile else "",
        n_outer=result.n_outer,
        nfev=nfev,
        seeds=n_seeds,
        message=result.message,
        decision=decision,
    )


def solve_transcription(
    setup: CollisionSetup,
    spec: TranscriptionSpec,
    options: SolverOptions,
    *,
    initial: Decision | None = None,
    initial_start: float | None = None,
) -> SolutionReport:
    """
    Solve one NLP from every seed and report the best result.

    Args:
        setup: Collision setup at the start time.
        spec: Mesh, regime and bounds.
        options: Solver settings.
        initial: Neighbouring solution used as the first seed.
        initial_start: Start epoch (TU) of the window ``initial`` belongs to.

    Returns:
        SolutionReport; status "infeasible" when no admissible window reaches
        the required impact parameter, "failed" when no run ended feasible.
    """
    try:
        problem = ShootingProblem(setup, spec, options)
        seeds = build_seeds(problem, initial, initial_start)
    except InfeasibleControlError as err:
        logger.info("t_i=%.4f Tp %s: infeasible (%s)", spec.start_time, spec.regime, err)
        return SolutionReport(spec.regime, spec.start_time, "infeasible", message=str(err),
                              profile=spec.profile.label if spec.profile else "")
    if not seeds:
        return SolutionReport(spec.regime, spec.start_time, "infeasible",
                              message="no seed reaches the impact parameter")

    best: AugLagResult | None = None
    best_t_op = math.inf
    nfev = 0
    for k, seed in enumerate(seeds):
        solver = AugmentedLagrangian(
            problem.evaluate,
            problem.bounds(),
            feas_tol=options.feas_tol,
            opt_tol=options.opt_tol,
            max_outer=options.max_outer,
            inner_maxiter=options.inner_maxiter,
        )
        result = solver.solve(problem.vector(seed))
        nfev += result.nfev
        t_op = float(result.x[1])
        logger.debug(
            "seed %d: objective=%.10g violation=%.3e outer=%d %s",
            k, result.objective, result.violation, result.n_outer, result.message,
        )
        if result.evaluation is not None and _preferred(result, best, t_op, best_t_op):
            best, best_t_op = result, t_op

    if best is None:
        return SolutionReport(spec.regime, spec.start_time, "failed", seeds=len(seeds),
                              nfev=nfev, message="every seed failed to evaluate")
    report = _build_report(problem, best, n_seeds=len(seeds), nfev=nfev)
    logger.info(
        "t_i=%.4f Tp %s: %s t_op=%.4f d idle=%.4f d energy=%.1f kW*day",
        spec.start_time, spec.regime, report.status, report.t_op_day, report.idle_day,
        report.energy_kw_day,
    )
    return report


def _spec_for(
    regime: Regime, start_time: float, options: SolverOptions, profile: BoundedProfile | None
) -> TranscriptionSpec:
    return TranscriptionSpec(
        n_intervals=options.nodes,
        regime=regime,
        start_time=start_time,
        profile=profile if regime == "bounded" else None,
    )


def solve_constant_power(
    scenario: Scenario, start_time: float, options: SolverOptions | None = None
) -> SolutionReport:
    """Shortest window at full power; energy is P_max * t_op."""
    options = options or SolverOptions()
    setup = build_collision_scenario(scenario, start_time)
    return solve_transcription(setup, _spec_for("constant", start_time, options, None), options)


def solve_variable_power(
    scenario: Scenario, start_time: float, options: SolverOptions | None = None
) -> SolutionReport:
    """Minimum-energy control with the acceleration free in [0, a_max]."""
    options = options or SolverOptions()
    setup = build_collision_scenario(scenario, start_time)
    return solve_transcription(setup, _spec_for("variable", start_time, options, None), options)


def solve_bounded(
    scenario: Scenario,
    start_time: float,
    profile: BoundedProfile,
    options: SolverOptions | None = None,
) -> SolutionReport:
    """Minimum-energy control with a lower-bound profile on the acceleration."""
    options = options or SolverOptions()
    setup = build_collision_scenario(scenario, start_time)
    return solve_transcription(setup, _spec_for("bounded", start_time, options, profile), options)


def _solve_point(
    scenario: Scenario,
    start_time: float,
    regime: Regime,
    options: SolverOptions,
    profile: BoundedProfile | None,
    initial: tuple[Decision, float] | None = None,
) -> SolutionReport:
    try:
        setup = build_collision_scenario(scenario, start_time)
        spec = _spec_for(regime, start_time, options, profile)
        warm, warm_start = initial if initial is not None else (None, None)
        return solve_transcription(setup, spec, options, initial=warm, initial_start=warm_start)
    except EcoDeflectError as err:
        logger.warning("t_i=%.4f Tp %s failed: %s", start_time, regime, err)
        return SolutionReport(regime, start_time, "failed", message=f"{type(err).__name__}: {err}")


def sweep_start_times(
    scenario: Scenario,
    start_times: Sequence[float],
    regime: Regime,
    options: SolverOptions | None = None,
    profile: BoundedProfile | None = None,
) -> list[SolutionReport]:
    """
    Solve a grid of start times.

    With one worker and warm starts on, each point is seeded from the
    previous feasible point. With several workers the points are solved
    independently in a process pool and start cold, which is logged.
    Failures are recorded in the row status.
    """
    options = options or SolverOptions()
    grid = [float(t) for t in start_times]
    if not grid:
        raise ValueError("start-time grid is empty")
    if options.workers > 1 and len(grid) > 1:
        if options.warm_start:
            logger.info(
                "sweep %s: %d workers, points start cold (warm starts need workers=1)",
                regime, options.workers,
            )
        with ProcessPoolExecutor(max_workers=options.workers) as pool:
            futures = [
                pool.submit(_solve_point, scenario, t_i, regime, options, profile) for t_i in grid
            ]
            reports = [f.result() for f in futures]
    else:
        reports = []
        previous: tuple[Decision, float] | None = None
        for t_i in grid:
            report = _solve_point(scenario, t_i, regime, options, profile, previous)
            reports.append(report)
            if options.warm_start and report.feasible and report.decision is not None:
                previous = (report.decision, scenario.impact_epoch - t_i * scenario.period)
            logger.info("sweep %s: t_i=%.4f Tp done (%s)", regime, t_i, report.status)
    return reports
