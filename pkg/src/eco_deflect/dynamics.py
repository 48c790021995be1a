"""
Thrust-perturbed heliocentric equations of motion and their integration.

The ECO state is integrated in heliocentric spherical coordinates
(r, u, v, w, Theta, phi) with an optional seventh mass component. The laser
acceleration a_l acts at in-plane angle sigma (measured from the tangential
direction towards the radial direction) and out-of-plane angle beta.

Thrust is switched off whenever the ECO is inside the Earth's sphere of
influence; motion inside the SOI is handled analytically by the flyby module.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp

from eco_deflect.elements import (
    POLAR_COS_TOL,
    SphericalState,
    spherical_arrays_to_cartesian,
)
from eco_deflect.ephemeris import EarthModel
from eco_deflect.exceptions import NoCrossingError, PolarSingularityError, PropagationError
from eco_deflect.laser import LaserConfig
from eco_deflect.units import CanonicalUnits

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_METHOD = "RK45"


@dataclass(frozen=True)
class ControlSample:
    """
    Thrust command at one mesh node.

    Attributes:
        accel_mag: Acceleration magnitude a_l (SU/TU), >= 0.
        sigma: In-plane angle (rad), from the tangential towards the radial direction.
        beta: Out-of-plane angle (rad).
        node_time: Epoch of the node (TU).
    """

    accel_mag: float
    sigma: float
    beta: float = 0.0
    node_time: float = 0.0

    def __post_init__(self) -> None:
        if self.accel_mag < 0.0:
            raise ValueError(f"accel_mag must be non-negative, got {self.accel_mag}")


@dataclass(frozen=True, eq=False)
class ControlHistory:
    """
    Piecewise-linear control over [t_start, t_end], zero thrust outside.

    Acceleration and sigma are interpolated independently; sigma is unwrapped
    across nodes first so no interval sweeps through a 2*pi jump.
    """

    times: NDArray[np.float64]
    accel: NDArray[np.float64]
    sigma: NDArray[np.float64]
    beta: NDArray[np.float64]

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        accel = np.asarray(self.accel, dtype=float)
        sigma = np.unwrap(np.asarray(self.sigma, dtype=float))
        beta = np.asarray(self.beta, dtype=float)
        if not times.shape == accel.shape == sigma.shape == beta.shape:
            raise ValueError("control node arrays must have the same shape")
        if times.size == 1:
            raise ValueError("a control history needs zero or at least two nodes")
        if times.size and np.any(np.diff(times) <= 0.0):
            raise ValueError("control node times must be strictly increasing")
        if np.any(accel < 0.0):
            raise ValueError("control accelerations must be non-negative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "accel", accel)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def from_nodes(cls, nodes: Sequence[ControlSample]) -> "ControlHistory":
        return cls(
            times=np.array([n.node_time for n in nodes]),
            accel=np.array([n.accel_mag for n in nodes]),
            sigma=np.array([n.sigma for n in nodes]),
            beta=np.array([n.beta for n in nodes]),
        )

    @classmethod
    def zero(cls) -> "ControlHistory":
        empty = np.zeros(0)
        return cls(empty, empty, empty, empty)

    @classmethod
    def constant(
        cls, t_start: float, t_end: float, accel: float, sigma: float, beta: float = 0.0
    ) -> "ControlHistory":
        times = np.array([t_start, t_end])
        return cls(times, np.full(2, accel), np.full(2, sigma), np.full(2, beta))

    @property
    def is_empty(self) -> bool:
        return self.times.size == 0

    @property
    def t_start(self) -> float:
        return float(self.times[0]) if self.times.size else 0.0

    @property
    def t_end(self) -> float:
        return float(self.times[-1]) if self.times.size else 0.0

    @property
    def nodes(self) -> list[ControlSample]:
        return [
            ControlSample(float(a), float(s), float(b), float(t))
            for t, a, s, b in zip(self.times, self.accel, self.sigma, self.beta, strict=True)
        ]

    def evaluate(self, t: float) -> tuple[float, float, float]:
        """(a_l, sigma, beta) at epoch ``t``; zero thrust outside the window."""
        if self.is_empty or t < self.times[0] or t > self.times[-1]:
            return 0.0, 0.0, 0.0
        return (
            float(np.interp(t, self.times, self.accel)),
            float(np.interp(t, self.times, self.sigma)),
            float(np.interp(t, self.times, self.beta)),
        )

    def sample(self, t: float) -> ControlSample:
        a, s, b = self.evaluate(t)
        return ControlSample(a, s, b, t)


def derivatives(
    y: NDArray[np.float64], accel: float, sigma: float, beta: float, mu: float
) -> NDArray[np.float64]:
    """
    Right-hand side of the spherical equations of motion.

    Args:
        y: (r, u, v, w, theta, phi, ...) state; extra components are ignored.
        accel: Thrust acceleration magnitude (SU/TU).
        sigma: In-plane thrust angle (rad).
        beta: Out-of-plane thrust angle (rad).
        mu: Central gravitational parameter.

    Returns:
        Time derivatives of the first six components.

    Raises:
        PolarSingularityError: If cos(phi) < 1e-9.
    """
    r, u, v, w, _, phi = y[:6]
    cphi = math.cos(phi)
    if cphi < POLAR_COS_TOL:
        raise PolarSingularityError(f"cos(phi) = {cphi:.3e} at latitude {phi} rad")
    tphi = math.sin(phi) / cphi
    a_cb = accel * math.cos(beta)
    return np.array(
        [
            u,
            (v * v + w * w) / r - mu / (r * r) + a_cb * math.sin(sigma),
            -u * v / r + v * w * tphi / r + a_cb * math.cos(sigma),
            -u * w / r + v * v * tphi / r + accel * math.sin(beta),
            v / (r * cphi),
            w / r,
        ]
    )


def eom_rhs(st: SphericalState, ctrl: ControlSample, mu: float) -> NDArray[np.float64]:
    """
    Time derivative (r', u', v', w', Theta', phi') of a spherical state.

    Args:
        st: Current state.
        ctrl: Thrust command applied at this instant.
        mu: Central gravitational parameter.

    Returns:
        Array of six derivatives.
    """
    return derivatives(st.as_array(), ctrl.accel_mag, ctrl.sigma, ctrl.beta, mu)


def flight_path_angle(u: ArrayLike, v: ArrayLike) -> NDArray[np.float64]:
    """Angle of the in-plane velocity from the tangential towards the radial direction."""
    return np.arctan2(np.asarray(u, dtype=float), np.asarray(v, dtype=float))


def operational_angle(sigma: ArrayLike, u: ArrayLike, v: ArrayLike) -> NDArray[np.float64]:
    """
    Operational angle delta between thrust and velocity, in degrees [0, 360).

    For planar motion delta = sigma - gamma, with gamma the flight-path angle
    measured in the same sense as sigma.
    """
    delta = np.asarray(sigma, dtype=float) - flight_path_angle(u, v)
    return np.degrees(np.mod(delta, 2.0 * np.pi))


@dataclass(frozen=True)
class SoiEvent:
    """Inbound SOI crossing found during propagation."""

    t_soi: float
    state: SphericalState


@dataclass(frozen=True)
class PropagationDiagnostics:
    n_steps: int
    nfev: int
    segments: int
    message: str = ""


@dataclass(frozen=True, eq=False)
class PropagationResult:
    """
    Integrated trajectory with optional SOI crossing.

    Attributes:
        t: Step epochs (TU), shape (n,).
        y: States (r, u, v, w, theta, phi, mass) at the step epochs, shape (7, n).
        soi_event: Inbound SOI crossing when one terminated the integration.
        diagnostics: Step and evaluation counts.
    """

    t: NDArray[np.float64]
    y: NDArray[np.float64]
    soi_event: SoiEvent | None
    diagnostics: PropagationDiagnostics
    _dense: list = field(default_factory=list, repr=False)

    @property
    def final(self) -> SphericalState:
        return SphericalState.from_array(self.y[:, -1], float(self.t[-1]))

    @property
    def trajectory(self) -> list[tuple[float, SphericalState]]:
        return [
            (float(t), SphericalState.from_array(self.y[:, k], float(t)))
            for k, t in enumerate(self.t)
        ]

    def state_at(self, t: float) -> NDArray[np.float64]:
        """Dense-output state vector at epoch ``t`` inside the integrated span."""
        for t0, t1, sol in self._dense:
            if min(t0, t1) <= t <= max(t0, t1):
                return np.asarray(sol(t), dtype=float)
        raise ValueError(f"epoch {t} is outside the propagated span")


@dataclass(frozen=True)
class ThrustContext:
    """
    What the right-hand side needs beyond the state and the control.

    The commanded acceleration is applied as given. With mass loss on, M(t)
    only sets the power drawn; the cap a_max = P * C_m / M stays at the
    initial mass, so a lighter ECO is never pushed harder.
    """

    mu: float
    earth: EarthModel | None = None
    soi_radius: float | None = None
    laser: LaserConfig | None = None
    units: CanonicalUnits | None = None
    mass_loss: bool = False

    def mass_rate(self, accel: float, mass: float) -> float:
        """dM/dt in kg/TU for a canonical acceleration on the current mass."""
        if not self.mass_loss or accel == 0.0 or self.laser is None or self.units is None:
            return 0.0
        power = accel * self.units.accel_unit * mass / self.laser.coupling_cm
        return -power / self.laser.q_star * self.units.time_unit

    def inside_soi(self, t: float, y: NDArray[np.float64]) -> bool:
        if self.earth is None or self.soi_radius is None:
            return False
        return separation(t, y, self.earth) < self.soi_radius


def separation(t: float, y: NDArray[np.float64], earth: EarthModel) -> float:
    """Earth-ECO distance for a spherical state vector at epoch t."""
    pos, _ = spherical_arrays_to_cartesian(np.asarray(y, dtype=float).reshape(-1, 1))
    earth_pos, _ = earth.states(np.array([t]))
    return float(np.linalg.norm(pos[0] - earth_pos[0]))


def _rhs(ctrl: ControlHistory, ctx: ThrustContext):
    def fun(t: float, y: NDArray[np.float64]) -> NDArray[np.float64]:
        accel, sigma, beta = ctrl.evaluate(t)
        if accel > 0.0 and ctx.inside_soi(t, y):
            accel = 0.0
        dy = np.empty(7)
        dy[:6] = derivatives(y, accel, sigma, beta, ctx.mu)
        dy[6] = ctx.mass_rate(accel, y[6])
        return dy

    return fun


def _soi_event(earth: EarthModel, soi_radius: float):
    def event(t: float, y: NDArray[np.float64]) -> float:
        return separation(t, y, earth) - soi_radius

    event.terminal = True  # type: ignore[attr-defined]
    event.direction = -1.0  # type: ignore[attr-defined]
    return event


def propagate(
    initial: SphericalState,
    ctrl: ControlHistory,
    span: tuple[float, float],
    *,
    mu: float = 1.0,
    stop_at_soi: bool = False,
    earth: EarthModel | None = None,
    soi_radius: float | None = None,
    laser: LaserConfig | None = None,
    units: CanonicalUnits | None = None,
    mass_loss: bool = False,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    method: str = DEFAULT_METHOD,
) -> PropagationResult:
    """
    Integrate the ECO state under the given control history.

    The span is split at the control window boundaries so the thrust
    switch-on and switch-off never fall inside a step.

    Args:
        initial: State at ``span[0]``.
        ctrl: Control history (zero thrust outside its window).
        span: (t0, t1) integration span in TU.
        mu: Solar gravitational parameter.
        stop_at_soi: Terminate at the first inbound crossing of the SOI sphere.
        earth: Earth ephemeris, required for the SOI event and the in-SOI cutoff.
        soi_radius: SOI radius (LU).
        laser: Laser parameters, needed when ``mass_loss`` is on.
        units: Canonical units, needed when ``mass_loss`` is on.
        mass_loss: Integrate dM/dt = -P/Q*.
        rtol: Relative local error tolerance.
        atol: Absolute local error tolerance.
        method: solve_ivp method (embedded Runge-Kutta pair).

    Returns:
        PropagationResult with step epochs, states and the SOI event if any.

    Raises:
        PropagationError: On integrator failure (e.g. step-size underflow).
        NoCrossingError: If ``stop_at_soi`` is set and no inbound crossing occurs.
    """
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise ValueError(f"integration span must be increasing, got {span}")
    if stop_at_soi and (earth is None or soi_radius is None):
        raise ValueError("stop_at_soi needs an Earth model and an SOI radius")
    if mass_loss and (laser is None or units is None):
        raise ValueError("mass loss needs the laser configuration and the unit system")

    ctx = ThrustContext(mu, earth, soi_radius, laser, units, mass_loss)
    fun = _rhs(ctrl, ctx)
    events = [_soi_event(earth, soi_radius)] if stop_at_soi and earth and soi_radius else None

    breaks = [t0]
    if not ctrl.is_empty:
        breaks += [t for t in (ctrl.t_start, ctrl.t_end) if t0 < t < t1]
    breaks.append(t1)

    y0 = initial.as_array()
    ts: list[NDArray[np.float64]] = [np.array([t0])]
    ys: list[NDArray[np.float64]] = [y0.reshape(7, 1)]
    dense = []
    nfev = 0
    soi_event = None
    message = ""
    for seg_start, seg_end in zip(breaks[:-1], breaks[1:], strict=True):
        sol = solve_ivp(
            fun,
            (seg_start, seg_end),
            y0,
            method=method,
            rtol=rtol,
            atol=atol,
            dense_output=True,
            events=events,
        )
        nfev += sol.nfev
        message = sol.message
        if sol.status == -1:
            raise PropagationError(f"integration failed at t={sol.t[-1]:.9f} TU: {sol.message}")
        ts.append(sol.t[1:])
        ys.append(sol.y[:, 1:])
        dense.append((seg_start, float(sol.t[-1]), sol.sol))
        y0 = sol.y[:, -1]
        if sol.status == 1 and sol.t_events is not None and sol.t_events[0].size:
            t_soi = float(sol.t_events[0][0])
            y_soi = sol.y_events[0][0]
            soi_event = SoiEvent(t_soi, SphericalState.from_array(y_soi, t_soi))
            logger.debug("SOI entry at t=%.9f TU", t_soi)
            break

    t_all = np.concatenate(ts)
    y_all = np.concatenate(ys, axis=1)
    result = PropagationResult(
        t=t_all,
        y=y_all,
        soi_event=soi_event,
        diagnostics=PropagationDiagnostics(
            n_steps=t_all.size - 1, nfev=nfev, segments=len(dense), message=message
        ),
        _dense=dense,
    )
    if stop_at_soi and soi_event is None:
        err = NoCrossingError(f"no inbound SOI crossing in [{t0}, {t1}] TU")
        err.result = result  # type: ignore[attr-defined]
        raise err
    return result


def relative_states(
    result: PropagationResult, earth: EarthModel
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Earth-relative positions and velocities along a propagated trajectory."""
    pos, vel = spherical_arrays_to_cartesian(result.y)
    e_pos, e_vel = earth.states(result.t)
    return pos - e_pos, vel - e_vel
