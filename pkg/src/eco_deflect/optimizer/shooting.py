"""
Shooting map from decision variables to terminal conditions at the SOI.

The thrust arc over the operation window is integrated in normalised time,
one mesh interval at a time, together with its variational equations: the
state transition matrix of the interval and the sensitivities to the window
length and the two control nodes that bound it. Chaining the intervals gives
the exact Jacobian of the window-end state. From there the ECO coasts on a
Kepler orbit to the SOI entry epoch; that map is analytic and differentiated
by central differences.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from eco_deflect.config import SolverOptions
from eco_deflect.elements import (
    POLAR_COS_TOL,
    CartesianState,
    cartesian_to_elements,
    kepler_states,
    spherical_arrays_to_cartesian,
)
from eco_deflect.exceptions import (
    InfeasibleControlError,
    PolarSingularityError,
    PropagationError,
)
from eco_deflect.flyby import impact_parameter, nominal_soi_entry
from eco_deflect.optimizer.auglag import NLPEvaluation
from eco_deflect.optimizer.problem import Decision, TranscriptionSpec, trapezoid_weights
from eco_deflect.scenario import CollisionSetup

logger = logging.getLogger(__name__)

# Scale of the window length in the decision vector (TU)
WINDOW_SCALE = 0.1
MIN_WINDOW = 1e-4
# Window must close this long (TU) before SOI entry
SOI_MARGIN = 1e-4
COAST_FD_STEP = 1e-6


def rhs_and_jacobians(
    y: NDArray[np.float64], accel: float, sigma: float, mu: float
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """
    Planar-thrust right-hand side and its partial derivatives.

    Args:
        y: (r, u, v, w, theta, phi).
        accel: Thrust acceleration (SU/TU).
        sigma: In-plane angle (rad); beta is zero.
        mu: Solar gravitational parameter.

    Returns:
        f, df/dy (6x6), df/da (6,), df/dsigma (6,).
    """
    r, u, v, w, _, phi = y[:6]
    cphi = math.cos(phi)
    if cphi < POLAR_COS_TOL:
        raise PolarSingularityError(f"cos(phi) = {cphi:.3e}")
    tphi = math.sin(phi) / cphi
    sec2 = 1.0 / (cphi * cphi)
    ss, cs = math.sin(sigma), math.cos(sigma)
    ir = 1.0 / r
    ir2 = ir * ir
    f = np.array(
        [
            u,
            (v * v + w * w) * ir - mu * ir2 + accel * ss,
            -u * v * ir + v * w * tphi * ir + accel * cs,
            -u * w * ir + v * v * tphi * ir,
            v * ir / cphi,
            w * ir,
        ]
    )
    jac = np.zeros((6, 6))
    jac[0, 1] = 1.0
    jac[1, 0] = -(v * v + w * w) * ir2 + 2.0 * mu * ir2 * ir
    jac[1, 2] = 2.0 * v * ir
    jac[1, 3] = 2.0 * w * ir
    jac[2, 0] = (u * v - v * w * tphi) * ir2
    jac[2, 1] = -v * ir
    jac[2, 2] = (w * tphi - u) * ir
    jac[2, 3] = v * tphi * ir
    jac[2, 5] = v * w * sec2 * ir
    jac[3, 0] = (u * w - v * v * tphi) * ir2
    jac[3, 1] = -w * ir
    jac[3, 2] = 2.0 * v * tphi * ir
    jac[3, 3] = -u * ir
    jac[3, 5] = v * v * sec2 * ir
    jac[4, 0] = -v * ir2 / cphi
    jac[4, 2] = ir / cphi
    jac[4, 5] = v * tphi * ir / cphi
    jac[5, 0] = -w * ir2
    jac[5, 3] = ir
    d_accel = np.array([0.0, ss, cs, 0.0, 0.0, 0.0])
    d_sigma = np.array([0.0, accel * cs, -accel * ss, 0.0, 0.0, 0.0])
    return f, jac, d_accel, d_sigma


def _interval_rhs(
    s: float,
    y: NDArray[np.float64],
    h: float,
    a0: float,
    a1: float,
    s0: float,
    s1: float,
    mu: float,
) -> NDArray[np.float64]:
    f, _, _, _ = rhs_and_jacobians(y, a0 + (a1 - a0) * s, s0 + (s1 - s0) * s, mu)
    return h * f


def _interval_rhs_variational(
    s: float,
    z: NDArray[np.float64],
    h: float,
    a0: float,
    a1: float,
    s0: float,
    s1: float,
    mu: float,
    n: int,
) -> NDArray[np.float64]:
    # z = [y (6), W (6x11) row-major]
    # W = [Phi | dy/dT | dy/da_k | dy/da_k+1 | dy/ds_k | dy/ds_k+1]
    f, jac, d_accel, d_sigma = rhs_and_jacobians(
        z[:6], a0 + (a1 - a0) * s, s0 + (s1 - s0) * s, mu
    )
    w = z[6:].reshape(6, 11)
    dw = h * (jac @ w)
    dw[:, 6] += f / n
    dw[:, 7] += h * (1.0 - s) * d_accel
    dw[:, 8] += h * s * d_accel
    dw[:, 9] += h * (1.0 - s) * d_sigma
    dw[:, 10] += h * s * d_sigma
    return np.concatenate([h * f, dw.ravel()])


@dataclass(frozen=True, eq=False)
class WindowArc:
    """
    Thrust arc over the operation window.

    Attributes:
        node_states: States (r, u, v, w, theta, phi) at the control nodes, (N+1, 6).
        jacobian: d(window-end state)/d(T, a_0..a_N, sigma_0..sigma_N), or None.
    """

    node_states: NDArray[np.float64]
    jacobian: NDArray[np.float64] | None = None

    @property
    def final(self) -> NDArray[np.float64]:
        return self.node_states[-1]


@dataclass(frozen=True, eq=False)
class TerminalState:
    """Earth-relative state at the candidate SOI epoch and the derived conditions."""

    rel_position: NDArray[np.float64]
    rel_velocity: NDArray[np.float64]
    ell: float
    ell_dot: float
    b: float
    b_required: float


class ShootingProblem:
    """
    NLP functions for one (scenario, start time, regime) combination.

    Decision vector x (scaled):
        x[0]  (t_soi - t_ref) / s_soi, with t_ref the unperturbed SOI entry
              epoch and s_soi = l_soi / v_rel its natural time scale.
        x[1]  t_op / WINDOW_SCALE.
        x[accel_slice]  a_k / a_max (absent in the constant regime).
        x[sigma_slice]  sigma_k (rad).

    Equalities (l_soi - l) / l_soi and (b^2 - b_i^2) / (2 b_ref^2); inequalities
    -l_dot / v_ref >= 0 and (t_soi - t_f - margin) / WINDOW_SCALE >= 0.
    """

    def __init__(self, setup: CollisionSetup, spec: TranscriptionSpec, options: SolverOptions):
        self.setup = setup
        self.spec = spec
        self.options = options
        scenario = setup.scenario
        self.mu = scenario.mu_sun
        self.mu_earth = scenario.mu_earth
        self.earth = scenario.earth_model
        self.soi_radius = scenario.soi_radius
        self.miss_distance = scenario.miss_distance
        self.a_max = scenario.max_accel
        self.t_start = setup.t_start
        self.y0 = setup.initial_state.as_array()[:6]
        self.n = spec.n_intervals
        self.weights = trapezoid_weights(spec.n_nodes)

        self.t_ref = nominal_soi_entry(
            scenario.eco_elements,
            self.earth,
            self.soi_radius,
            scenario.impact_epoch,
            mu=self.mu,
        )
        _, vel = kepler_states(scenario.eco_elements, [self.t_ref], self.mu)
        _, e_vel = self.earth.states([self.t_ref])
        self.v_ref = float(np.linalg.norm(vel[0] - e_vel[0]))
        self.b_ref = impact_parameter(self.miss_distance, self.v_ref, self.mu_earth)
        self.soi_time = self.soi_radius / self.v_ref
        if self.t_ref - SOI_MARGIN <= self.t_start:
            raise InfeasibleControlError("operation window starts after the SOI entry")
        self.nfev = 0

    # -- decision packing -------------------------------------------------

    def decision(self, x: NDArray[np.float64]) -> Decision:
        spec = self.spec
        accel = x[spec.accel_slice] if spec.free_accel else np.ones(spec.n_nodes)
        return Decision(
            t_soi=self.t_ref + x[0] * self.soi_time,
            t_op=x[1] * WINDOW_SCALE,
            accel_frac=np.array(accel, dtype=float),
            sigma=np.array(x[spec.sigma_slice], dtype=float),
        )

    def vector(self, decision: Decision) -> NDArray[np.float64]:
        spec = self.spec
        x = np.empty(spec.size)
        x[0] = (decision.t_soi - self.t_ref) / self.soi_time
        x[1] = decision.t_op / WINDOW_SCALE
        if spec.free_accel:
            x[spec.accel_slice] = decision.accel_frac
        x[spec.sigma_slice] = decision.sigma
        return x

    def bounds(self) -> list[tuple[float | None, float | None]]:
        spec = self.spec
        t_max = self.t_ref - SOI_MARGIN - self.t_start
        out: list[tuple[float | None, float | None]] = [
            (-1.0, 1.0),
            (MIN_WINDOW / WINDOW_SCALE, t_max / WINDOW_SCALE),
        ]
        if spec.free_accel:
            out += [(float(lo), float(hi)) for lo, hi in zip(spec.lower, spec.upper, strict=True)]
        out += [(None, None)] * spec.n_nodes
        return out

    @property
    def max_window(self) -> float:
        return self.t_ref - SOI_MARGIN - self.t_start

    # -- shooting -----------------------------------------------------------

    def shoot(
        self, decision: Decision, *, sensitivities: bool = False, rtol: float | None = None,
        atol: float | None = None,
    ) -> WindowArc:
        """
        Integrate the thrust arc over the window.

        Raises:
            PropagationError: If an interval integration fails.
        """
        rtol = self.options.rtol if rtol is None else rtol
        atol = self.options.atol if atol is None else atol
        n = self.n
        n1 = n + 1
        h = decision.t_op / n
        accel = self.a_max * decision.accel_frac
        sigma = np.unwrap(decision.sigma)
        nodes = np.empty((n1, 6))
        nodes[0] = y = self.y0.copy()
        jac = np.zeros((6, 1 + 2 * n1)) if sensitivities else None
        w0 = np.hstack([np.eye(6), np.zeros((6, 5))]).ravel()
        for k in range(n):
            args = (h, accel[k], accel[k + 1], sigma[k], sigma[k + 1], self.mu)
            if jac is None:
                sol = solve_ivp(_interval_rhs, (0.0, 1.0), y, args=args, rtol=rtol, atol=atol)
            else:
                sol = solve_ivp(
                    _interval_rhs_variational,
                    (0.0, 1.0),
                    np.concatenate([y, w0]),
                    args=(*args, n),
                    rtol=rtol,
                    atol=atol,
                )
            if not sol.success:
                raise PropagationError(f"thrust arc interval {k} failed: {sol.message}")
            z = sol.y[:, -1]
            y = z[:6]
            if jac is not None:
                w = z[6:].reshape(6, 11)
                jac = w[:, :6] @ jac
                jac[:, 0] += w[:, 6]
                jac[:, 1 + k] += w[:, 7]
                jac[:, 2 + k] += w[:, 8]
                jac[:, 1 + n1 + k] += w[:, 9]
                jac[:, 2 + n1 + k] += w[:, 10]
            nodes[k + 1] = y
        self.nfev += 1
        return WindowArc(nodes, jac)

    def coast(self, y: NDArray[np.float64], t_from: float, t_to: float) -> NDArray[np.float64]:
        """Heliocentric (position, velocity) at ``t_to`` after a Kepler coast from ``t_from``."""
        pos, vel = spherical_arrays_to_cartesian(np.asarray(y, dtype=float).reshape(6, 1))
        el = cartesian_to_elements(CartesianState(pos[0], vel[0], t_from), self.mu)
        p, v = kepler_states(el, [t_to], self.mu)
        return np.concatenate([p[0], v[0]])

    def _coast_jacobian(self, y: NDArray[np.float64], t_from: float, t_to: float):
        jac = np.empty((6, 6))
        for j in range(6):
            step = COAST_FD_STEP * max(abs(y[j]), 1.0)
            up, down = y.copy(), y.copy()
            up[j] += step
            down[j] -= step
            jac[:, j] = (self.coast(up, t_from, t_to) - self.coast(down, t_from, t_to)) / (
                2.0 * step
            )
        return jac

    def terminal(self, decision: Decision, arc: WindowArc) -> TerminalState:
        t_f = self.t_start + decision.t_op
        xs = self.coast(arc.final, t_f, decision.t_soi)
        e_pos, e_vel = self.earth.states([decision.t_soi])
        rho, nu = xs[:3] - e_pos[0], xs[3:] - e_vel[0]
        ell = float(np.linalg.norm(rho))
        q = float(rho @ nu)
        n2 = float(nu @ nu)
        b = math.sqrt(max(ell * ell - q * q / n2, 0.0))
        return TerminalState(
            rel_position=rho,
            rel_velocity=nu,
            ell=ell,
            ell_dot=q / ell,
            b=b,
            b_required=impact_parameter(self.miss_distance, math.sqrt(n2), self.mu_earth),
        )

    # -- NLP functions ----------------------------------------------------

    def _objective(self, x: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
        spec = self.spec
        grad = np.zeros(spec.size)
        if not spec.free_accel:
            grad[1] = 1.0
            return float(x[1]), grad
        alpha = x[spec.accel_slice]
        total = float(self.weights @ alpha) / self.n
        grad[1] = total
        grad[spec.accel_slice] = x[1] * self.weights / self.n
        return float(x[1]) * total, grad

    def _constraint_values(
        self, decision: Decision, term: TerminalState
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        b2 = term.b * term.b
        eq = np.array(
            [
                (self.soi_radius - term.ell) / self.soi_radius,
                (b2 - term.b_required**2) / (2.0 * self.b_ref**2),
            ]
        )
        margin = decision.t_soi - self.t_start - decision.t_op - SOI_MARGIN
        ineq = np.array([-term.ell_dot / self.v_ref, margin / WINDOW_SCALE])
        return eq, ineq

    def values(self, x: NDArray[np.float64]) -> tuple[float, NDArray, NDArray]:
        """Objective, equality and inequality values without derivatives."""
        decision = self.decision(x)
        term = self.terminal(decision, self.shoot(decision))
        eq, ineq = self._constraint_values(decision, term)
        return self._objective(x)[0], eq, ineq

    def evaluate(self, x: NDArray[np.float64]) -> NLPEvaluation:
        if self.options.gradient == "central":
            return self._evaluate_central(x)
        return self._evaluate_sensitivity(x)

    def _evaluate_central(self, x: NDArray[np.float64]) -> NLPEvaluation:
        f, eq, ineq = self.values(x)
        size = x.size
        grad = np.empty(size)
        eq_jac = np.empty((eq.size, size))
        ineq_jac = np.empty((ineq.size, size))
        step = self.options.fd_step
        for i in range(size):
            up, down = x.copy(), x.copy()
            up[i] += step
            down[i] -= step
            f_up, eq_up, in_up = self.values(up)
            f_dn, eq_dn, in_dn = self.values(down)
            grad[i] = (f_up - f_dn) / (2.0 * step)
            eq_jac[:, i] = (eq_up - eq_dn) / (2.0 * step)
            ineq_jac[:, i] = (in_up - in_dn) / (2.0 * step)
        return NLPEvaluation(f, grad, eq, eq_jac, ineq, ineq_jac)

    def _evaluate_sensitivity(self, x: NDArray[np.float64]) -> NLPEvaluation:
        spec = self.spec
        decision = self.decision(x)
        arc = self.shoot(decision, sensitivities=True)
        assert arc.jacobian is not None
        term = self.terminal(decision, arc)
        eq, ineq = self._constraint_values(decision, term)
        f, grad = self._objective(x)

        t_f = self.t_start + decision.t_op
        k_y = self._coast_jacobian(arc.final, t_f, decision.t_soi)
        xs = self.coast(arc.final, t_f, decision.t_soi)
        r3 = float(np.linalg.norm(xs[:3])) ** 3
        k_dt = np.concatenate([xs[3:], -self.mu * xs[:3] / r3])
        e_pos, e_vel = self.earth.states([decision.t_soi])
        n_e = self.earth.mean_motion
        e_dot = np.concatenate([e_vel[0], -n_e * n_e * e_pos[0]])

        # d(rho, nu)/d(physical parameters): columns t_soi, T, a_k..., sigma_k...
        n1 = spec.n_nodes
        d_rel = np.empty((6, 2 + 2 * n1))
        d_rel[:, 0] = k_dt - e_dot
        chained = k_y @ arc.jacobian
        d_rel[:, 1] = chained[:, 0] - k_dt
        d_rel[:, 2:] = chained[:, 1:]

        g = self._terminal_gradients(term)
        d_terms = g @ d_rel

        # scale to the decision vector
        size = spec.size
        jac = np.zeros((3, size))
        jac[:, 0] = d_terms[:, 0] * self.soi_time
        jac[:, 1] = d_terms[:, 1] * WINDOW_SCALE
        if spec.free_accel:
            jac[:, spec.accel_slice] = d_terms[:, 2 : 2 + n1] * self.a_max
        jac[:, spec.sigma_slice] = d_terms[:, 2 + n1 :]

        eq_jac = jac[:2]
        ineq_jac = np.zeros((2, size))
        ineq_jac[0] = jac[2]
        ineq_jac[1, 0] = self.soi_time / WINDOW_SCALE
        ineq_jac[1, 1] = -1.0
        return NLPEvaluation(f, grad, eq, eq_jac, ineq, ineq_jac)

    def _terminal_gradients(self, term: TerminalState) -> NDArray[np.float64]:
        """Rows: d/d(rho, nu) of the two equalities and the approach-rate inequality."""
        rho, nu = term.rel_position, term.rel_velocity
        ell = term.ell
        q = float(rho @ nu)
        n2 = float(nu @ nu)
        lm = self.miss_distance
        scale = 2.0 * self.b_ref**2
        g = np.zeros((3, 6))
        g[0, :3] = -rho / (ell * self.soi_radius)
        g[1, :3] = (2.0 * rho - 2.0 * q * nu / n2) / scale
        g[1, 3:] = (
            -2.0 * q * rho / n2 + 2.0 * q * q * nu / n2**2 + 4.0 * self.mu_earth * lm * nu / n2**2
        ) / scale
        g[2, :3] = -(nu / ell - q * rho / ell**3) / self.v_ref
        g[2, 3:] = -(rho / ell) / self.v_ref
        return g
