"""
Augmented-Lagrangian solver for bound-constrained NLPs.

Minimises f(x) subject to c(x) = 0, g(x) >= 0 and simple bounds on x. The
outer loop updates multipliers and the penalty; each inner problem is the
bound-constrained minimisation of the augmented Lagrangian with L-BFGS-B.
Inequalities enter through the shifted-penalty (PHR) term, so no slack
variables are added to the decision vector.
"""

import logging
from collections import OrderedDict
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from eco_deflect.exceptions import EcoDeflectError

logger = logging.getLogger(__name__)

INITIAL_PENALTY = 10.0
PENALTY_GROWTH = 10.0
MAX_PENALTY = 1e12
# Required drop of the violation per outer iteration before the penalty grows
VIOLATION_DECREASE = 0.25
OBJECTIVE_RTOL = 1e-7
# Merit returned for points where the evaluation raised
FAILED_MERIT = 1e12
CACHE_SIZE = 8


@dataclass(frozen=True, eq=False)
class NLPEvaluation:
    """
    Objective and constraint values with their first derivatives at one point.

    Attributes:
        objective: f(x).
        gradient: df/dx.
        eq: Equality residuals c(x), target 0.
        eq_jac: dc/dx, shape (n_eq, n).
        ineq: Inequality values g(x), feasible when >= 0.
        ineq_jac: dg/dx, shape (n_ineq, n).
    """

    objective: float
    gradient: NDArray[np.float64]
    eq: NDArray[np.float64]
    eq_jac: NDArray[np.float64]
    ineq: NDArray[np.float64]
    ineq_jac: NDArray[np.float64]

    @property
    def violation(self) -> float:
        """Largest equality residual or inequality shortfall."""
        parts = [np.abs(self.eq), np.maximum(-self.ineq, 0.0)]
        return float(max((p.max() for p in parts if p.size), default=0.0))


@dataclass(frozen=True, eq=False)
class AugLagResult:
    """Outcome of one augmented-Lagrangian solve."""

    x: NDArray[np.float64]
    evaluation: NLPEvaluation | None
    feasible: bool
    converged: bool
    n_outer: int
    nfev: int
    penalty: float
    message: str

    @property
    def objective(self) -> float:
        return self.evaluation.objective if self.evaluation is not None else float("inf")

    @property
    def violation(self) -> float:
        return self.evaluation.violation if self.evaluation is not None else float("inf")


class AugmentedLagrangian:
    """
    PHR augmented-Lagrangian method.

    L(x) = f + sum(lam * c + rho / 2 * c^2)
             + 1 / (2 rho) * sum(max(0, mu - rho * g)^2 - mu^2)

    Args:
        evaluate: Callable returning an NLPEvaluation at x. Raising an
            EcoDeflectError marks the point as failed; the inner solver then
            sees a large merit and backs off.
        bounds: (lower, upper) per variable, None for unbounded.
        feas_tol: Violation accepted as feasible.
        opt_tol: Projected-gradient tolerance of the inner solves.
        max_outer: Outer iteration cap.
        inner_maxiter: L-BFGS-B iteration cap per outer iteration.
    """

    def __init__(
        self,
        evaluate: Callable[[NDArray[np.float64]], NLPEvaluation],
        bounds: Sequence[tuple[float | None, float | None]],
        *,
        feas_tol: float,
        opt_tol: float,
        max_outer: int,
        inner_maxiter: int,
    ):
        self._evaluate = evaluate
        self.bounds = list(bounds)
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.max_outer = max_outer
        self.inner_maxiter = inner_maxiter
        self._cache: OrderedDict[bytes, NLPEvaluation | None] = OrderedDict()
        self.nfev = 0

    def evaluate(self, x: NDArray[np.float64]) -> NLPEvaluation | None:
        """Cached evaluation; None when the point could not be evaluated."""
        key = np.asarray(x, dtype=float).tobytes()
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        self.nfev += 1
        try:
            ev: NLPEvaluation | None = self._evaluate(np.array(x, dtype=float))
        except EcoDeflectError as err:
            logger.debug("evaluation failed: %s", err)
            ev = None
        else:
            values = np.concatenate([[ev.objective], ev.gradient, ev.eq, ev.ineq])
            if not np.all(np.isfinite(values)):
                ev = None
        self._cache[key] = ev
        if len(self._cache) > CACHE_SIZE:
            self._cache.popitem(last=False)
        return ev

    def _clip(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        lower = np.array([-np.inf if lo is None else lo for lo, _ in self.bounds])
        upper = np.array([np.inf if hi is None else hi for _, hi in self.bounds])
        return np.clip(x, lower, upper)

    def _merit(
        self, z: NDArray[np.float64], lam: NDArray[np.float64], mu: NDArray[np.float64], rho: float
    ) -> tuple[float, NDArray[np.float64]]:
        e = self.evaluate(z)
        if e is None:
            return FAILED_MERIT, np.zeros_like(z)
        shifted = np.maximum(mu - rho * e.ineq, 0.0)
        value = (
            e.objective
            + lam @ e.eq
            + 0.5 * rho * (e.eq @ e.eq)
            + (shifted @ shifted - mu @ mu) / (2.0 * rho)
        )
        grad = e.gradient + e.eq_jac.T @ (lam + rho * e.eq) - e.ineq_jac.T @ shifted
        return float(value), grad

    def solve(self, x0: NDArray[np.float64]) -> AugLagResult:
        x = self._clip(np.asarray(x0, dtype=float))
        ev = self.evaluate(x)
        if ev is None:
            return AugLagResult(x, None, False, False, 0, self.nfev, 0.0, "initial point failed")
        lam = np.zeros(ev.eq.size)
        mu = np.zeros(ev.ineq.size)
        rho = INITIAL_PENALTY
        best_x, best_ev = x, ev
        prev_violation = ev.violation
        prev_objective = ev.objective
        converged = False
        message = "outer iteration limit reached"
        outer = 0

        for outer in range(1, self.max_outer + 1):
            inner = minimize(
                self._merit,
                x,
                args=(lam, mu, rho),
                jac=True,
                method="L-BFGS-B",
                bounds=self.bounds,
                options={"maxiter": self.inner_maxiter, "gtol": self.opt_tol, "ftol": 1e-15},
            )
            x = self._clip(inner.x)
            ev = self.evaluate(x)
            if ev is None:
                message = "inner solve ended on a failed point"
                break

            violation = ev.violation
            logger.debug(
                "outer %d: f=%.10g violation=%.3e penalty=%.1e inner=%s",
                outer,
                ev.objective,
                violation,
                rho,
                inner.message,
            )
            if _better(ev, best_ev, self.feas_tol):
                best_x, best_ev = x, ev

            lam = lam + rho * ev.eq
            mu = np.maximum(mu - rho * ev.ineq, 0.0)
            if violation <= self.feas_tol:
                change = abs(ev.objective - prev_objective)
                if change <= OBJECTIVE_RTOL * max(1.0, abs(ev.objective)):
                    converged = True
                    message = "converged"
                    break
            elif violation > VIOLATION_DECREASE * prev_violation:
                rho = min(rho * PENALTY_GROWTH, MAX_PENALTY)
            prev_violation = violation
            prev_objective = ev.objective

        feasible = best_ev.violation <= self.feas_tol
        return AugLagResult(
            x=best_x,
            evaluation=best_ev,
            feasible=feasible,
            converged=converged,
            n_outer=outer,
            nfev=self.nfev,
            penalty=rho,
            message=message,
        )


def _better(candidate: NLPEvaluation, incumbent: NLPEvaluation, feas_tol: float) -> bool:
    """Feasible beats infeasible; among feasible the lower objective wins."""
    cand_ok = candidate.violation <= feas_tol
    inc_ok = incumbent.violation <= feas_tol
    if cand_ok != inc_ok:
        return cand_ok
    if cand_ok:
        return candidate.objective <= incumbent.objective
    return candidate.violation < incumbent.violation
