"""
Solver configuration.

SolverOptions collects the knobs of the transcription and the NLP solver.
Callers usually build it from a mapping of overrides (CLI flags, test
parameters); missing entries fall back to the module defaults below.
"""

import os
from collections.abc import Mapping
from dataclasses import dataclass, fields
from typing import Any, Literal

DEFAULT_NODES = 60
DEFAULT_RESTARTS = 8
DEFAULT_FEAS_TOL = 1e-7
DEFAULT_OPT_TOL = 1e-9
DEFAULT_MAX_OUTER = 40
DEFAULT_INNER_MAXITER = 500
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_FD_STEP = 1e-5
DEFAULT_IDLE_FRACTION = 1e-3

WORKERS_ENV = "ECO_DEFLECT_WORKERS"

GradientMode = Literal["sensitivity", "central"]


def default_workers() -> int:
    """Worker count for sweeps from ECO_DEFLECT_WORKERS, 1 when unset or invalid."""
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(int(raw), 1)
    except ValueError:
        return 1


@dataclass(frozen=True)
class SolverOptions:
    """
    Transcription and solver settings.

    Attributes:
        nodes: Number of mesh intervals N (N + 1 control nodes).
        restarts: Number of initial guesses tried per solve.
        feas_tol: Max normalised constraint violation accepted as feasible.
        opt_tol: Projected-gradient tolerance of the final inner solve.
        max_outer: Augmented-Lagrangian outer iteration cap.
        inner_maxiter: L-BFGS-B iteration cap per outer iteration.
        rtol: Relative tolerance of the shooting integration.
        atol: Absolute tolerance of the shooting integration.
        gradient: "sensitivity" (variational equations) or "central" differences.
        fd_step: Step in scaled decision variables for central differences.
        idle_fraction: Fraction of a_max below which a node counts as idle.
        workers: Parallel workers for sweeps.
        seed: Seed for the restart jitter; fixes the restart sequence.
        warm_start: Seed sweep points from the previous grid point's solution.
    """

    nodes: int = DEFAULT_NODES
    restarts: int = DEFAULT_RESTARTS
    feas_tol: float = DEFAULT_FEAS_TOL
    opt_tol: float = DEFAULT_OPT_TOL
    max_outer: int = DEFAULT_MAX_OUTER
    inner_maxiter: int = DEFAULT_INNER_MAXITER
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    gradient: GradientMode = "sensitivity"
    fd_step: float = DEFAULT_FD_STEP
    idle_fraction: float = DEFAULT_IDLE_FRACTION
    workers: int = 1
    seed: int = 0
    warm_start: bool = True

    def __post_init__(self) -> None:
        if self.nodes < 2:
            raise ValueError(f"nodes must be at least 2, got {self.nodes}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be at least 1, got {self.restarts}")
        if self.gradient not in ("sensitivity", "central"):
            raise ValueError(f"unknown gradient mode {self.gradient!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    @classmethod
    def from_mapping(cls, overrides: Mapping[str, Any] | None = None) -> "SolverOptions":
        """
        Build options from a mapping, ignoring None values.

        Keys that are not option names raise ValueError. ``workers`` falls
        back to the ECO_DEFLECT_WORKERS environment variable.
        """
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        names = {f.name for f in fields(cls)}
        unknown = set(overrides) - names
        if unknown:
            raise ValueError(f"unknown solver options: {', '.join(sorted(unknown))}")
        overrides.setdefault("workers", default_workers())
        return cls(**overrides)
