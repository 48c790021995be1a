"""
Decision layout and bounds of the direct-shooting transcription.

The operation window [t_i, t_i + t_op] is split into N equal intervals. The
decision vector holds the SOI entry epoch, the window length and the control
nodes; the constant-power regime pins the acceleration to a_max and leaves
only the angles free.
"""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from eco_deflect.dynamics import ControlHistory

Regime = Literal["constant", "variable", "bounded"]
REGIMES: tuple[Regime, ...] = ("constant", "variable", "bounded")


@dataclass(frozen=True)
class BoundedProfile:
    """
    Lower bound on the acceleration as a fraction of a_max over the window.

    A constant fraction c, or a linear ramp from ``frac_start`` at the window
    start to ``frac_end`` at its end.
    """

    kind: Literal["const", "ramp"]
    frac_start: float
    frac_end: float

    def __post_init__(self) -> None:
        if self.kind not in ("const", "ramp"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        for frac in (self.frac_start, self.frac_end):
            if not 0.0 <= frac <= 1.0:
                raise ValueError(f"profile fractions must lie in [0, 1], got {frac}")
        if self.kind == "const" and self.frac_start != self.frac_end:
            raise ValueError("a constant profile has a single fraction")

    @classmethod
    def constant(cls, fraction: float) -> "BoundedProfile":
        return cls("const", fraction, fraction)

    @classmethod
    def ramp(cls, frac_start: float, frac_end: float) -> "BoundedProfile":
        return cls("ramp", frac_start, frac_end)

    @classmethod
    def parse(cls, text: str) -> "BoundedProfile":
        """Parse ``const:C`` or ``ramp:START:END``."""
        parts = text.strip().split(":")
        try:
            values = [float(p) for p in parts[1:]]
        except ValueError as err:
            raise ValueError(f"invalid profile {text!r}") from err
        if parts[0] == "const" and len(values) == 1:
            return cls.constant(values[0])
        if parts[0] == "ramp" and len(values) == 2:
            return cls.ramp(values[0], values[1])
        raise ValueError(f"invalid profile {text!r}, expected const:C or ramp:START:END")

    @property
    def label(self) -> str:
        if self.kind == "const":
            return f"const:{self.frac_start:g}"
        return f"ramp:{self.frac_start:g}:{self.frac_end:g}"

    def lower_bounds(self, n_intervals: int) -> NDArray[np.float64]:
        """Per-node lower bounds (fractions of a_max) on an N-interval mesh."""
        return np.linspace(self.frac_start, self.frac_end, n_intervals + 1)


@dataclass(frozen=True, eq=False)
class TranscriptionSpec:
    """
    Mesh, regime and bounds of one NLP.

    Attributes:
        n_intervals: N, the number of mesh intervals.
        regime: "constant", "variable" or "bounded".
        start_time: t_i in ECO periods.
        lower: Per-node lower bounds on a_l / a_max.
        upper: Per-node upper bounds on a_l / a_max.
        profile: Lower-bound profile for the bounded regime.
    """

    n_intervals: int
    regime: Regime
    start_time: float
    lower: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    upper: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    profile: BoundedProfile | None = None

    def __post_init__(self) -> None:
        n = self.n_intervals
        if n < 2:
            raise ValueError(f"need at least 2 mesh intervals, got {n}")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime == "bounded" and self.profile is None:
            raise ValueError("the bounded regime needs a profile")
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.size == 0:
            if self.regime == "constant":
                lower = np.ones(n + 1)
            elif self.profile is not None:
                lower = self.profile.lower_bounds(n)
            else:
                lower = np.zeros(n + 1)
        if upper.size == 0:
            upper = np.ones(n + 1)
        if lower.shape != (n + 1,) or upper.shape != (n + 1,):
            raise ValueError("bounds must have one entry per control node")
        if np.any(lower < 0.0) or np.any(upper > 1.0) or np.any(lower > upper):
            raise ValueError("bounds must satisfy 0 <= lower <= upper <= 1")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n_nodes(self) -> int:
        return self.n_intervals + 1

    @property
    def free_accel(self) -> bool:
        return self.regime != "constant"

    @property
    def size(self) -> int:
        """Length of the decision vector."""
        return 2 + (2 if self.free_accel else 1) * self.n_nodes

    @property
    def accel_slice(self) -> slice:
        return slice(2, 2 + self.n_nodes) if self.free_accel else slice(2, 2)

    @property
    def sigma_slice(self) -> slice:
        start = self.accel_slice.stop
        return slice(start, start + self.n_nodes)


@dataclass(frozen=True, eq=False)
class Decision:
    """
    Decision variables in physical units.

    Attributes:
        t_soi: SOI entry epoch (TU).
        t_op: Window length (TU).
        accel_frac: Node accelerations as fractions of a_max, shape (N+1,).
        sigma: Node in-plane angles (rad), shape (N+1,).
    """

    t_soi: float
    t_op: float
    accel_frac: NDArray[np.float64]
    sigma: NDArray[np.float64]

    def node_times(self, t_start: float) -> NDArray[np.float64]:
        return t_start + self.t_op * np.linspace(0.0, 1.0, self.sigma.size)

    def control(self, t_start: float, a_max: float) -> ControlHistory:
        """Control history on the window starting at ``t_start``."""
        times = self.node_times(t_start)
        return ControlHistory(
            times=times,
            accel=a_max * np.asarray(self.accel_frac, dtype=float),
            sigma=np.asarray(self.sigma, dtype=float),
            beta=np.zeros_like(times),
        )


def trapezoid_weights(n_nodes: int) -> NDArray[np.float64]:
    """Weights w with sum(h * w * x) the trapezoid rule on a uniform mesh."""
    w = np.ones(n_nodes)
    w[0] = w[-1] = 0.5
    return w


def objective(ctrl: ControlHistory) -> float:
    """
    Trapezoidal integral of |a_l| over the control mesh.

    sum_k h_k/2 * (|a_k| + |a_{k+1}|); in canonical units this is the
    delta-v delivered by the thrust (SU).
    """
    if ctrl.is_empty:
        return 0.0
    h = np.diff(ctrl.times)
    a = np.abs(ctrl.accel)
    return float(np.sum(0.5 * h * (a[:-1] + a[1:])))
