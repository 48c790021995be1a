"""
Exception hierarchy for eco-deflect.

Every error raised on purpose by the library derives from EcoDeflectError so
callers (and the CLI) can catch the whole family at once.
"""

from collections.abc import Sequence


class EcoDeflectError(Exception):
    """Base class for all library errors."""


class ScenarioError(EcoDeflectError):
    """
    A scenario file or Scenario value failed validation.

    Validation aggregates problems instead of stopping at the first one; the
    individual field-level messages are kept in ``errors``.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors) or "invalid scenario")


class ElementsError(EcoDeflectError):
    """Orbital elements outside the supported (elliptic) domain."""


class DegenerateStateError(EcoDeflectError):
    """State with zero angular momentum, zero radius or coincident bodies."""


class KeplerConvergenceError(EcoDeflectError):
    """Newton iteration on Kepler's equation hit its iteration cap."""


class PolarSingularityError(EcoDeflectError):
    """Spherical coordinates evaluated too close to the pole (cos phi -> 0)."""


class LaserConfigError(EcoDeflectError):
    """Invalid laser parameters or power outside the admissible range."""


class InfeasibleControlError(LaserConfigError):
    """Commanded acceleration needs more power than the laser delivers."""


class PropagationError(EcoDeflectError):
    """Numerical integration failed (step-size underflow, non-finite state)."""


class NoCrossingError(EcoDeflectError):
    """The trajectory never enters the sphere of influence within the span."""


class DegenerateFlybyError(EcoDeflectError):
    """Zero approach distance: radial plunge, the encounter plane is undefined."""


class CapturedEntryError(EcoDeflectError):
    """Earth-frame energy at SOI entry is not hyperbolic."""


class SolverError(EcoDeflectError):
    """The nonlinear program could not be set up or solved."""
