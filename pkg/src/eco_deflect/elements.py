"""
Orbital elements, Kepler propagation and state representations.

Three representations of a heliocentric (or planetocentric) state are used:

- OrbitElements: classical elements with the true anomaly as fast variable.
- CartesianState: inertial position and velocity (ecliptic frame).
- SphericalState: (r, u, v, w, Theta, phi) plus mass, the variables in which
  the thrust-perturbed equations of motion are written. u, v, w are the
  radial, tangential and normal velocity components.

Conventions for degenerate geometries follow the usual classical-element
rules: planar orbits report raan = 0 and measure argp from the x-axis,
circular orbits report argp = 0 and measure the anomaly from the node (or
from the x-axis when also planar).
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from eco_deflect.exceptions import (
    DegenerateStateError,
    ElementsError,
    KeplerConvergenceError,
    PolarSingularityError,
)

TWO_PI = 2.0 * math.pi

# Below these, eccentricity / inclination are treated as exactly zero
CIRCULAR_TOL = 1e-11
EQUATORIAL_TOL = 1e-11

KEPLER_TOL = 1e-12
KEPLER_MAX_ITER = 50

# cos(phi) below this is a polar singularity for the spherical equations
POLAR_COS_TOL = 1e-9


@dataclass(frozen=True)
class OrbitElements:
    """
    Classical orbital elements.

    Attributes:
        a: Semimajor axis (LU).
        e: Eccentricity.
        i: Inclination (rad).
        raan: Right ascension of the ascending node (rad).
        argp: Argument of periapsis (rad).
        anomaly: True anomaly (rad).
        epoch: Epoch of the anomaly (TU).
    """

    a: float
    e: float
    i: float = 0.0
    raan: float = 0.0
    argp: float = 0.0
    anomaly: float = 0.0
    epoch: float = 0.0

    def period(self, mu: float) -> float:
        """Orbital period 2*pi*sqrt(a^3/mu)."""
        return TWO_PI * math.sqrt(self.a**3 / mu)

    def mean_motion(self, mu: float) -> float:
        return math.sqrt(mu / self.a**3)

    @property
    def perihelion(self) -> float:
        return self.a * (1.0 - self.e)

    @property
    def aphelion(self) -> float:
        return self.a * (1.0 + self.e)


@dataclass(frozen=True, eq=False)
class CartesianState:
    """
    Inertial position and velocity.

    Attributes:
        position: Position vector (LU), shape (3,).
        velocity: Velocity vector (SU), shape (3,).
        epoch: Epoch (TU).
    """

    position: NDArray[np.float64]
    velocity: NDArray[np.float64]
    epoch: float = 0.0

    def __post_init__(self) -> None:
        position = np.asarray(self.position, dtype=float).reshape(3)
        velocity = np.asarray(self.velocity, dtype=float).reshape(3)
        if not (np.all(np.isfinite(position)) and np.all(np.isfinite(velocity))):
            raise DegenerateStateError("Cartesian state has non-finite components")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "velocity", velocity)

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.position))

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))

    def shifted(self, other: "CartesianState") -> "CartesianState":
        """Return this state expressed relative to ``other`` (self - other)."""
        return CartesianState(
            self.position - other.position, self.velocity - other.velocity, self.epoch
        )


@dataclass(frozen=True)
class SphericalState:
    """
    Heliocentric spherical state used by the equations of motion.

    Attributes:
        r: Radial distance (LU).
        u: Radial speed (SU).
        v: Tangential speed (SU).
        w: Normal speed (SU).
        theta: Longitude Theta in the ecliptic (rad).
        phi: Latitude above the ecliptic (rad).
        mass: Object mass (kg).
        epoch: Epoch (TU).
    """

    r: float
    u: float
    v: float
    w: float
    theta: float
    phi: float
    mass: float = 1.0
    epoch: float = 0.0

    def __post_init__(self) -> None:
        if not self.r > 0.0:
            raise DegenerateStateError(f"spherical state needs r > 0, got {self.r}")
        if not self.mass > 0.0:
            raise DegenerateStateError(f"spherical state needs mass > 0, got {self.mass}")
        if math.cos(self.phi) < POLAR_COS_TOL:
            raise PolarSingularityError(f"latitude {self.phi} rad is at the pole")

    def as_array(self) -> NDArray[np.float64]:
        """(r, u, v, w, theta, phi, mass) as a flat array."""
        return np.array([self.r, self.u, self.v, self.w, self.theta, self.phi, self.mass])

    @classmethod
    def from_array(cls, y: ArrayLike, epoch: float) -> "SphericalState":
        values = np.asarray(y, dtype=float)
        return cls(*(float(x) for x in values[:7]), epoch=epoch)


def specific_energy(position: ArrayLike, velocity: ArrayLike, mu: float) -> float:
    """Two-body specific orbital energy v^2/2 - mu/r."""
    r = float(np.linalg.norm(position))
    v = float(np.linalg.norm(velocity))
    return 0.5 * v * v - mu / r


def _check_elliptic(el: OrbitElements) -> None:
    if not el.a > 0.0:
        raise ElementsError(f"semimajor axis must be positive, got a={el.a}")
    if not 0.0 <= el.e < 1.0:
        raise ElementsError(f"only elliptic orbits are supported, got e={el.e}")


def true_to_eccentric(f: ArrayLike, e: float) -> NDArray[np.float64]:
    """Eccentric anomaly from true anomaly (elliptic), in the same revolution."""
    f = np.asarray(f, dtype=float)
    return 2.0 * np.arctan2(
        np.sqrt(1.0 - e) * np.sin(f / 2.0), np.sqrt(1.0 + e) * np.cos(f / 2.0)
    )


def eccentric_to_true(big_e: ArrayLike, e: float) -> NDArray[np.float64]:
    big_e = np.asarray(big_e, dtype=float)
    return 2.0 * np.arctan2(
        np.sqrt(1.0 + e) * np.sin(big_e / 2.0), np.sqrt(1.0 - e) * np.cos(big_e / 2.0)
    )


def solve_kepler(
    mean_anomaly: ArrayLike, e: float, tol: float = KEPLER_TOL, max_iter: int = KEPLER_MAX_ITER
) -> NDArray[np.float64]:
    """
    Solve Kepler's equation M = E - e*sin(E) by Newton iteration.

    Works elementwise on arrays. The iteration is seeded with
    E0 = M + e*sin(M).

    Args:
        mean_anomaly: Mean anomaly (rad), scalar or array.
        e: Eccentricity, 0 <= e < 1.
        tol: Required |E - e*sin(E) - M|.
        max_iter: Iteration cap.

    Returns:
        Eccentric anomaly with the same shape as the input.

    Raises:
        KeplerConvergenceError: If the residual is still above ``tol`` after
            ``max_iter`` iterations.
    """
    m = np.asarray(mean_anomaly, dtype=float)
    big_e = m + e * np.sin(m)
    for _ in range(max_iter):
        residual = big_e - e * np.sin(big_e) - m
        if np.all(np.abs(residual) < tol):
            return big_e
        big_e = big_e - residual / (1.0 - e * np.cos(big_e))
    residual = big_e - e * np.sin(big_e) - m
    if np.all(np.abs(residual) < tol):
        return big_e
    raise KeplerConvergenceError(
        f"Kepler iteration did not converge in {max_iter} steps "
        f"(e={e}, max residual {float(np.max(np.abs(residual))):.3e})"
    )


def _perifocal_to_inertial(i: float, raan: float, argp: float) -> NDArray[np.float64]:
    cr, sr = math.cos(raan), math.sin(raan)
    cw, sw = math.cos(argp), math.sin(argp)
    ci, si = math.cos(i), math.sin(i)
    return np.array(
        [
            [cr * cw - sr * sw * ci, -cr * sw - sr * cw * ci, sr * si],
            [sr * cw + cr * sw * ci, -sr * sw + cr * cw * ci, -cr * si],
            [sw * si, cw * si, ci],
        ]
    )


def elements_to_cartesian(el: OrbitElements, mu: float) -> CartesianState:
    """
    Convert classical elements to an inertial Cartesian state.

    Args:
        el: Elliptic orbital elements.
        mu: Gravitational parameter of the central body.

    Returns:
        Cartesian state at ``el.epoch``.

    Raises:
        ElementsError: For e >= 1, a <= 0 or mu <= 0.
    """
    _check_elliptic(el)
    if not mu > 0.0:
        raise ElementsError(f"gravitational parameter must be positive, got {mu}")
    p = el.a * (1.0 - el.e**2)
    cf, sf = math.cos(el.anomaly), math.sin(el.anomaly)
    r = p / (1.0 + el.e * cf)
    r_pf = np.array([r * cf, r * sf, 0.0])
    v_pf = math.sqrt(mu / p) * np.array([-sf, el.e + cf, 0.0])
    rot = _perifocal_to_inertial(el.i, el.raan, el.argp)
    return CartesianState(rot @ r_pf, rot @ v_pf, el.epoch)


def cartesian_to_elements(st: CartesianState, mu: float) -> OrbitElements:
    """
    Convert an inertial Cartesian state to classical elements.

    Args:
        st: Cartesian state.
        mu: Gravitational parameter of the central body.

    Returns:
        Orbital elements at ``st.epoch``; angles in [0, 2*pi).

    Raises:
        DegenerateStateError: If the angular momentum vanishes (rectilinear motion).
        ElementsError: If the state is not on an elliptic orbit.
    """
    r_vec, v_vec = st.position, st.velocity
    r = float(np.linalg.norm(r_vec))
    if r == 0.0:
        raise DegenerateStateError("position vector is zero")
    h_vec = np.cross(r_vec, v_vec)
    h = float(np.linalg.norm(h_vec))
    if h <= 1e-15 * r * max(float(np.linalg.norm(v_vec)), 1e-300):
        raise DegenerateStateError("zero angular momentum: rectilinear state")

    v2 = float(v_vec @ v_vec)
    alpha = 2.0 / r - v2 / mu
    if not alpha > 0.0:
        raise ElementsError(f"state is not on an elliptic orbit (2/r - v^2/mu = {alpha:.3e})")
    a = 1.0 / alpha
    e_vec = (v2 / mu - 1.0 / r) * r_vec - (r_vec @ v_vec) / mu * v_vec
    e = float(np.linalg.norm(e_vec))
    i = math.atan2(math.hypot(h_vec[0], h_vec[1]), h_vec[2])
    n_vec = np.array([-h_vec[1], h_vec[0], 0.0])
    n = float(np.linalg.norm(n_vec))
    h_hat = h_vec / h

    equatorial = i < EQUATORIAL_TOL or n < EQUATORIAL_TOL * h
    circular = e < CIRCULAR_TOL

    if equatorial:
        raan = 0.0
        node_dir = np.array([1.0, 0.0, 0.0])
    else:
        raan = math.atan2(n_vec[1], n_vec[0])
        node_dir = n_vec / n
    # in-plane reference axes: node direction and its 90 degree lead
    lead_dir = np.cross(h_hat, node_dir)

    if circular:
        e = 0.0
        argp = 0.0
        anomaly = math.atan2(float(r_vec @ lead_dir), float(r_vec @ node_dir))
    else:
        argp = math.atan2(float(e_vec @ lead_dir), float(e_vec @ node_dir))
        e_hat = e_vec / e
        anomaly = math.atan2(float(np.cross(e_hat, r_vec) @ h_hat), float(e_hat @ r_vec))

    return OrbitElements(
        a=a,
        e=e,
        i=i,
        raan=raan % TWO_PI,
        argp=argp % TWO_PI,
        anomaly=anomaly % TWO_PI,
        epoch=st.epoch,
    )


def mean_anomaly_of(el: OrbitElements) -> float:
    big_e = float(true_to_eccentric(el.anomaly, el.e))
    return big_e - el.e * math.sin(big_e)


def kepler_propagate(el: OrbitElements, dt: float, mu: float) -> OrbitElements:
    """
    Advance the true anomaly of an elliptic orbit by ``dt``.

    a, e, i, raan and argp are copied unchanged; only the anomaly and the
    epoch move.

    Args:
        el: Elliptic orbital elements at ``el.epoch``.
        dt: Time step (TU), any sign.
        mu: Gravitational parameter.

    Returns:
        Elements at ``el.epoch + dt`` with the anomaly wrapped to [0, 2*pi).

    Raises:
        KeplerConvergenceError: If Kepler's equation does not converge.
    """
    _check_elliptic(el)
    m0 = mean_anomaly_of(el)
    m1 = math.remainder(m0 + el.mean_motion(mu) * dt, TWO_PI)
    big_e = float(solve_kepler(m1, el.e))
    anomaly = float(eccentric_to_true(big_e, el.e)) % TWO_PI
    return replace(el, anomaly=anomaly, epoch=el.epoch + dt)


def kepler_positions(el: OrbitElements, times: ArrayLike, mu: float) -> NDArray[np.float64]:
    """
    Vectorised Kepler propagation returning positions at absolute epochs.

    Args:
        el: Elliptic elements at ``el.epoch``.
        times: Absolute epochs (TU), shape (n,).
        mu: Gravitational parameter.

    Returns:
        Positions, shape (n, 3).
    """
    _check_elliptic(el)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    m = np.remainder(mean_anomaly_of(el) + el.mean_motion(mu) * (t - el.epoch), TWO_PI)
    big_e = solve_kepler(m, el.e)
    f = eccentric_to_true(big_e, el.e)
    p = el.a * (1.0 - el.e**2)
    r = p / (1.0 + el.e * np.cos(f))
    r_pf = np.stack([r * np.cos(f), r * np.sin(f), np.zeros_like(r)], axis=1)
    return r_pf @ _perifocal_to_inertial(el.i, el.raan, el.argp).T


def kepler_states(
    el: OrbitElements, times: ArrayLike, mu: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Vectorised positions and velocities at absolute epochs, each shape (n, 3)."""
    _check_elliptic(el)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    m = np.remainder(mean_anomaly_of(el) + el.mean_motion(mu) * (t - el.epoch), TWO_PI)
    f = eccentric_to_true(solve_kepler(m, el.e), el.e)
    p = el.a * (1.0 - el.e**2)
    cf, sf = np.cos(f), np.sin(f)
    r = p / (1.0 + el.e * cf)
    zeros = np.zeros_like(r)
    r_pf = np.stack([r * cf, r * sf, zeros], axis=1)
    v_pf = math.sqrt(mu / p) * np.stack([-sf, el.e + cf, zeros], axis=1)
    rot_t = _perifocal_to_inertial(el.i, el.raan, el.argp).T
    return r_pf @ rot_t, v_pf @ rot_t


def rotation_matrix(theta: float, phi: float) -> NDArray[np.float64]:
    """
    Rotation taking ecliptic Cartesian velocity components to (u, v, w).

    Rows are the radial, tangential (Theta direction) and normal (phi
    direction) unit vectors expressed in the ecliptic frame.
    """
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(phi), math.sin(phi)
    return np.array(
        [
            [ct * cp, st * cp, sp],
            [-st, ct, 0.0],
            [-ct * sp, -st * sp, cp],
        ]
    )


def spherical_from_cartesian(st: CartesianState, mass: float) -> SphericalState:
    """
    Convert a Cartesian state to the spherical variables of the equations of motion.

    Args:
        st: Heliocentric Cartesian state.
        mass: Object mass (kg).

    Returns:
        Spherical state with theta in (-pi, pi].

    Raises:
        DegenerateStateError: If the position is zero.
        PolarSingularityError: If the position is (nearly) along the z-axis.
    """
    x, y, z = (float(c) for c in st.position)
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        raise DegenerateStateError("position vector is zero")
    rho = math.hypot(x, y)
    if rho / r < POLAR_COS_TOL:
        raise PolarSingularityError("position is on the ecliptic pole")
    theta = math.atan2(y, x)
    phi = math.atan2(z, rho)
    u, v, w = rotation_matrix(theta, phi) @ st.velocity
    return SphericalState(
        r=r, u=float(u), v=float(v), w=float(w), theta=theta, phi=phi, mass=mass, epoch=st.epoch
    )


def cartesian_from_spherical(sph: SphericalState) -> CartesianState:
    """Inverse of :func:`spherical_from_cartesian` (mass is dropped)."""
    cp = math.cos(sph.phi)
    position = sph.r * np.array(
        [cp * math.cos(sph.theta), cp * math.sin(sph.theta), math.sin(sph.phi)]
    )
    velocity = rotation_matrix(sph.theta, sph.phi).T @ np.array([sph.u, sph.v, sph.w])
    return CartesianState(position, velocity, sph.epoch)


def spherical_arrays_to_cartesian(
    y: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Vectorised spherical -> Cartesian conversion.

    Args:
        y: Rows or columns of (r, u, v, w, theta, phi[, mass]); shape (k, n)
            with k >= 6 state components along the first axis.

    Returns:
        Positions and velocities, each shape (n, 3).
    """
    r, u, v, w, th, ph = (np.asarray(y[k], dtype=float) for k in range(6))
    ct, st, cp, sp = np.cos(th), np.sin(th), np.cos(ph), np.sin(ph)
    pos = np.stack([r * cp * ct, r * cp * st, r * sp], axis=-1)
    vel = np.stack(
        [
            ct * cp * u - st * v - ct * sp * w,
            st * cp * u + ct * v - st * sp * w,
            sp * u + cp * w,
        ],
        axis=-1,
    )
    return pos, vel


