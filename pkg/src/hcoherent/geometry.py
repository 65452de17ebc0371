"""Classical Kepler dictionary for the coherent-state labels.

Atomic units throughout.  The labels (rho, alpha, beta, gamma, delta, theta)
fix the two vectors ``J + K`` and ``J - K`` of length ``rho`` as points on
two spheres; angular momentum and the (scaled) Runge-Lenz vector follow
as half-sum and half-difference.  ``K`` points at periapsis.

``classical_position(elements, theta)`` is plain Kepler motion with
``theta`` the mean anomaly counted from periapsis; circular orbits take the
line of nodes as periapsis.

Where on its orbit the wave packet sits is a separate question.  The state
is ``exp(-i alpha J1_z) exp(-i beta J1_y) exp(-i gamma J2_z) exp(-i delta J2_y)``
applied to the circular equatorial packet at angle ``pi + theta``, with
``J1, J2 = (L +- K)/2``.  :func:`packet_phase_point` applies the same maps
to the classical phase point, where ``K = rho(H) (p x L - r_hat)`` generates
canonical transformations between orbits of equal energy, and
:func:`mean_anomaly` reads the result off in orbital-element terms.  No
shortcut through ``K``'s direction works: near ``e = 0`` that direction
depends on how the labels approach circularity while the packet does not.

``alpha`` and ``gamma`` are never reduced modulo ``2 pi``: the state carries
``exp(-i alpha m1)`` with half-integer ``m1``, and a ``2 pi`` shift flips the
sign of every even-``n`` shell, moving the packet half way round the orbit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ActionAngleLabels",
    "OrbitalElements",
    "DegenerateOrbit",
    "InconsistentElements",
    "vectors_from_labels",
    "elements_from_labels",
    "elements_from_vectors",
    "orbit_elements",
    "labels_from_elements",
    "classical_position",
    "packet_position",
    "packet_phase_point",
    "mean_anomaly",
    "solve_kepler",
    "kepler_frequency",
    "kepler_period",
    "energy_classical",
]

TWO_PI = 2.0 * math.pi
DEGENERACY_EPS = 1e-9


class DegenerateOrbit(ValueError):
    """|J| vanishes: rectilinear orbit, inclination and node undefined."""


class InconsistentElements(ValueError):
    """|J + K| and |J - K| differ; the vectors do not describe a bound orbit."""


@dataclass(frozen=True)
class ActionAngleLabels:
    """Classical labels of a coherent state.

    ``alpha`` and ``gamma`` nominally lie in ``[0, 2 pi)`` but any real value
    is accepted and kept as given (see module docstring).
    """

    rho: float
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("rho", "alpha", "beta", "gamma", "delta", "theta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"label {name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        for name in ("beta", "delta"):
            if not 0.0 <= getattr(self, name) <= math.pi:
                raise ValueError(f"{name} must lie in [0, pi], got {getattr(self, name)}")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("rho", "alpha", "beta", "gamma", "delta", "theta")}

    def with_theta(self, theta: float) -> "ActionAngleLabels":
        return replace(self, theta=theta)


@dataclass(frozen=True)
class OrbitalElements:
    j_vec: np.ndarray
    k_vec: np.ndarray
    eccentricity: float
    inclination: float
    node_longitude: float
    periapsis_argument: float
    semi_major: float
    rho: float

    @property
    def circular(self) -> bool:
        return self.eccentricity < DEGENERACY_EPS

    @property
    def angular_momentum(self) -> float:
        return float(np.linalg.norm(self.j_vec))

    def basis(self):
        """Unit vectors (node, normal, periapsis, in-plane quadrature)."""
        return _frame(self.inclination, self.node_longitude, self.periapsis_argument)


def _frame(inclination, node, periapsis):
    n_hat = np.array([math.cos(node), math.sin(node), 0.0])
    si, ci = math.sin(inclination), math.cos(inclination)
    h_hat = np.array([si * math.sin(node), -si * math.cos(node), ci])
    p_hat = math.cos(periapsis) * n_hat + math.sin(periapsis) * np.cross(h_hat, n_hat)
    q_hat = np.cross(h_hat, p_hat)
    return n_hat, h_hat, p_hat, q_hat


def _wrap(angle: float) -> float:
    # x % 2pi can round up to 2pi itself for tiny negative x
    r = angle % TWO_PI
    return 0.0 if r >= TWO_PI else r


def _unit_sphere(polar, azimuth):
    sp = math.sin(polar)
    return np.array([sp * math.cos(azimuth), sp * math.sin(azimuth), math.cos(polar)])


def vectors_from_labels(labels: ActionAngleLabels):
    """Return ``(J + K, J - K)``, each of length ``rho``."""
    a = labels.rho * _unit_sphere(labels.beta, labels.alpha)
    b = labels.rho * _unit_sphere(labels.delta, labels.gamma)
    return a, b


def elements_from_vectors(j_vec, k_vec) -> OrbitalElements:
    """Orbital elements from angular momentum and scaled Runge-Lenz vectors.

    Circular orbits (``|K|`` below ``1e-9 rho``) get periapsis argument 0;
    equatorial ones get node longitude 0.
    """
    j_vec = np.asarray(j_vec, dtype=float)
    k_vec = np.asarray(k_vec, dtype=float)
    rho = math.sqrt(float(j_vec @ j_vec + k_vec @ k_vec))
    jn = float(np.linalg.norm(j_vec))
    kn = float(np.linalg.norm(k_vec))
    if jn < DEGENERACY_EPS * rho:
        raise DegenerateOrbit(f"|J| = {jn:.3g} for rho = {rho:.3g}: rectilinear orbit")
    h_hat = j_vec / jn
    inclination = math.atan2(math.hypot(h_hat[0], h_hat[1]), h_hat[2])
    if math.hypot(h_hat[0], h_hat[1]) < 1e-12:
        node = 0.0
    else:
        node = _wrap(math.atan2(h_hat[0], -h_hat[1]))  # z_hat x J
    n_hat = np.array([math.cos(node), math.sin(node), 0.0])
    m_hat = np.cross(h_hat, n_hat)
    if kn < DEGENERACY_EPS * rho:
        periapsis = 0.0
    else:
        periapsis = _wrap(math.atan2(float(k_vec @ m_hat), float(k_vec @ n_hat)))
    ecc = kn / rho
    j_vec = j_vec.copy()
    k_vec = k_vec.copy()
    j_vec.setflags(write=False)
    k_vec.setflags(write=False)
    return OrbitalElements(
        j_vec=j_vec,
        k_vec=k_vec,
        eccentricity=ecc,
        inclination=inclination,
        node_longitude=node,
        periapsis_argument=periapsis,
        semi_major=rho * rho,
        rho=rho,
    )


def _y_rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _z_rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _label_j_k(labels: ActionAngleLabels):
    # (a + b) / 2 and (a - b) / 2 written out in half-angles, so nearly
    # circular or nearly radial orbits keep full relative precision
    hd, hs = 0.5 * (labels.beta - labels.delta), 0.5 * (labels.beta + labels.delta)
    ha, hg = 0.5 * (labels.alpha - labels.gamma), 0.5 * (labels.alpha + labels.gamma)
    cd, sd, cs, ss = math.cos(hd), math.sin(hd), math.cos(hs), math.sin(hs)
    ca, sa = math.cos(ha), math.sin(ha)
    rot = _z_rotation(hg)
    j_vec = labels.rho * (rot @ np.array([cd * ca * ss, sa * sd * cs, cd * cs]))
    k_vec = labels.rho * (rot @ np.array([sd * ca * cs, sa * cd * ss, -sd * ss]))
    return j_vec, k_vec


def elements_from_labels(labels: ActionAngleLabels) -> OrbitalElements:
    return elements_from_vectors(*_label_j_k(labels))


def orbit_elements(rho, eccentricity, inclination=0.0, node_longitude=0.0, periapsis_argument=0.0) -> OrbitalElements:
    """Build elements from classical orbit parameters.

    With ``eccentricity == 0`` the periapsis argument is dropped (see
    :func:`elements_from_vectors`).
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if not 0.0 <= eccentricity < 1.0:
        raise ValueError("bound orbits need 0 <= e < 1")
    _, h_hat, p_hat, _ = _frame(inclination, node_longitude, periapsis_argument)
    j_vec = rho * math.sqrt(1.0 - eccentricity**2) * h_hat
    k_vec = rho * eccentricity * p_hat
    return elements_from_vectors(j_vec, k_vec)


def _spherical_angles(v):
    horiz = math.hypot(v[0], v[1])
    polar = math.atan2(horiz, v[2])
    azimuth = _wrap(math.atan2(v[1], v[0])) if horiz > 1e-15 * np.linalg.norm(v) else 0.0
    return polar, azimuth


def labels_from_elements(elements: OrbitalElements, theta: float = 0.0) -> ActionAngleLabels:
    a = elements.j_vec + elements.k_vec
    b = elements.j_vec - elements.k_vec
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if abs(na - nb) > 1e-8 * max(na, nb):
        raise InconsistentElements(f"|J+K| = {na!r} but |J-K| = {nb!r}")
    beta, alpha = _spherical_angles(a)
    delta, gamma = _spherical_angles(b)
    return ActionAngleLabels(rho=0.5 * (na + nb), alpha=alpha, beta=beta, gamma=gamma, delta=delta, theta=theta)


def solve_kepler(mean_anomaly, eccentricity: float, tol: float = 1e-13, max_iter: int = 64):
    """Eccentric anomaly from ``E - e sin E = M``.

    Newton iteration kept inside the bracket ``[M - e, M + e]`` (bisection
    when a step would leave it).  ``M`` is reduced to ``[-pi, pi]`` first.
    """
    m = np.asarray(mean_anomaly, dtype=float)
    m = np.remainder(m + math.pi, TWO_PI) - math.pi
    e = float(eccentricity)
    lo, hi = m - e, m + e
    ecc_anom = m + e * np.sin(m)
    for _ in range(max_iter):
        f = ecc_anom - e * np.sin(ecc_anom) - m
        lo = np.where(f < 0, ecc_anom, lo)
        hi = np.where(f > 0, ecc_anom, hi)
        step = f / (1.0 - e * np.cos(ecc_anom))
        trial = ecc_anom - step
        outside = (trial <= lo) | (trial >= hi)
        trial = np.where(outside, 0.5 * (lo + hi), trial)
        done = np.abs(trial - ecc_anom) <= tol * (1.0 + np.abs(trial))
        ecc_anom = trial
        if np.all(done):
            return ecc_anom if ecc_anom.ndim else float(ecc_anom)
    raise ArithmeticError("Kepler equation did not converge")


def classical_position(elements: OrbitalElements, theta):
    """Position (Bohr radii) at mean anomaly ``theta``; shape ``theta.shape + (3,)``."""
    _, _, p_hat, q_hat = elements.basis()
    e = elements.eccentricity
    a = elements.semi_major
    ecc_anom = np.asarray(solve_kepler(theta, e))
    x = a * (np.cos(ecc_anom) - e)
    y = a * math.sqrt(1.0 - e * e) * np.sin(ecc_anom)
    return x[..., None] * p_hat + y[..., None] * q_hat


def _kepler_phase_point(j_vec, k_vec, rho, mean_anom):
    """Position and momentum at mean anomaly ``mean_anom`` counted from ``K``."""
    e = float(np.linalg.norm(k_vec)) / rho
    h_hat = j_vec / np.linalg.norm(j_vec)
    p_hat = k_vec - (k_vec @ h_hat) * h_hat
    p_hat /= np.linalg.norm(p_hat)
    q_hat = np.cross(h_hat, p_hat)
    ecc_anom = solve_kepler(mean_anom, e)
    ce, se = math.cos(ecc_anom), math.sin(ecc_anom)
    root = math.sqrt(1.0 - e * e)
    r = rho * rho * ((ce - e) * p_hat + root * se * q_hat)
    p = (-se * p_hat + root * ce * q_hat) / (rho * (1.0 - e * ce))
    return r, p


def packet_phase_point(labels: ActionAngleLabels):
    """Classical ``(position, momentum)`` the labelled packet is centred on.

    The four orientation rotations regroup as rotations (generated by
    ``L``) and Runge-Lenz transformations (generated by ``K``) with angles
    ``(alpha +- gamma) / 2`` and ``(beta +- delta) / 2``.  Rotations carry the
    mean anomaly along unchanged.  A ``K_y`` transformation of the circular
    equatorial orbit leaves it fixed relative to the new periapsis; the
    subsequent ``K_z`` transformation shifts it by a closed-form angle (the
    integral of ``rho K_z / |K|^2`` along the path).  The result lies on the
    orbit of :func:`elements_from_labels`.
    """
    rho = labels.rho
    phi = math.pi + labels.theta
    half_diff = 0.5 * (labels.beta - labels.delta)  # in [-pi/2, pi/2]
    half_sum = 0.5 * (labels.beta + labels.delta)
    # the K_z transformation has period 2 pi, the rotation about z does not matter
    kz_angle = math.remainder(0.5 * (labels.alpha - labels.gamma), TWO_PI)
    lz_angle = 0.5 * (labels.alpha + labels.gamma)
    j_vec, k_vec = _label_j_k(labels)
    s_diff, s_sum = math.sin(half_diff), math.sin(half_sum)
    if half_diff != 0.0 and float(np.linalg.norm(k_vec)) > 0.0:
        mean_anom = phi if half_diff > 0 else phi - math.pi
        mean_anom -= math.copysign(1.0, half_diff) * math.atan2(s_sum * math.sin(kz_angle), abs(s_diff) * math.cos(kz_angle))
    else:
        # circular until the K_z step, which puts periapsis along +-y
        u = _y_rotation(half_sum) @ np.array([math.cos(phi), math.sin(phi), 0.0])
        kick = s_sum * math.sin(kz_angle)
        if kick == 0.0 or float(np.linalg.norm(k_vec)) < DEGENERACY_EPS * rho:
            rot = _z_rotation(lz_angle)
            h_hat = j_vec / np.linalg.norm(j_vec)
            return rho * rho * (rot @ u), np.cross(h_hat, rot @ u) / rho
        h_hat = _y_rotation(half_sum) @ np.array([0.0, 0.0, 1.0])
        p_hat = np.array([0.0, math.copysign(1.0, kick), 0.0])
        mean_anom = math.atan2(float(u @ np.cross(h_hat, p_hat)), float(u @ p_hat))
    return _kepler_phase_point(j_vec, k_vec, rho, mean_anom)


def _mean_anomaly_of(elements: OrbitalElements, r, p) -> float:
    if elements.circular:
        _, _, p_hat, q_hat = elements.basis()
        return math.atan2(float(r @ q_hat), float(r @ p_hat))
    a, e = elements.semi_major, elements.eccentricity
    ecc_anom = math.atan2(float(r @ p) / math.sqrt(a), 1.0 - math.sqrt(float(r @ r)) / a)
    return ecc_anom - e * math.sin(ecc_anom)


def mean_anomaly(labels: ActionAngleLabels) -> float:
    """Mean anomaly, on ``elements_from_labels(labels)``, of the packet's centre."""
    r, p = packet_phase_point(labels)
    return _mean_anomaly_of(elements_from_labels(labels), r, p)


def packet_position(labels: ActionAngleLabels):
    """Classical position (Bohr radii) the labelled packet is centred on."""
    return packet_phase_point(labels)[0]


def kepler_frequency(rho: float) -> float:
    """Angular frequency of the orbit, ``rho**-3``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    return rho**-3.0


def kepler_period(rho: float) -> float:
    return TWO_PI / kepler_frequency(rho)


def energy_classical(rho: float) -> float:
    """Kepler energy ``-1 / (2 rho^2)`` (Hartree)."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    return -0.5 / (rho * rho)
