"""Coherent states of a spin precessing about a z-directed field.

The phase-space point is (J_z, theta) with ``cos(omega) = J_z / J`` and the
classical spin ``J = (j + 1/2)`` in units of hbar.  The state is the rotation
``exp(-i theta J_z) exp(-i omega J_y) |j j>``, i.e. amplitudes
``d^j_{jm}(omega) exp(-i m theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .specfun import HalfInteger, HalfIntegerLike, exact_nodes, gauss_legendre, wigner_d_top_row

__all__ = [
    "SpinLabels",
    "SpinState",
    "SU2IdentityResult",
    "su2_build",
    "su2_evolve",
    "su2_propagate",
    "su2_identity_check",
]


@dataclass(frozen=True)
class SpinLabels:
    j: HalfInteger
    omega: float
    theta: float = 0.0
    precession_rate: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "j", HalfInteger.of(self.j))
        if self.j.twice < 0:
            raise ValueError("spin j must be non-negative")
        if not 0.0 <= self.omega <= math.pi:
            raise ValueError(f"omega must lie in [0, pi], got {self.omega}")

    @property
    def action(self) -> float:
        """Classical ``J_z = (j + 1/2) cos(omega)`` in units of hbar."""
        return (self.j.value + 0.5) * math.cos(self.omega)


@dataclass(frozen=True)
class SpinState:
    j: HalfInteger
    amplitudes: np.ndarray  # ascending m = -j .. j

    @property
    def ms(self) -> np.ndarray:
        return np.arange(-self.j.twice, self.j.twice + 1, 2) / 2

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def su2_build(labels: SpinLabels) -> SpinState:
    ms = np.arange(-labels.j.twice, labels.j.twice + 1, 2) / 2
    amps = wigner_d_top_row(labels.j.twice, labels.omega) * np.exp(-1j * ms * labels.theta)
    amps.setflags(write=False)
    return SpinState(labels.j, amps)


def su2_evolve(labels: SpinLabels, t: float) -> SpinLabels:
    """Classical precession: ``theta -> theta + rate * t``."""
    return replace(labels, theta=labels.theta + labels.precession_rate * t)


def su2_propagate(state: SpinState, precession_rate: float, t: float) -> SpinState:
    """Apply ``exp(-i rate J_z t)`` to the amplitudes."""
    ms = state.ms
    amps = state.amplitudes * np.exp(-1j * precession_rate * ms * t)
    amps.setflags(write=False)
    return SpinState(state.j, amps)


@dataclass(frozen=True)
class SU2IdentityResult:
    j: HalfInteger
    matrix: np.ndarray
    n_nodes: int
    exact_degree: bool

    @property
    def precision_warning(self) -> bool:
        return not self.exact_degree

    @property
    def deviation(self) -> float:
        return float(np.max(np.abs(self.matrix - np.eye(len(self.matrix)))))


def su2_identity_check(j: HalfIntegerLike, n_nodes: int | None = None, measure_shift: float = 0.5) -> SU2IdentityResult:
    """Integrate ``|J_z, theta><J_z, theta|`` over the phase-space measure.

    ``(1/h) int dJ_z dtheta`` with ``J_z = (j + measure_shift) cos(omega)``.
    The theta integral is done analytically (it removes every ``m != m'``
    term), the ``cos(omega)`` integral by Gauss-Legendre.  With the
    default shift 1/2 the result is the identity.  The integrand is a
    polynomial of degree 2j in ``cos(omega)``; ``exact_degree`` records
    whether ``n_nodes`` integrates it exactly.
    """
    j = HalfInteger.of(j)
    if n_nodes is None:
        n_nodes = j.twice + 2
    x, w = gauss_legendre(n_nodes)
    rows = wigner_d_top_row(j.twice, np.arccos(x))  # (nodes, 2j+1)
    diag = (j.value + measure_shift) * (w @ rows**2)
    return SU2IdentityResult(j, np.diag(diag), n_nodes, n_nodes >= exact_nodes(j.twice))
