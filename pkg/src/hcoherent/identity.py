"""Resolution of the identity on the bound states, checked factor by factor.

The phase-space measure ``dR dtheta d(J1_z) dalpha d(J2_z) dgamma`` (with
``J_z = (j + 1/2) cos``) splits the projector integral into three parts:

* the ``theta`` average, which removes every cross term between different
  shells (a limit over ever longer averaging windows, witnessed numerically
  by :func:`theta_average_crossterm`);
* two SU(2) identities, one per spin, after the ``alpha`` and ``gamma``
  integrals remove the off-diagonal magnetic terms;
* the radial weight, ``int_0^inf |C_j(R)|^2 dR = 1``.

:func:`subspace_identity` assembles the operator in the coupled ``|n, l, m>``
basis from those factors.  :func:`brute_force_identity` does the four angular
integrals by quadrature instead and serves as a cross-check for small shells.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .specfun import (
    HalfInteger,
    HalfIntegerLike,
    exact_nodes,
    gauss_laguerre,
    gauss_legendre,
    ln_factorial,
    wigner_d_top_row,
)
from .state import ResourceLimit, shell_coupling
from .su2 import su2_identity_check

__all__ = [
    "PrecisionWarning",
    "QuadratureReport",
    "radial_weight_integral",
    "theta_average_crossterm",
    "sinc_average",
    "subspace_identity",
    "brute_force_identity",
    "MAX_IDENTITY_N",
]

MAX_IDENTITY_N = 30
_PANEL_NODES = 16


class PrecisionWarning(UserWarning):
    """A quadrature rule is below the order that makes it exact."""


@dataclass(frozen=True)
class QuadratureReport:
    target_description: str
    max_abs_deviation: float
    node_counts: dict
    analytic_cancellations_used: dict
    precision_warning: bool = False
    shell_deviations: tuple = field(default=())
    # per-shell operator blocks in the coupled basis; not serialized
    blocks: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not self.max_abs_deviation >= 0:
            raise ValueError("deviation must be non-negative")

    def to_dict(self) -> dict:
        return {
            "target": self.target_description,
            "max_abs_deviation": self.max_abs_deviation,
            "node_counts": dict(self.node_counts),
            "analytic_cancellations_used": dict(self.analytic_cancellations_used),
            "precision_warning": self.precision_warning,
            "shell_deviations": list(self.shell_deviations),
        }


def _warn(message: str) -> None:
    warnings.warn(message, PrecisionWarning, stacklevel=3)


def radial_weight_integral(j: HalfIntegerLike, n_nodes: int | None = None) -> float:
    """Gauss-Laguerre value of ``int_0^inf e^{-x} x^{2j} / (2j)! dx`` (exactly 1)."""
    tj = HalfInteger.of(j).twice
    if tj < 0:
        raise ValueError("j must be non-negative")
    if n_nodes is None:
        n_nodes = tj + 2
    if n_nodes < exact_nodes(tj):
        _warn(f"{n_nodes} Laguerre nodes do not integrate x^{tj} exactly")
    x, w = gauss_laguerre(n_nodes)
    if tj == 0:
        return math.fsum(w)
    terms = w * np.exp(tj * np.log(x) - ln_factorial(tj))
    return math.fsum(terms)


def sinc_average(n: int, n_prime: int, cap: int, rho: float = 5.0) -> float:
    """Closed form of :func:`theta_average_crossterm`: ``sin(N pi D) / (N pi D)``."""
    d = _frequency_gap(n, n_prime, rho)
    x = cap * math.pi * d
    return math.sin(x) / x


def _frequency_gap(n, n_prime, rho):
    if n < 1 or n_prime < 1:
        raise ValueError("principal numbers start at 1")
    if n == n_prime:
        raise ValueError("diagonal term: the average is 1 by construction")
    return rho**3 * (0.5 / n**2 - 0.5 / n_prime**2)


def theta_average_crossterm(n: int, n_prime: int, cap: int, rho: float = 5.0) -> complex:
    """Average of ``exp(i theta D)`` over ``theta in [-N pi, N pi]``.

    ``D = rho^3 (1/(2 n^2) - 1/(2 n'^2))`` is the phase rate between the two
    shells and ``N = cap``.  Integrated numerically with composite
    Gauss-Legendre, each panel no longer than ``pi`` or half an oscillation.
    """
    if cap < 1:
        raise ValueError("cap must be a positive number of half-periods")
    d = _frequency_gap(n, n_prime, rho)
    half = cap * math.pi
    panel = min(math.pi, math.pi / abs(d))
    n_panels = int(math.ceil(2.0 * half / panel))
    edges = np.linspace(-half, half, n_panels + 1)
    x, w = gauss_legendre(_PANEL_NODES)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    rad = 0.5 * (edges[1:] - edges[:-1])[:, None]
    theta = mid + rad * x
    vals = (rad * w) * np.exp(1j * d * theta)
    total = complex(math.fsum(vals.real.ravel()), math.fsum(vals.imag.ravel()))
    return total / (2.0 * half)


def _check_nmax(n_max: int) -> None:
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if n_max > MAX_IDENTITY_N:
        raise ResourceLimit(f"n_max={n_max} exceeds {MAX_IDENTITY_N}")


def _shell_operator(twice_j: int, product_diag: np.ndarray) -> np.ndarray:
    """Coupled-basis matrix of an operator diagonal in ``(m1, m2)``."""
    _, mat = shell_coupling(twice_j)
    dense = mat.toarray()
    return (dense * product_diag.ravel()) @ dense.T


def subspace_identity(
    n_max: int,
    nodes_beta: int | None = None,
    nodes_delta: int | None = None,
    measure_shift: float = 0.5,
    radial_nodes: int | None = None,
) -> QuadratureReport:
    """Assemble the projector integral over all shells ``n <= n_max``.

    Cross-shell blocks vanish by the theta average and are not formed; the
    reported deviation is the largest entry of ``M - I`` over the diagonal
    blocks.  ``None`` node counts pick ``2j + 2`` for the largest shell.
    """
    _check_nmax(n_max)
    tj_max = n_max - 1
    nodes_beta = tj_max + 2 if nodes_beta is None else nodes_beta
    nodes_delta = tj_max + 2 if nodes_delta is None else nodes_delta
    radial_nodes = tj_max + 2 if radial_nodes is None else radial_nodes
    low = min(nodes_beta, nodes_delta, radial_nodes) < exact_nodes(tj_max)
    if low:
        _warn(f"quadrature below exact degree for n_max={n_max}")
    worst = 0.0
    per_shell = []
    blocks = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PrecisionWarning)
        for tj in range(n_max):
            d1 = np.diag(su2_identity_check(HalfInteger(tj), nodes_beta, measure_shift).matrix)
            d2 = np.diag(su2_identity_check(HalfInteger(tj), nodes_delta, measure_shift).matrix)
            radial = radial_weight_integral(HalfInteger(tj), radial_nodes)
            op = _shell_operator(tj, radial * np.outer(d1, d2))
            dev = float(np.max(np.abs(op - np.eye(len(op)))))
            per_shell.append(dev)
            blocks.append(op)
            worst = max(worst, dev)
    return QuadratureReport(
        target_description=f"bound subspace n <= {n_max}, factorized",
        max_abs_deviation=worst,
        node_counts={"beta": nodes_beta, "delta": nodes_delta, "radial": radial_nodes},
        analytic_cancellations_used={"theta": True, "alpha": True, "gamma": True},
        precision_warning=low,
        shell_deviations=tuple(per_shell),
        blocks=tuple(blocks),
    )


def brute_force_identity(
    n_max: int,
    nodes_beta: int | None = None,
    nodes_delta: int | None = None,
    nodes_alpha: int | None = None,
    nodes_gamma: int | None = None,
    measure_shift: float = 0.5,
    radial_nodes: int | None = None,
) -> QuadratureReport:
    """Projector integral with all four orientation angles done by quadrature.

    ``alpha`` and ``gamma`` use uniform grids on ``[0, 2pi)`` (exact for the
    integer magnetic differences once the grid has more than ``2j`` points),
    ``cos(beta)`` and ``cos(delta)`` Gauss-Legendre.  Only the theta average
    is still taken analytically.  Intended for ``n_max <= 3``.
    """
    _check_nmax(n_max)
    tj_max = n_max - 1
    nb = tj_max + 2 if nodes_beta is None else nodes_beta
    nd = tj_max + 2 if nodes_delta is None else nodes_delta
    na = tj_max + 2 if nodes_alpha is None else nodes_alpha
    ng = tj_max + 2 if nodes_gamma is None else nodes_gamma
    nr = tj_max + 2 if radial_nodes is None else radial_nodes
    low = min(nb, nd, nr) < exact_nodes(tj_max) or min(na, ng) <= tj_max
    if low:
        _warn(f"quadrature below exact degree for n_max={n_max}")
    xb, wb = gauss_legendre(nb)
    xd, wd = gauss_legendre(nd)
    alphas = 2.0 * math.pi * np.arange(na) / na
    gammas = 2.0 * math.pi * np.arange(ng) / ng
    worst = 0.0
    per_shell = []
    blocks = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PrecisionWarning)
        for tj in range(n_max):
            ms = np.arange(-tj, tj + 1, 2) / 2
            spin = (0.5 * tj + measure_shift) ** 2
            radial = radial_weight_integral(HalfInteger(tj), nr)
            rows_b = wigner_d_top_row(tj, np.arccos(xb))  # (nb, dim)
            rows_d = wigner_d_top_row(tj, np.arccos(xd))
            first = (rows_b[:, None, :] * np.exp(-1j * np.outer(alphas, ms))[None, :, :]).reshape(-1, tj + 1)
            second = (rows_d[:, None, :] * np.exp(-1j * np.outer(gammas, ms))[None, :, :]).reshape(-1, tj + 1)
            w1 = np.repeat(wb, na) / na
            w2 = np.repeat(wd, ng) / ng
            prod = (first[:, None, :, None] * second[None, :, None, :]).reshape(len(w1) * len(w2), -1)
            weights = spin * radial * np.outer(w1, w2).ravel()
            _, mat = shell_coupling(tj)
            vecs = mat.toarray() @ prod.T  # (dim^2, points)
            op = (vecs * weights) @ vecs.conj().T
            dev = float(np.max(np.abs(op - np.eye(len(op)))))
            per_shell.append(dev)
            blocks.append(op)
            worst = max(worst, dev)
    return QuadratureReport(
        target_description=f"bound subspace n <= {n_max}, four-angle quadrature",
        max_abs_deviation=worst,
        node_counts={"beta": nb, "delta": nd, "alpha": na, "gamma": ng, "radial": nr},
        analytic_cancellations_used={"theta": True, "alpha": False, "gamma": False},
        precision_warning=low,
        shell_deviations=tuple(per_shell),
        blocks=tuple(blocks),
    )
