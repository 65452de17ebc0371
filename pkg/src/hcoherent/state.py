"""Hydrogen coherent states as truncated amplitude vectors over |n, l, m>.

For each principal number ``n = 2j + 1`` the state is a product of two
spin-j coherent states, one for ``(J + K)/2`` rotated by (alpha, beta) and
one for ``(J - K)/2`` rotated by (gamma, delta), weighted by the radial
factor ``C_j(rho) = exp(-rho/2) rho^j / sqrt((2j)!)`` and the dynamical
phase ``exp(i theta rho^3 / (2 n^2))``.  The product basis is mapped to
``|n, l, m>`` with Clebsch-Gordan blocks.

``|C_j|^2`` is a Poisson law of mean ``rho`` in ``k = n - 1``; the state is
truncated to the smallest window around the mode whose Poisson tail falls
below ``epsilon``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.special import gammainc, gammaincc

from .geometry import ActionAngleLabels, kepler_frequency
from .specfun import (
    HalfInteger,
    HalfIntegerLike,
    QuantumNumberError,
    coupling_block,
    ln_factorial,
    wigner_d_row_log,
)

__all__ = [
    "BasisIndex",
    "CoherentState",
    "ResourceLimit",
    "DEFAULT_EPSILON",
    "AMPLITUDE_FLOOR",
    "poisson_window",
    "truncation_window",
    "radial_log_weight",
    "uncoupled_amplitude",
    "uncoupled_block",
    "build_state",
    "evolve_labels",
    "evolve_quantum",
    "rotate_z",
    "inner_product",
    "distance",
    "fidelity",
    "shell_coupling",
    "m1_marginal",
]

DEFAULT_EPSILON = 1e-10
AMPLITUDE_FLOOR = 1e-16
DEFAULT_N_MAX = 512


class ResourceLimit(RuntimeError):
    """The requested state needs more principal shells than allowed."""


class BasisIndex(NamedTuple):
    n: int
    l: int
    m: int


def _encode(keys: np.ndarray) -> np.ndarray:
    keys = keys.astype(np.int64)
    return (keys[:, 0] * 1024 + keys[:, 1]) * 2048 + (keys[:, 2] + 1024)


@dataclass(frozen=True)
class CoherentState:
    """Sparse amplitudes; ``keys[i] = (n, l, m)`` sorted, ``values[i]`` complex."""

    keys: np.ndarray
    values: np.ndarray
    n_lo: int
    n_hi: int
    tail_bound: float
    labels: ActionAngleLabels
    epsilon: float

    def __post_init__(self):
        for arr in (self.keys, self.values):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def amplitudes(self) -> dict:
        return {BasisIndex(*map(int, k)): complex(v) for k, v in zip(self.keys, self.values)}

    def amplitude(self, n: int, l: int, m: int) -> complex:
        code = _encode(np.array([[n, l, m]]))[0]
        codes = _encode(self.keys)
        i = np.searchsorted(codes, code)
        if i < len(codes) and codes[i] == code:
            return complex(self.values[i])
        return 0j

    @property
    def n(self) -> np.ndarray:
        return self.keys[:, 0]

    @property
    def l(self) -> np.ndarray:
        return self.keys[:, 1]

    @property
    def m(self) -> np.ndarray:
        return self.keys[:, 2]

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def shell_probabilities(self):
        """``(ns, P(n))`` over the truncation window."""
        ns = np.arange(self.n_lo, self.n_hi + 1)
        probs = np.zeros(len(ns))
        np.add.at(probs, self.n - self.n_lo, np.abs(self.values) ** 2)
        return ns, probs

    def modal_n(self, rtol: float = 1e-9) -> int:
        """Most probable shell; ties (equal to ``rtol``) go to the larger n.

        At integer ``rho`` the Poisson weights of ``n = rho`` and
        ``n = rho + 1`` are exactly equal, and the upper one is reported.
        """
        ns, probs = self.shell_probabilities()
        top = probs.max()
        return int(ns[np.nonzero(probs >= top * (1 - rtol))[0][-1]])

    def with_values(self, values: np.ndarray, labels: ActionAngleLabels) -> "CoherentState":
        return CoherentState(self.keys, values, self.n_lo, self.n_hi, self.tail_bound, labels, self.epsilon)


# ---------------------------------------------------------------------------
# radial weights and truncation


def poisson_window(rho: float, epsilon: float):
    """Smallest window ``[k_lo, k_hi]`` of Poisson(rho) with tail mass < epsilon.

    Grown greedily from the mode by the more probable neighbour, which gives
    the highest-mass window of each length for a unimodal law.  Returns
    ``(k_lo, k_hi, window_mass, tail_mass)``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if rho <= 0:
        raise ValueError("rho must be positive")
    log_rho = math.log(rho)

    def logp(k):
        return -rho + k * log_rho - ln_factorial(k)

    def tail(lo, hi):
        lower = gammaincc(lo, rho) if lo > 0 else 0.0
        return float(lower + gammainc(hi + 1, rho))

    lo = hi = int(math.floor(rho))
    while tail(lo, hi) >= epsilon:
        if lo > 0 and logp(lo - 1) >= logp(hi + 1):
            lo -= 1
        else:
            hi += 1
    # P(lo <= K <= hi) from the same regularized gammas as the tail
    mass = float(gammaincc(hi + 1, rho)) - (float(gammaincc(lo, rho)) if lo > 0 else 0.0)
    return lo, hi, mass, tail(lo, hi)


def truncation_window(rho: float, epsilon: float = DEFAULT_EPSILON):
    """Principal-number window ``(n_lo, n_hi)`` for the coherent state."""
    k_lo, k_hi, _, _ = poisson_window(rho, epsilon)
    return k_lo + 1, k_hi + 1


def radial_log_weight(rho: float, twice_j: int) -> float:
    """``ln C_j(rho) = -rho/2 + j ln(rho) - ln((2j)!)/2``."""
    return -0.5 * rho + 0.5 * twice_j * math.log(rho) - 0.5 * ln_factorial(twice_j)


def _dynamical_phase(labels: ActionAngleLabels, n: int) -> float:
    return labels.theta * labels.rho**3 / (2.0 * n * n)


def _log_and_phase(labels: ActionAngleLabels, twice_j: int):
    ms = np.arange(-twice_j, twice_j + 1, 2) / 2
    log_mag = (
        radial_log_weight(labels.rho, twice_j)
        + wigner_d_row_log(twice_j, labels.beta)[:, None]
        + wigner_d_row_log(twice_j, labels.delta)[None, :]
    )
    rot = np.exp(-1j * labels.alpha * ms)[:, None] * np.exp(-1j * labels.gamma * ms)[None, :]
    return np.exp(log_mag) * rot


def uncoupled_block(labels: ActionAngleLabels, twice_j: int) -> np.ndarray:
    """Amplitudes ``U[m1, m2]`` of the product basis for one shell (ascending m)."""
    return _log_and_phase(labels, twice_j) * np.exp(1j * _dynamical_phase(labels, twice_j + 1))


def uncoupled_amplitude(
    labels: ActionAngleLabels, j: HalfIntegerLike, m1: HalfIntegerLike, m2: HalfIntegerLike
) -> complex:
    """Product-basis amplitude ``<j m1 | <j m2 | state>``."""
    tj, tm1, tm2 = (HalfInteger.of(x).twice for x in (j, m1, m2))
    for tm in (tm1, tm2):
        if tj < 0 or abs(tm) > tj or (tj - tm) % 2:
            raise QuantumNumberError(f"m={tm}/2 incompatible with j={tj}/2")
    block = uncoupled_block(labels, tj)
    return complex(block[(tm1 + tj) // 2, (tm2 + tj) // 2])


@lru_cache(maxsize=160)
def shell_coupling(twice_j: int):
    """Sparse map from the flattened product block ``U[m1, m2]`` to ``|n, l, m>``.

    Rows are ordered by ``(l, m)``; returns ``(keys, matrix)`` with ``keys``
    the ``(n, l, m)`` of each row.  Cached and read-only.
    """
    dim = twice_j + 1
    rows, cols, data, lm = [], [], [], []
    row0 = 0
    for m_total in range(-twice_j, twice_j + 1):
        tm1, ls, cg = coupling_block(twice_j, m_total)
        flat = ((tm1 + twice_j) // 2) * dim + (2 * m_total - tm1 + twice_j) // 2
        nl = len(ls)
        rows.append(np.repeat(row0 + np.arange(nl)[None, :], len(tm1), axis=0).ravel())
        cols.append(np.repeat(flat, nl))
        data.append(np.asarray(cg).ravel())
        lm.append(np.column_stack([ls, np.full(nl, m_total)]))
        row0 += nl
    lm = np.concatenate(lm)
    order = np.lexsort((lm[:, 1], lm[:, 0]))
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    mat = csr_matrix(
        (np.concatenate(data), (rank[np.concatenate(rows)], np.concatenate(cols))),
        shape=(row0, dim * dim),
    )
    keys = np.column_stack([np.full(row0, dim), lm[order]]).astype(np.int64)
    keys.setflags(write=False)
    for arr in (mat.data, mat.indices, mat.indptr):
        arr.setflags(write=False)
    return keys, mat


def _couple_shell(labels: ActionAngleLabels, n: int):
    keys, mat = shell_coupling(n - 1)
    coupled = mat @ _log_and_phase(labels, n - 1).ravel()
    keep = np.abs(coupled) >= AMPLITUDE_FLOOR
    dropped = float(np.sum(np.abs(coupled[~keep]) ** 2))
    # the dynamical phase is applied after the floor so that the support
    # does not depend on theta
    coupled = coupled[keep] * np.exp(1j * _dynamical_phase(labels, n))
    return keys[keep], coupled, dropped


def build_state(
    labels: ActionAngleLabels,
    epsilon: float = DEFAULT_EPSILON,
    n_max: int = DEFAULT_N_MAX,
    workers: int | None = None,
) -> CoherentState:
    """Coherent state in the coupled basis, truncated to Poisson mass ``>= 1 - epsilon``.

    Amplitudes below ``AMPLITUDE_FLOOR`` are dropped and their probability is
    added to ``tail_bound``.  ``workers > 1`` builds shells on a thread pool.
    """
    n_lo, n_hi = truncation_window(labels.rho, epsilon)
    if n_hi > n_max:
        raise ResourceLimit(f"rho={labels.rho} needs n up to {n_hi} > n_max={n_max}")
    _, _, _, tail = poisson_window(labels.rho, epsilon)
    shells = range(n_lo, n_hi + 1)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda n: _couple_shell(labels, n), shells))
    else:
        parts = [_couple_shell(labels, n) for n in shells]
    keys = np.concatenate([p[0] for p in parts])
    vals = np.concatenate([p[1] for p in parts])
    dropped = math.fsum(p[2] for p in parts)
    return CoherentState(keys, vals, n_lo, n_hi, tail + dropped, labels, epsilon)


# ---------------------------------------------------------------------------
# dynamics and overlaps


def evolve_labels(labels: ActionAngleLabels, t: float) -> ActionAngleLabels:
    """Classical motion: only the angle conjugate to rho advances."""
    return labels.with_theta(labels.theta + kepler_frequency(labels.rho) * t)


def evolve_quantum(state: CoherentState, t: float) -> CoherentState:
    """Schroedinger evolution: multiply shell ``n`` by ``exp(i t / (2 n^2))``."""
    n = state.n.astype(float)
    values = state.values * np.exp(1j * t / (2.0 * n * n))
    return state.with_values(values, evolve_labels(state.labels, t))


def rotate_z(state: CoherentState, angle: float) -> CoherentState:
    """Rotate about z: ``exp(-i angle L_z)``.  Label provenance shifts alpha and gamma."""
    values = state.values * np.exp(-1j * angle * state.m)
    lab = state.labels
    return state.with_values(values, replace(lab, alpha=lab.alpha + angle, gamma=lab.gamma + angle))


def inner_product(a: CoherentState, b: CoherentState) -> complex:
    """``<a|b>`` over the common support."""
    _, ia, ib = np.intersect1d(_encode(a.keys), _encode(b.keys), assume_unique=True, return_indices=True)
    return complex(np.sum(np.conj(a.values[ia]) * b.values[ib]))


def distance(a: CoherentState, b: CoherentState) -> float:
    """Euclidean norm of ``a - b`` over the union of supports."""
    ca, cb = _encode(a.keys), _encode(b.keys)
    _, ia, ib = np.intersect1d(ca, cb, assume_unique=True, return_indices=True)
    common = np.sum(np.abs(a.values[ia] - b.values[ib]) ** 2)
    only_a = np.sum(np.abs(np.delete(a.values, ia)) ** 2)
    only_b = np.sum(np.abs(np.delete(b.values, ib)) ** 2)
    return math.sqrt(common + only_a + only_b)


def fidelity(a: CoherentState, b: CoherentState) -> float:
    """``|<a|b>|``."""
    return abs(inner_product(a, b))


def m1_marginal(labels: ActionAngleLabels, j: HalfIntegerLike):
    """Distribution of ``m1`` within shell ``j``, normalised to one.

    Returns ``(m1 values, probabilities)``; used to check that the state
    concentrates on ``m1 ~ (j + 1/2) cos(beta)``.
    """
    tj = HalfInteger.of(j).twice
    u = uncoupled_block(labels, tj)
    p = np.sum(np.abs(u) ** 2, axis=1)
    return np.arange(-tj, tj + 1, 2) / 2, p / p.sum()
