"""Position-space synthesis and expectation values of coherent states."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .specfun import assoc_laguerre, gauss_laguerre, gauss_legendre, ln_factorial
from .state import CoherentState, ResourceLimit

__all__ = [
    "GridSpec",
    "DensityField",
    "RadialMoments",
    "wavefunction_at",
    "density_grid",
    "energy_expectation",
    "angular_momentum_expectations",
    "radial_moments",
    "MAX_GRID_SAMPLES",
]

MAX_GRID_SAMPLES = 10**8
_AXES = "xyz"


def _radial_log_norm(n: int, l: int) -> float:
    return 0.5 * (3 * math.log(2.0 / n) + ln_factorial(n - l - 1) - math.log(2.0 * n) - ln_factorial(n + l))


def _radial_values(n: int, l: int, r: np.ndarray, with_exp: bool = True) -> np.ndarray:
    x = 2.0 * r / n
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    log_pref = _radial_log_norm(n, l) + (l * logx if l else 0.0)
    if with_exp:
        log_pref = log_pref - x / 2
    return np.exp(log_pref) * assoc_laguerre(n - l - 1, 2 * l + 1, x)


def _group_by_l(state: CoherentState):
    """``{l: (ns, ms, A)}`` with ``A[i, k]`` the amplitude at ``(ns[i], l, ms[k])``."""
    groups = {}
    for l in np.unique(state.l):
        sel = state.l == l
        n, m, a = state.n[sel], state.m[sel], state.values[sel]
        ns, ni = np.unique(n, return_inverse=True)
        ms, mi = np.unique(m, return_inverse=True)
        mat = np.zeros((len(ns), len(ms)), dtype=complex)
        mat[ni, mi] = a
        groups[int(l)] = (ns, ms, mat)
    return groups


def _spherical(points):
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    r = np.sqrt(x * x + y * y + z * z)
    polar = np.arctan2(np.hypot(x, y), z)
    az = np.arctan2(y, x)
    return r, polar, az


def _psi_chunk(groups, lmax, r, polar, az):
    cx, sx = np.cos(polar), np.abs(np.sin(polar))
    m_all = np.arange(lmax + 1)
    phase = np.exp(1j * m_all[:, None] * az[None, :])
    psi = np.zeros(r.shape, dtype=complex)
    # P[m] holds normalized Legendre (with CS sign and 1/sqrt(4pi)) at degree l
    p_prev = np.zeros((lmax + 1, len(r)))
    p_prev2 = np.zeros((lmax + 1, len(r)))
    for l in range(lmax + 1):
        p = np.zeros((lmax + 1, len(r)))
        if l == 0:
            p[0] = 1.0 / math.sqrt(4 * math.pi)
        else:
            m = np.arange(l - 1)
            if len(m):
                a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
                b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
                p[: l - 1] = a[:, None] * (cx * p_prev[: l - 1] - b[:, None] * p_prev2[: l - 1])
            p[l - 1] = math.sqrt(2 * l + 1) * cx * p_prev[l - 1]
            p[l] = -math.sqrt((2 * l + 1) / (2 * l)) * sx * p_prev[l - 1]
        p_prev2, p_prev = p_prev, p
        if l not in groups:
            continue
        ns, ms, mat = groups[l]
        radial = np.stack([_radial_values(int(n), l, r) for n in ns])  # (n, pts)
        f = mat.T @ radial  # (m, pts)
        for k, m in enumerate(ms):
            m = int(m)
            if m >= 0:
                y = p[m] * phase[m]
            else:
                y = (-1) ** m * p[-m] * np.conj(phase[-m])
            psi += f[k] * y
    return psi


def wavefunction_at(state: CoherentState, points, chunk: Optional[int] = None) -> np.ndarray:
    """``<x|state>`` at Cartesian ``points`` (Bohr radii), shape ``points.shape[:-1]``."""
    pts = np.asarray(points, dtype=float)
    shape = pts.shape[:-1]
    flat = pts.reshape(-1, 3)
    groups = _group_by_l(state)
    if not groups:
        return np.zeros(shape, dtype=complex)
    lmax = max(groups)
    if chunk is None:
        n_pairs = sum(len(g[0]) for g in groups.values())
        chunk = int(min(65536, max(512, 2**24 // (lmax + 1 + n_pairs))))
    out = np.empty(len(flat), dtype=complex)
    for start in range(0, len(flat), chunk):
        r, polar, az = _spherical(flat[start : start + chunk])
        out[start : start + chunk] = _psi_chunk(groups, lmax, r, polar, az)
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned sampling box.

    ``plane = ("z", 0.0)`` selects the slice ``z = 0``; the fixed axis then
    needs no extent or sample count.  Samples sit at cell centres.
    """

    extents: Sequence[tuple]
    samples: Sequence[int]
    plane: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(tuple(map(float, e)) for e in self.extents))
        object.__setattr__(self, "samples", tuple(int(s) for s in self.samples))
        if len(self.extents) != 3 or len(self.samples) != 3:
            raise ValueError("need three extents and three sample counts")
        if self.plane is not None:
            axis, offset = self.plane
            if axis not in _AXES:
                raise ValueError(f"plane axis must be one of x, y, z, got {axis!r}")
            object.__setattr__(self, "plane", (axis, float(offset)))
        for i in self.active_axes:
            lo, hi = self.extents[i]
            if not hi > lo:
                raise ValueError(f"degenerate extent on axis {_AXES[i]}")
            if self.samples[i] < 2:
                raise ValueError(f"need at least 2 samples on axis {_AXES[i]}")

    @classmethod
    def cube(cls, half_width: float, samples: int) -> "GridSpec":
        e = (-half_width, half_width)
        return cls((e, e, e), (samples,) * 3)

    @classmethod
    def slice(cls, axis: str, offset: float, half_width: float, samples: int) -> "GridSpec":
        e = (-half_width, half_width)
        return cls((e, e, e), (samples,) * 3, plane=(axis, offset))

    @property
    def active_axes(self) -> tuple:
        if self.plane is None:
            return (0, 1, 2)
        fixed = _AXES.index(self.plane[0])
        return tuple(i for i in range(3) if i != fixed)

    @property
    def shape(self) -> tuple:
        return tuple(self.samples[i] for i in self.active_axes)

    def axis_coordinates(self, i: int) -> np.ndarray:
        lo, hi = self.extents[i]
        n = self.samples[i]
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    def cell_measure(self) -> float:
        return math.prod((self.extents[i][1] - self.extents[i][0]) / self.samples[i] for i in self.active_axes)

    def points(self) -> np.ndarray:
        """Sample points, shape ``self.shape + (3,)``, row-major over active axes."""
        coords = [self.axis_coordinates(i) for i in self.active_axes]
        mesh = np.meshgrid(*coords, indexing="ij")
        pts = np.zeros(self.shape + (3,))
        for k, i in enumerate(self.active_axes):
            pts[..., i] = mesh[k]
        if self.plane is not None:
            pts[..., _AXES.index(self.plane[0])] = self.plane[1]
        return pts

    def to_dict(self) -> dict:
        return {
            "extents": [list(e) for e in self.extents],
            "samples": list(self.samples),
            "plane": list(self.plane) if self.plane is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        plane = tuple(d["plane"]) if d.get("plane") is not None else None
        return cls([tuple(e) for e in d["extents"]], d["samples"], plane)


@dataclass(frozen=True)
class DensityField:
    grid: GridSpec
    values: np.ndarray
    peak_location: np.ndarray
    total_mass_in_box: Optional[float]  # None for 2-D slices


def density_grid(state: CoherentState, grid: GridSpec) -> DensityField:
    """Sample ``|psi|^2`` on the grid; mass by midpoint rule (3-D only)."""
    total = math.prod(grid.shape)
    if total > MAX_GRID_SAMPLES:
        raise ResourceLimit(f"{total} grid samples exceed {MAX_GRID_SAMPLES}")
    pts = grid.points()
    rho = np.abs(wavefunction_at(state, pts)) ** 2
    peak = pts[np.unravel_index(int(np.argmax(rho)), rho.shape)]
    mass = float(rho.sum() * grid.cell_measure()) if grid.plane is None else None
    rho.setflags(write=False)
    return DensityField(grid, rho, peak, mass)


# ---------------------------------------------------------------------------
# expectation values


def energy_expectation(state: CoherentState) -> float:
    """``sum_n P(n) (-1 / (2 n^2))`` with ``P`` normalised over the window."""
    p = np.abs(state.values) ** 2
    n = state.n.astype(float)
    return float(np.sum(p * (-0.5 / (n * n))) / p.sum())


def angular_momentum_expectations(state: CoherentState):
    """``(<L_z>, <L^2>)`` normalised over the window."""
    p = np.abs(state.values) ** 2
    norm = p.sum()
    l = state.l.astype(float)
    return float(np.sum(p * state.m) / norm), float(np.sum(p * l * (l + 1)) / norm)


@dataclass(frozen=True)
class RadialMoments:
    mean_r: float
    std_r: float
    resolved: bool

    @property
    def relative_width(self) -> float:
        return self.std_r / self.mean_r


def _radial_integral(n1, n2, l, power, n_nodes):
    # int R_{n1 l} R_{n2 l} r^(2+power) dr, exact Gauss-Laguerre after x = c r
    c = 1.0 / n1 + 1.0 / n2
    x, w = gauss_laguerre(n_nodes)
    r = x / c
    f = _radial_values(n1, l, r, with_exp=False) * _radial_values(n2, l, r, with_exp=False) * r ** (2 + power)
    return float(w @ f) / c


def _moments_pairs(state, n_nodes):
    groups = _group_by_l(state)
    m1 = m2 = 0.0
    resolved = True
    for l, (ns, _, mat) in groups.items():
        gram = np.conj(mat) @ mat.T  # gram[i, k] = sum_m conj(a_i) a_k
        for i, n1 in enumerate(ns):
            for k in range(i, len(ns)):
                g = gram[i, k]
                if abs(g) < 1e-300:
                    continue
                n2 = ns[k]
                need = (int(n1) + int(n2) + 2) // 2 + 2
                nodes = need if n_nodes is None else n_nodes
                resolved &= nodes >= need
                weight = g.real if k == i else 2.0 * g.real
                m1 += weight * _radial_integral(int(n1), int(n2), l, 1, nodes)
                m2 += weight * _radial_integral(int(n1), int(n2), l, 2, nodes)
    return m1, m2, resolved


def _moments_grid(state, n_nodes):
    groups = _group_by_l(state)
    n_top = int(state.n.max())
    r_max = 4.0 * n_top * n_top + 60.0
    panels = 8 * n_top if n_nodes is None else int(n_nodes)
    x, w = gauss_legendre(16)
    edges = np.linspace(0.0, r_max, panels + 1)
    half = np.diff(edges) / 2
    r = (edges[:-1, None] + half[:, None] * (x[None, :] + 1)).ravel()
    wr = (half[:, None] * w[None, :]).ravel()
    dens = np.zeros_like(r)
    for l, (ns, _, mat) in groups.items():
        radial = np.stack([_radial_values(int(n), l, r) for n in ns])
        f = mat.T @ radial
        dens += np.sum(np.abs(f) ** 2, axis=0)
    dens *= r * r
    mass = wr @ dens
    resolved = abs(mass - state.norm_squared()) < 1e-8
    return wr @ (dens * r), wr @ (dens * r * r), resolved


def radial_moments(state: CoherentState, method: str = "pairs", n_nodes: Optional[int] = None) -> RadialMoments:
    """Mean and spread of ``r`` in the state.

    ``method="pairs"`` sums exact radial overlap integrals over shell pairs
    sharing ``(l, m)``; ``n_nodes`` overrides the Gauss-Laguerre order
    (``resolved`` is False if it is below polynomial exactness).
    ``method="grid"`` integrates the reduced radial density on a composite
    Gauss-Legendre grid with ``n_nodes`` panels.
    """
    norm = state.norm_squared()
    if method == "pairs":
        s1, s2, ok = _moments_pairs(state, n_nodes)
    elif method == "grid":
        s1, s2, ok = _moments_grid(state, n_nodes)
    else:
        raise ValueError(f"unknown method {method!r}")
    mean = s1 / norm
    var = s2 / norm - mean * mean
    return RadialMoments(float(mean), float(math.sqrt(max(var, 0.0))), bool(ok))
