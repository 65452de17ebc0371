"""Verification suites behind ``hcoherent verify``.

Every tolerance lives in :data:`THRESHOLDS`; the test suite reads the same
block, so tightening a number here tightens CI as well.  Each suite returns
a :class:`SuiteReport` of named checks (measured value, threshold, verdict).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, expm

from .geometry import ActionAngleLabels
from .identity import (
    PrecisionWarning,
    brute_force_identity,
    radial_weight_integral,
    subspace_identity,
    theta_average_crossterm,
)
from .specfun import (
    clebsch_gordan,
    coupling_block,
    gauss_laguerre,
    hydrogen_radial,
    wigner_d_top_row,
)
from .state import build_state, distance, evolve_labels, evolve_quantum
from .su2 import su2_identity_check

__all__ = [
    "THRESHOLDS",
    "Check",
    "SuiteReport",
    "SUITES",
    "run_suite",
    "verify_su2",
    "verify_identity",
    "verify_evolution",
    "verify_specfun",
    "random_labels",
    "spin_matrices",
    "brute_force_cg",
    "wigner_d_expm",
    "radial_overlap_matrix",
]

THRESHOLDS = {
    # exact classical evolution
    "evolution_distance": 1e-12,
    "evolution_samples": 100,
    "evolution_rho_range": (1.0, 40.0),
    "evolution_theta_range": (-10.0, 10.0),
    "evolution_time_range": (-1e3, 1e3),
    # non-recurrence after one Kepler period
    "nonrecurrence_rho": 20.0,
    "nonrecurrence_fidelity_gap": 1e-6,
    "nonrecurrence_probability_match": 1e-14,
    # SU(2) identity
    "su2_identity": 1e-10,
    "su2_max_twice_j": 20,
    # radial weight
    "radial_weight": 1e-12,
    "radial_weight_max_twice_j": 30,
    # bound-subspace identity
    "subspace_nmax": 5,
    "subspace_identity": 1e-10,
    "brute_force_nmax": 3,
    "brute_force_agreement": 1e-8,
    "witness_cap": 10_000,
    "witness_rho": 5.0,
    "witness_shells": (5, 6),
    "witness_envelope_factor": 10.0,
    "perturbed_shift": 1.0,
    "perturbed_min_deviation": 0.05,
    # semiclassical peaking
    "peaking_rho": 30.0,
    "peaking_m1_window": 1.0,
    # localization on the classical orbit
    "localization_rhos": (15.0, 20.0, 30.0),
    "localization_energy_rel": 0.10,
    "localization_lz_rel": 0.05,
    "localization_radius_rel": 0.10,
    "localization_angle": 0.2,
    "localization_samples": 512,
    "width_rhos": (10.0, 20.0, 40.0),
    # special-function oracles
    "wigner_d": 1e-10,
    "wigner_max_twice_j": 8,
    "clebsch_gordan": 1e-10,
    "cg_max_twice_j": 4,
    "radial_orthonormality": 1e-7,
    "radial_max_n": 30,
    # geometry dictionary
    "geometry_round_trips": 1000,
    "geometry_tolerance": 1e-10,
}


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold, "passed": self.passed}


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def below(self, name: str, value: float, threshold: float) -> None:
        self.checks.append(Check(name, float(value), float(threshold), bool(value < threshold)))

    def above(self, name: str, value: float, threshold: float) -> None:
        self.checks.append(Check(name, float(value), float(threshold), bool(value > threshold)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# independent oracles


def spin_matrices(twice_j: int):
    """``(J_x, J_y, J_z)`` in the basis of descending ``m = j .. -j``."""
    j = twice_j / 2
    m = j - np.arange(twice_j + 1)
    # <m+1| J+ |m> sits one row above the diagonal in descending order
    up = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1)
    jx = 0.5 * (up + up.T)
    jy = -0.5j * (up - up.T)
    return jx, jy, np.diag(m)


def wigner_d_expm(twice_j: int, omega: float) -> np.ndarray:
    """``<j m| exp(-i omega J_y) |j j>`` by matrix exponential (ascending m)."""
    _, jy, _ = spin_matrices(twice_j)
    d = expm(-1j * omega * jy)
    return d[::-1, 0].real


def brute_force_cg(twice_j1: int, twice_j2: int) -> dict:
    """All ``<j1 m1; j2 m2 | l m>`` from diagonalizing ``J^2`` in the product space.

    The highest-weight vector of each ``l`` is taken from the ``m = l``
    eigenspace with its largest-``m1`` component positive; the rest of the
    multiplet follows by applying the lowering operator.
    """
    a = [np.array(x) for x in spin_matrices(twice_j1)]
    b = [np.array(x) for x in spin_matrices(twice_j2)]
    i1, i2 = np.eye(twice_j1 + 1), np.eye(twice_j2 + 1)
    tot = [np.kron(a[k], i2) + np.kron(i1, b[k]) for k in range(3)]
    j2op = sum(t @ t for t in tot).real
    jz = np.diag(tot[2]).real
    lower = (tot[0] - 1j * tot[1]).real
    m1 = np.repeat(twice_j1 / 2 - np.arange(twice_j1 + 1), twice_j2 + 1)
    m2 = np.tile(twice_j2 / 2 - np.arange(twice_j2 + 1), twice_j1 + 1)
    out = {}
    for tl in range(abs(twice_j1 - twice_j2), twice_j1 + twice_j2 + 1, 2):
        l = tl / 2
        sel = np.nonzero(np.isclose(jz, l))[0]
        vals, vecs = eigh(j2op[np.ix_(sel, sel)])
        k = int(np.argmin(np.abs(vals - l * (l + 1))))
        top = np.zeros(len(jz))
        top[sel] = vecs[:, k]
        lead = sel[np.argmax(m1[sel])]
        if top[lead] < 0:
            top = -top
        vec = top
        for step in range(tl + 1):
            m = l - step
            for idx in np.nonzero(np.abs(vec) > 0)[0]:
                out[(int(2 * m1[idx]), int(2 * m2[idx]), tl, int(2 * m))] = vec[idx]
            nxt = lower @ vec
            nrm = np.linalg.norm(nxt)
            if nrm < 1e-12:
                break
            vec = nxt / nrm
    return out


def radial_overlap_matrix(l: int, n_max: int) -> np.ndarray:
    """``int R_{n l} R_{n' l} r^2 dr`` for ``l < n, n' <= n_max`` by Gauss-Laguerre."""
    ns = np.arange(l + 1, n_max + 1)
    out = np.empty((len(ns), len(ns)))
    for a, n in enumerate(ns):
        for b, n2 in enumerate(ns[a:], start=a):
            scale = 1.0 / n + 1.0 / n2
            x, w = gauss_laguerre((n + n2) // 2 + 2)
            r = x / scale
            f = hydrogen_radial(int(n), l, r) * hydrogen_radial(int(n2), l, r) * r * r
            out[a, b] = out[b, a] = math.fsum(w * np.exp(x) * f) / scale
    return out


def random_labels(rng: np.random.Generator, rho_range=(1.0, 40.0), theta_range=(-10.0, 10.0)) -> ActionAngleLabels:
    """Labels with angles uniform on their natural ranges."""
    return ActionAngleLabels(
        rho=rng.uniform(*rho_range),
        alpha=rng.uniform(0, 2 * math.pi),
        beta=math.acos(rng.uniform(-1, 1)),
        gamma=rng.uniform(0, 2 * math.pi),
        delta=math.acos(rng.uniform(-1, 1)),
        theta=rng.uniform(*theta_range),
    )


# ---------------------------------------------------------------------------
# suites


def verify_su2(thresholds: dict = THRESHOLDS, **_) -> SuiteReport:
    rep = SuiteReport("su2")
    worst = max(su2_identity_check(tj / 2).deviation for tj in range(thresholds["su2_max_twice_j"] + 1))
    rep.below("identity_deviation", worst, thresholds["su2_identity"])
    return rep


def verify_identity(thresholds: dict = THRESHOLDS, n_max: int | None = None, **_) -> SuiteReport:
    rep = SuiteReport("identity")
    n_max = thresholds["subspace_nmax"] if n_max is None else n_max
    worst = max(abs(radial_weight_integral(tj / 2) - 1.0) for tj in range(thresholds["radial_weight_max_twice_j"] + 1))
    rep.below("radial_weight", worst, thresholds["radial_weight"])
    fast = subspace_identity(n_max)
    rep.below(f"subspace_identity_n{n_max}", fast.max_abs_deviation, thresholds["subspace_identity"])
    rep.details["subspace"] = fast.to_dict()
    nb = min(n_max, thresholds["brute_force_nmax"])
    small = subspace_identity(nb)
    brute = brute_force_identity(nb)
    gap = max(float(np.max(np.abs(x - y))) for x, y in zip(small.blocks, brute.blocks))
    rep.below(f"brute_force_agreement_n{nb}", gap, thresholds["brute_force_agreement"])
    cap = thresholds["witness_cap"]
    rho = thresholds["witness_rho"]
    n, n2 = thresholds["witness_shells"]
    gap_freq = abs(rho**3 * (0.5 / n**2 - 0.5 / n2**2))
    envelope = 1.0 / (cap * gap_freq)
    witness = abs(theta_average_crossterm(n, n2, cap, rho))
    rep.below("theta_witness_over_envelope", witness / envelope, thresholds["witness_envelope_factor"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PrecisionWarning)
        bad = subspace_identity(n_max, measure_shift=thresholds["perturbed_shift"])
    rep.above("perturbed_measure_deviation", bad.max_abs_deviation, thresholds["perturbed_min_deviation"])
    return rep


def verify_evolution(thresholds: dict = THRESHOLDS, seed: int = 0, **_) -> SuiteReport:
    rep = SuiteReport("evolution")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(thresholds["evolution_samples"]):
        lab = random_labels(rng, thresholds["evolution_rho_range"], thresholds["evolution_theta_range"])
        t = rng.uniform(*thresholds["evolution_time_range"])
        worst = max(worst, distance(evolve_quantum(build_state(lab), t), build_state(evolve_labels(lab, t))))
    rep.below("evolution_distance", worst, thresholds["evolution_distance"])
    rep.details["seed"] = seed
    return rep


def verify_specfun(thresholds: dict = THRESHOLDS, **_) -> SuiteReport:
    rep = SuiteReport("specfun")
    omegas = np.linspace(0.0, math.pi, 13)
    worst = 0.0
    for tj in range(thresholds["wigner_max_twice_j"] + 1):
        for om in omegas:
            worst = max(worst, float(np.max(np.abs(wigner_d_top_row(tj, om) - wigner_d_expm(tj, om)))))
    rep.below("wigner_d_vs_expm", worst, thresholds["wigner_d"])
    worst = 0.0
    top = thresholds["cg_max_twice_j"]
    for tj1 in range(top + 1):
        for tj2 in range(top + 1):
            for (tm1, tm2, tl, tm), ref in brute_force_cg(tj1, tj2).items():
                worst = max(worst, abs(clebsch_gordan(tj1 / 2, tm1 / 2, tj2 / 2, tm2 / 2, tl / 2, tm / 2) - ref))
        for tm in range(-tj1, tj1 + 1):
            ref = brute_force_cg(tj1, tj1)
            tm1s, ls, c = coupling_block(tj1, tm)
            for i, tm1 in enumerate(tm1s):
                for k, l in enumerate(ls):
                    worst = max(worst, abs(c[i, k] - ref.get((int(tm1), 2 * tm - int(tm1), 2 * int(l), 2 * tm), 0.0)))
    rep.below("clebsch_gordan_vs_brute", worst, thresholds["clebsch_gordan"])
    n_max = thresholds["radial_max_n"]
    worst = max(float(np.max(np.abs(radial_overlap_matrix(l, n_max) - np.eye(n_max - l)))) for l in range(n_max))
    rep.below("radial_orthonormality", worst, thresholds["radial_orthonormality"])
    return rep


SUITES = {
    "su2": verify_su2,
    "identity": verify_identity,
    "evolution": verify_evolution,
    "specfun": verify_specfun,
}


def run_suite(name: str, thresholds: dict = THRESHOLDS, **kwargs) -> list:
    """Run one suite, or every suite for ``"all"``; returns a list of reports."""
    names = list(SUITES) if name == "all" else [name]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite {unknown[0]!r}")
    return [SUITES[n](thresholds=thresholds, **kwargs) for n in names]
