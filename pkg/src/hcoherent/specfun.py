"""Special functions for the hydrogen coherent-state amplitudes.

Every factorial ratio is evaluated as a difference of log-factorials and
exponentiated at the end; ``(2j)!`` overflows a double long before the
largest ``n`` we need.  Angular momenta are stored doubled (``HalfInteger``)
so that selection rules are integer comparisons.

Conventions: Condon-Shortley phases for both Clebsch-Gordan coefficients
and spherical harmonics; hydrogen radial functions are positive near the
origin and normalised in Bohr-radius units.  The "top row" Wigner function
``d^j_{jm}(omega)`` means the rotated highest-weight state
``<j m| exp(-i omega J_y) |j j>``, which is non-negative on ``[0, pi]``
(in the other index order it would carry ``(-1)^(j-m)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

__all__ = [
    "HalfInteger",
    "QuantumNumberError",
    "ln_factorial",
    "wigner_d_top",
    "wigner_d_top_row",
    "clebsch_gordan",
    "coupling_block",
    "assoc_laguerre",
    "hydrogen_radial",
    "normalized_legendre",
    "spherical_harmonic",
    "gauss_legendre",
    "gauss_laguerre",
    "exact_nodes",
]


class QuantumNumberError(ValueError):
    """Malformed or out-of-range quantum numbers."""


@dataclass(frozen=True, order=True)
class HalfInteger:
    """An exact half-integer, stored as ``twice = 2 * value``.

    Magnetic numbers use the same type with a negative ``twice``; angular
    momenta (``j``, ``l``) are validated as non-negative where they are used.
    """

    twice: int

    def __post_init__(self):
        if isinstance(self.twice, bool) or not isinstance(self.twice, (int, np.integer)):
            raise TypeError(f"twice must be an integer, got {self.twice!r}")
        object.__setattr__(self, "twice", int(self.twice))

    @classmethod
    def of(cls, value: "HalfIntegerLike") -> "HalfInteger":
        """Coerce an int, float, Fraction, ``"3/2"`` string or HalfInteger."""
        if isinstance(value, HalfInteger):
            return value
        if isinstance(value, str):
            value = Fraction(value)
        doubled = 2 * value
        if isinstance(doubled, float):
            if not doubled.is_integer():
                raise QuantumNumberError(f"{value!r} is not a half-integer")
            return cls(int(doubled))
        doubled = Fraction(doubled)
        if doubled.denominator != 1:
            raise QuantumNumberError(f"{value!r} is not a half-integer")
        return cls(int(doubled))

    @property
    def value(self) -> float:
        return self.twice / 2

    @property
    def is_integer(self) -> bool:
        return self.twice % 2 == 0

    def __float__(self) -> float:
        return self.twice / 2

    def __neg__(self) -> "HalfInteger":
        return HalfInteger(-self.twice)

    def __str__(self) -> str:
        return str(self.twice // 2) if self.twice % 2 == 0 else f"{self.twice}/2"


HalfIntegerLike = Union[HalfInteger, int, float, Fraction, str]


def _twice(x: HalfIntegerLike) -> int:
    return HalfInteger.of(x).twice


# ---------------------------------------------------------------------------
# factorials

_EXACT_LN_FACT = tuple(math.log(math.factorial(k)) for k in range(21))


def ln_factorial(k: int) -> float:
    """Return ``ln(k!)``; exact table for ``k <= 20``, ``lgamma`` beyond."""
    if isinstance(k, float):
        if not k.is_integer():
            raise ValueError(f"ln_factorial needs an integer, got {k!r}")
        k = int(k)
    if k < 0:
        raise ValueError(f"ln_factorial of negative k={k}")
    if k <= 20:
        return _EXACT_LN_FACT[k]
    return math.lgamma(k + 1.0)


def _ln_factorial_array(k):
    k = np.asarray(k, dtype=float)
    return gammaln(k + 1.0)


# ---------------------------------------------------------------------------
# Wigner d, top row


def _check_jm(tj: int, tm: int) -> None:
    if tj < 0:
        raise QuantumNumberError(f"j must be non-negative, got {tj}/2")
    if abs(tm) > tj or (tj - tm) % 2:
        raise QuantumNumberError(f"m={tm}/2 incompatible with j={tj}/2")


def _xlogy(power, base):
    # 0 * log(0) is 0 here: a zero power means the factor is absent
    power = np.asarray(power, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(power == 0, 0.0, power * np.log(base))


def wigner_d_row_log(twice_j: int, omega):
    """Log-magnitudes of ``d^j_{jm}(omega)`` for ``m = -j..j``.

    Returns an array of shape ``omega.shape + (2j+1,)``; entries are
    ``-inf`` where the function vanishes.  All entries of the top row are
    non-negative for ``omega`` in ``[0, pi]``, so no sign is carried.
    """
    omega = np.asarray(omega, dtype=float)[..., None]
    tm = np.arange(-twice_j, twice_j + 1, 2)
    jm_plus = (twice_j + tm) // 2
    jm_minus = (twice_j - tm) // 2
    lnbinom = 0.5 * (
        _ln_factorial_array(twice_j) - _ln_factorial_array(jm_plus) - _ln_factorial_array(jm_minus)
    )
    s = np.abs(np.sin(omega / 2))
    c = np.abs(np.cos(omega / 2))
    return lnbinom + _xlogy(jm_minus, s) + _xlogy(jm_plus, c)


def wigner_d_top_row(twice_j: int, omega) -> np.ndarray:
    """``d^j_{jm}(omega)`` for all ``m = -j..j`` (ascending ``m``)."""
    if twice_j < 0:
        raise QuantumNumberError("j must be non-negative")
    return np.exp(wigner_d_row_log(twice_j, omega))


def wigner_d_top(j: HalfIntegerLike, m: HalfIntegerLike, omega: float) -> float:
    """Top-row Wigner function ``d^j_{jm}(omega) = <j m| exp(-i omega J_y) |j j>``.

    ``sqrt((2j)!/((j+m)!(j-m)!)) sin(omega/2)^(j-m) cos(omega/2)^(j+m)``,
    evaluated in the log domain.
    """
    tj, tm = _twice(j), _twice(m)
    _check_jm(tj, tm)
    row = wigner_d_top_row(tj, omega)
    return float(row[..., (tm + tj) // 2])


# ---------------------------------------------------------------------------
# Clebsch-Gordan


def _cg_exact_squared(tj1, tm1, tj2, tm2, tJ, tM):
    # Racah's closed form with exact rational arithmetic; the alternating sum
    # cancels catastrophically in floating point once j reaches ~20.
    fact = math.factorial
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tm1) // 2
    c = (tj2 + tm2) // 2
    d = (tJ - tj2 + tm1) // 2
    e = (tJ - tj1 - tm2) // 2
    kmin = max(0, -d, -e)
    kmax = min(a, b, c)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = fact(k) * fact(a - k) * fact(b - k) * fact(c - k) * fact(d + k) * fact(e + k)
        total += Fraction((-1) ** k, den)
    pref = Fraction(
        (tJ + 1)
        * fact((tJ + tj1 - tj2) // 2)
        * fact((tJ - tj1 + tj2) // 2)
        * fact((tj1 + tj2 - tJ) // 2),
        fact((tj1 + tj2 + tJ) // 2 + 1),
    )
    pref *= (
        fact((tJ + tM) // 2)
        * fact((tJ - tM) // 2)
        * fact((tj1 - tm1) // 2)
        * fact((tj1 + tm1) // 2)
        * fact((tj2 - tm2) // 2)
        * fact((tj2 + tm2) // 2)
    )
    return pref * total * total, (total > 0) - (total < 0)


def clebsch_gordan(j1, m1, j2, m2, l, m) -> float:
    """``<j1 m1; j2 m2 | l m>`` in the Condon-Shortley convention.

    Selection-rule violations (triangle, ``m != m1 + m2``, ``|m| > l``)
    return exactly 0.  Malformed quantum numbers raise QuantumNumberError.
    """
    tj1, tm1, tj2, tm2, tl, tm = (_twice(x) for x in (j1, m1, j2, m2, l, m))
    _check_jm(tj1, tm1)
    _check_jm(tj2, tm2)
    if tl < 0 or (tl - tm) % 2:
        raise QuantumNumberError(f"l={tl}/2, m={tm}/2 malformed")
    if (tj1 + tj2 + tl) % 2:
        return 0.0
    if tm != tm1 + tm2 or abs(tm) > tl:
        return 0.0
    if tl < abs(tj1 - tj2) or tl > tj1 + tj2:
        return 0.0
    sq, sign = _cg_exact_squared(tj1, tm1, tj2, tm2, tl, tm)
    if sign == 0:
        return 0.0
    return sign * math.sqrt(sq)


@lru_cache(maxsize=512)
def _coupling_block_cached(twice_j: int, m_total: int):
    j = twice_j / 2
    # m1 ascending, m2 = M - m1, both within [-j, j]
    tm1 = np.arange(max(-twice_j, 2 * m_total - twice_j), min(twice_j, 2 * m_total + twice_j) + 1, 2)
    tm2 = 2 * m_total - tm1
    m1, m2 = tm1 / 2, tm2 / 2
    jj = j * (j + 1)
    diag = 2 * jj + 2 * m1 * m2
    # <m1+1, m2-1| J1+ J2- |m1, m2>
    off = np.sqrt(jj - m1[:-1] * (m1[:-1] + 1)) * np.sqrt(jj - m2[:-1] * (m2[:-1] - 1))
    if len(diag) == 1:
        vecs = np.ones((1, 1))
    else:
        _, vecs = eigh_tridiagonal(diag, off)
    # Condon-Shortley: the component with the largest m1 is positive
    vecs = vecs * np.where(vecs[-1] < 0, -1.0, 1.0)
    ls = np.arange(abs(m_total), abs(m_total) + len(diag))
    vecs.setflags(write=False)
    tm1.setflags(write=False)
    ls.setflags(write=False)
    return tm1, ls, vecs


def coupling_block(twice_j: int, m_total: int):
    """Clebsch-Gordan block for ``j (x) j -> l`` at fixed total ``m``.

    Returns ``(twice_m1, ls, C)`` where ``C[i, k] = <j m1_i; j m-m1_i | l_k m>``.
    The block is the eigenbasis of the total ``J^2`` (tridiagonal in ``m1``)
    with phases fixed by the Condon-Shortley rule, so it agrees with
    :func:`clebsch_gordan` to rounding.  Results are cached and read-only.
    """
    if twice_j < 0 or abs(m_total) > twice_j:
        raise QuantumNumberError(f"no block for 2j={twice_j}, m={m_total}")
    return _coupling_block_cached(int(twice_j), int(m_total))


# ---------------------------------------------------------------------------
# hydrogen radial functions


def assoc_laguerre(k: int, alpha: float, x):
    """Generalised Laguerre polynomial ``L_k^alpha(x)`` by forward recurrence."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev
    cur = 1.0 + alpha - x
    for i in range(1, k):
        prev, cur = cur, ((2 * i + 1 + alpha - x) * cur - (i + alpha) * prev) / (i + 1)
    return cur


def hydrogen_radial(n: int, l: int, r):
    """Bound hydrogen radial function ``R_nl(r)`` in atomic units.

    Normalised so that ``int_0^inf R_nl(r)^2 r^2 dr = 1``.
    """
    if n < 1 or not 0 <= l <= n - 1:
        raise QuantumNumberError(f"need 0 <= l <= n-1, got n={n}, l={l}")
    r = np.asarray(r, dtype=float)
    x = 2.0 * r / n
    log_norm = 0.5 * (3 * math.log(2.0 / n) + ln_factorial(n - l - 1) - math.log(2.0 * n) - ln_factorial(n + l))
    log_pref = log_norm - x / 2 + _xlogy(l, x)
    out = np.exp(log_pref) * assoc_laguerre(n - l - 1, 2 * l + 1, x)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# spherical harmonics


def normalized_legendre(lmax: int, polar) -> np.ndarray:
    """Table ``P[l, m]`` with ``Y_lm(polar, az) = P[l, m] * exp(i m az)`` for ``m >= 0``.

    Includes the ``1/sqrt(4 pi)`` normalisation and the Condon-Shortley
    sign.  Shape ``(lmax+1, lmax+1) + polar.shape``; entries with ``m > l``
    are zero.
    """
    polar = np.asarray(polar, dtype=float)
    x = np.cos(polar)
    s = np.abs(np.sin(polar))
    out = np.zeros((lmax + 1, lmax + 1) + polar.shape)
    pmm = np.full(polar.shape, 1.0 / math.sqrt(4 * math.pi))
    for m in range(lmax + 1):
        if m > 0:
            pmm = -math.sqrt((2 * m + 1) / (2 * m)) * s * pmm
        out[m, m] = pmm
        if m == lmax:
            break
        out[m + 1, m] = math.sqrt(2 * m + 3) * x * pmm
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            out[l, m] = a * (x * out[l - 1, m] - b * out[l - 2, m])
    return out


def spherical_harmonic(l: int, m: int, polar, azimuth):
    """Condon-Shortley spherical harmonic ``Y_lm(polar, azimuth)``."""
    if l < 0 or abs(m) > l:
        raise QuantumNumberError(f"need |m| <= l, got l={l}, m={m}")
    polar = np.asarray(polar, dtype=float)
    azimuth = np.asarray(azimuth, dtype=float)
    table = normalized_legendre(l, polar)
    y = table[l, abs(m)] * np.exp(1j * abs(m) * azimuth)
    if m < 0:
        y = (-1) ** m * np.conj(y)
    return y if y.ndim else complex(y)


# ---------------------------------------------------------------------------
# quadrature rules (cached, read-only)


@lru_cache(maxsize=256)
def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=256)
def _glag(n):
    from scipy.special import roots_laguerre

    x, w = roots_laguerre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int):
    """Nodes and weights on ``[-1, 1]``; exact for degree ``2n - 1``."""
    if n < 1:
        raise ValueError("need at least one node")
    return _gl(int(n))


def gauss_laguerre(n: int):
    """Nodes and weights for ``int_0^inf e^{-x} f(x) dx``; exact for degree ``2n - 1``."""
    if n < 1:
        raise ValueError("need at least one node")
    return _glag(int(n))


def exact_nodes(degree: int) -> int:
    """Fewest Gauss nodes that integrate a polynomial of ``degree`` exactly."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    return degree // 2 + 1
