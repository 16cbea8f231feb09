"""Rational approximants of fractional powers and pure delays."""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .polynomial import Polynomial
from .systems import FractionalTf, RationalTf

__all__ = [
    "DEFAULT_BAND",
    "DEFAULT_OUSTALOUP_ORDER",
    "DEFAULT_PADE_ORDER",
    "NEGLIGIBLE_DELAY",
    "split_order",
    "oustaloup",
    "pade_delay",
    "rationalize",
]

DEFAULT_BAND = (1e-4, 1e4)
DEFAULT_OUSTALOUP_ORDER = 4
DEFAULT_PADE_ORDER = 3
# Delays below this are reported (and rationalized) as zero.
NEGLIGIBLE_DELAY = 1e-6
_INTEGER_TOL = 1e-12


def split_order(alpha: float) -> tuple[int, float]:
    """Split ``alpha = n + gamma`` with ``n`` truncated toward zero, ``|gamma| < 1``."""
    n = int(math.trunc(alpha))
    gamma = float(alpha - n)
    if abs(gamma) < _INTEGER_TOL:
        gamma = 0.0
    return n, gamma


def _check_band(band) -> tuple[float, float]:
    lo, hi = (float(b) for b in band)
    if not (0 < lo < hi):
        raise ValueError(f"degenerate approximation band {band!r}")
    return lo, hi


def _oustaloup_roots(gamma: float, order: int, band) -> tuple[np.ndarray, np.ndarray, float]:
    lo, hi = band
    k = np.arange(-order, order + 1)
    span = hi / lo
    m = 2 * order + 1
    zeros = -lo * span ** ((k + order + 0.5 * (1 - gamma)) / m)
    poles = -lo * span ** ((k + order + 0.5 * (1 + gamma)) / m)
    wc = math.sqrt(lo * hi)
    s = 1j * wc
    gain = wc**gamma / abs(np.prod((s - zeros) / (s - poles)))
    return zeros, poles, gain


def _oustaloup_factors(gamma: float, order: int, band) -> tuple[Polynomial, Polynomial]:
    zeros, poles, gain = _oustaloup_roots(gamma, order, band)
    return Polynomial.from_roots(zeros, gain), Polynomial.from_roots(poles)


def oustaloup(alpha: float, order: int = DEFAULT_OUSTALOUP_ORDER, band=DEFAULT_BAND) -> RationalTf:
    """Band-limited rational approximant of ``s**alpha``.

    The fractional part ``gamma`` of ``alpha`` (truncated toward zero) is
    approximated by Oustaloup's recursive filter with ``2*order + 1``
    pole/zero pairs spread geometrically over ``band``. The gain makes the
    magnitude exact at the geometric band centre. The integer part
    multiplies (or divides) by ``s**n`` exactly.
    """
    if order < 1:
        raise ValueError("Oustaloup order must be at least 1")
    band = _check_band(band)
    n, gamma = split_order(alpha)
    poles = np.empty(0, complex)
    if gamma == 0.0:
        num, den = Polynomial([1.0]), Polynomial([1.0])
    else:
        zeros, poles, gain = _oustaloup_roots(gamma, order, band)
        num, den = Polynomial.from_roots(zeros, gain), Polynomial.from_roots(poles)
    if n > 0:
        num = num.shift(n)
    elif n < 0:
        den = den.shift(-n)
        poles = np.concatenate([poles, np.zeros(-n)])
    out = RationalTf(num, den)
    out._poles = poles.astype(complex)
    return out


def pade_delay(L: float, order: int = DEFAULT_PADE_ORDER) -> RationalTf:
    """All-pass Pade approximant of ``exp(-L*s)``.

    The numerator is the denominator evaluated at ``-s``, so the magnitude
    on the imaginary axis is exactly one.
    """
    L = float(L)
    if L < 0 or not math.isfinite(L):
        raise ValueError(f"delay must be non-negative, got {L}")
    if order < 1:
        raise ValueError("Pade order must be at least 1")
    if L == 0.0:
        return RationalTf.gain(1.0)
    n = order
    den = np.array(
        [
            math.factorial(2 * n - k) * math.factorial(n) / (math.factorial(2 * n) * math.factorial(k) * math.factorial(n - k)) * L**k
            for k in range(n + 1)
        ]
    )
    num = den * (-1.0) ** np.arange(n + 1)
    return RationalTf(num, den)


def _add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.size < b.size:
        a, b = b, a
    out = a.copy()
    out[: b.size] += b
    return out


def _shift(c: np.ndarray, n: int) -> np.ndarray:
    return np.concatenate([np.zeros(n), c]) if n else c


def _rationalize_sum(terms, order, band, cache):
    """Rational form of ``sum c*s^e``: ascending numerator coefficients and the
    Oustaloup denominator factor per fractional part (keyed by ``gamma``)."""
    groups: dict[float, list[tuple[float, int]]] = defaultdict(list)
    for c, e in terms:
        n, gamma = split_order(e)
        groups[gamma].append((c, n))
    facts = {}
    parts = []
    for gamma, items in groups.items():
        if gamma == 0.0:
            num = np.ones(1)
        else:
            if gamma not in cache:
                zeros, poles, gain = _oustaloup_roots(gamma, order, band)
                cache[gamma] = (gain * np.poly(zeros)[::-1].real, np.poly(poles)[::-1].real)
            num, facts[gamma] = cache[gamma]
        poly = np.zeros(1)
        for c, n in items:
            poly = _add(poly, _shift(c * num, n))
        parts.append((gamma, poly))
    total = np.zeros(1)
    for gamma, poly in parts:
        for other, den in facts.items():
            if other != gamma:
                poly = np.convolve(poly, den)
        total = _add(total, poly)
    return total, facts


def rationalize(
    sys,
    oustaloup_order: int = DEFAULT_OUSTALOUP_ORDER,
    band=DEFAULT_BAND,
    pade_order: int = DEFAULT_PADE_ORDER,
) -> RationalTf:
    """Replace every fractional power by its Oustaloup approximant and the
    delay by its Pade approximant.

    Oustaloup denominators shared between numerator and denominator sums
    cancel exactly. Delays below ``NEGLIGIBLE_DELAY`` are dropped; an
    integer-order, delay-free system is returned unchanged.
    """
    band = _check_band(band)
    if isinstance(sys, RationalTf):
        base = RationalTf(sys.num, sys.den)
        delay = sys.delay
    else:
        if sys.is_integer_order() and sys.delay == 0:
            return sys.to_rational()
        cache: dict = {}
        a, b = _rationalize_sum(sys.num_terms, oustaloup_order, band, cache)
        c, d = _rationalize_sum(sys.den_terms, oustaloup_order, band, cache)
        common = set(b) & set(d)
        num, den = a, c
        for gamma, poly in d.items():
            if gamma not in common:
                num = np.convolve(num, poly)
        for gamma, poly in b.items():
            if gamma not in common:
                den = np.convolve(den, poly)
        base = RationalTf(num, den)
        delay = sys.delay
    if delay < NEGLIGIBLE_DELAY:
        return base
    return base * pade_delay(delay, pade_order)
