"""Frequency response, DC gain, stability, H2 norm and pole-zero cancellation."""

from __future__ import annotations

import math

import numpy as np

from ..numerics import log_trapezoid
from .polynomial import Polynomial
from .systems import FractionalTf, FrequencyResponse, RationalTf

__all__ = [
    "STABILITY_TOL",
    "H2_BAND",
    "H2_POINTS",
    "IntegratingSystemError",
    "H2UndefinedError",
    "freq_response",
    "dc_gain",
    "is_stable",
    "h2_norm",
    "h2_from_samples",
    "h2_grid",
    "minreal",
]

STABILITY_TOL = 1e-9
H2_BAND = (1e-6, 1e6)
H2_POINTS = 4096


class IntegratingSystemError(ValueError):
    """Raised when a DC gain is requested for a system with a pole at the origin."""


class H2UndefinedError(ValueError):
    """Raised when the H2 norm is infinite or undefined."""


def freq_response(sys: RationalTf | FractionalTf, omegas) -> FrequencyResponse:
    """Exact response at ``s = j*omega``; failed points are flagged, not raised."""
    w = np.asarray(omegas, dtype=float)
    if np.any(w <= 0):
        raise ValueError("frequencies must be positive")
    values, valid = sys.evaluate_jw(w)
    return FrequencyResponse(w, values, valid)


def dc_gain(sys: RationalTf | FractionalTf) -> float:
    if isinstance(sys, RationalTf):
        n0, d0 = float(sys.num.coeffs[0]), float(sys.den.coeffs[0])
    else:
        n0 = sum(c for c, e in sys.num_terms if e == 0)
        d0 = sum(c for c, e in sys.den_terms if e == 0)
    if d0 == 0.0:
        raise IntegratingSystemError("integrating system: denominator vanishes at s = 0")
    return n0 / d0


def is_stable(sys: RationalTf, tol: float = STABILITY_TOL) -> bool:
    """True iff every pole has real part below ``-tol``."""
    poles = sys.poles()
    return bool(np.all(poles.real < -tol))


def h2_grid(band=H2_BAND, n: int = H2_POINTS) -> np.ndarray:
    return np.logspace(math.log10(band[0]), math.log10(band[1]), n)


def h2_from_samples(values: np.ndarray, omegas: np.ndarray) -> float:
    """H2 norm from ``P(j*omega)`` samples on a positive grid.

    Trapezoid in omega of ``|P|^2``, doubled for negative frequencies and
    scaled by ``1/(2*pi)``.
    """
    return math.sqrt(float(np.trapezoid(np.abs(values) ** 2, omegas)) / math.pi)


def h2_norm(sys: RationalTf, band=H2_BAND, n: int = H2_POINTS) -> float:
    """H2 norm of a stable, strictly proper, delay-free rational system."""
    if sys.delay:
        raise H2UndefinedError("rationalize the delay before taking an H2 norm")
    if sys.num.is_zero:
        return 0.0
    if not sys.is_strictly_proper():
        raise H2UndefinedError("H2 norm is infinite for a system that is not strictly proper")
    if not is_stable(sys):
        raise H2UndefinedError("H2 norm undefined/infinite: system is unstable")
    num, den = sys.num, sys.den

    def integrand(w):
        s = 1j * w
        return np.abs(num(s) / den(s)) ** 2

    return math.sqrt(log_trapezoid(integrand, band[0], band[1], n).value / math.pi)


def minreal(sys: RationalTf, tol: float = 1e-6) -> RationalTf:
    """Cancel pole/zero pairs closer than ``tol`` relative to the larger magnitude."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if sys.num.is_zero or sys.num.degree == 0 or sys.den.degree == 0:
        return sys
    zeros = list(sys.zeros())
    poles = list(sys.poles())
    kept_zeros = []
    cancelled = False
    for z in zeros:
        best, best_d = None, math.inf
        for i, p in enumerate(poles):
            d = abs(z - p)
            scale = max(abs(z), abs(p))
            if (d == 0 or d < tol * scale) and d < best_d:
                best, best_d = i, d
        if best is None:
            kept_zeros.append(z)
        else:
            poles.pop(best)
            cancelled = True
    if not cancelled:
        return sys
    num = Polynomial.from_roots(np.array(kept_zeros, complex), sys.num.leading)
    den = Polynomial.from_roots(np.array(poles, complex))
    return RationalTf(num, den, sys.delay)
