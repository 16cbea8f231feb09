"""Bilinear (Tustin) maps between discrete models in ``q^-1`` and continuous models."""

from __future__ import annotations

import numpy as np

from .polynomial import Polynomial
from .systems import RationalTf

__all__ = ["tustin_d2c", "tustin_c2d"]


def _as_poly(p) -> Polynomial:
    return p if isinstance(p, Polynomial) else Polynomial(p)


def _bilinear(coeffs: np.ndarray, n: int, a: Polynomial, b: Polynomial) -> Polynomial:
    """``sum c_k a^k b^(n-k)``: substitute ``x = a/b`` and clear ``b^n``."""
    out = Polynomial([0.0])
    for k, c in enumerate(coeffs):
        if c:
            out = out + c * (a**k) * (b ** (n - k))
    return out


def tustin_d2c(discrete_num, discrete_den, Ts: float) -> RationalTf:
    """Continuous equivalent of ``B(q^-1)/A(q^-1)`` under ``z = (1 + s*Ts/2)/(1 - s*Ts/2)``.

    Coefficients are ascending in ``q^-1``. DC gain is preserved exactly.
    """
    if Ts <= 0:
        raise ValueError("sampling period must be positive")
    num, den = _as_poly(discrete_num), _as_poly(discrete_den)
    if den.is_zero:
        raise ValueError("discrete denominator is identically zero")
    scale = float(np.sum(np.abs(den.coeffs)))
    if abs(den(-1.0)) <= 1e-12 * scale:
        raise ValueError("discrete pole at z = -1 maps to infinite frequency")
    n = max(num.degree, den.degree)
    h = Ts / 2.0
    a = Polynomial([1.0, -h])  # 1 - s*Ts/2  (q^-1 numerator)
    b = Polynomial([1.0, h])
    return RationalTf(_bilinear(num.coeffs, n, a, b), _bilinear(den.coeffs, n, a, b))


def tustin_c2d(sys: RationalTf, Ts: float) -> tuple[Polynomial, Polynomial]:
    """Discrete ``(B, A)`` in ``q^-1`` with ``A[0] = 1`` under ``s = (2/Ts)(1 - q^-1)/(1 + q^-1)``.

    A delay that is an integer number of samples becomes a ``q^-d`` factor.
    """
    if Ts <= 0:
        raise ValueError("sampling period must be positive")
    d = 0
    if sys.delay:
        d = int(round(sys.delay / Ts))
        if abs(d * Ts - sys.delay) > 1e-9 * max(Ts, sys.delay):
            raise ValueError("delay is not an integer number of samples")
    n = max(sys.num.degree, sys.den.degree)
    a = Polynomial([2.0 / Ts, -2.0 / Ts])
    b = Polynomial([1.0, 1.0])
    num = _bilinear(sys.num.coeffs, n, a, b)
    den = _bilinear(sys.den.coeffs, n, a, b)
    lead = den.coeffs[0]
    if lead == 0:
        raise ValueError("continuous pole at s = 2/Ts maps to z = infinity")
    return (num / lead).shift(d), den / lead
