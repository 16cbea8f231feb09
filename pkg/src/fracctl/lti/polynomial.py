from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from ..numerics import poly_roots


class Polynomial:
    """Real polynomial stored with ascending powers.

    Trailing (highest-power) zeros are trimmed on construction so that
    ``degree == len(coeffs) - 1`` and the leading coefficient is nonzero,
    except for the zero polynomial which is stored as ``[0.0]``.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[float] | float):
        c = np.array(coeffs, dtype=float, ndmin=1)
        if c.ndim != 1:
            raise ValueError("polynomial coefficients must be one-dimensional")
        if not np.isfinite(c).all():
            raise ValueError("polynomial coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        c.setflags(write=False)
        self._c = c

    @classmethod
    def from_roots(cls, roots: Sequence[complex], gain: float = 1.0) -> "Polynomial":
        if len(roots) == 0:
            return cls([gain])
        c = np.poly(np.asarray(roots, dtype=complex))[::-1]
        return cls(gain * np.real(c))

    @classmethod
    def monomial(cls, n: int, coeff: float = 1.0) -> "Polynomial":
        c = np.zeros(n + 1)
        c[n] = coeff
        return cls(c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return self._c.size - 1

    @property
    def leading(self) -> float:
        return float(self._c[-1])

    @property
    def is_zero(self) -> bool:
        return self._c.size == 1 and self._c[0] == 0.0

    def __call__(self, x):
        c = self._c
        x = np.asarray(x)
        out = np.full(x.shape, c[-1], dtype=np.result_type(x, float))
        for a in c[-2::-1]:
            out *= x
            out += a
        return out

    def roots(self) -> np.ndarray:
        return poly_roots(self._c)

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        if np.isscalar(other):
            return Polynomial([float(other)])
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Polynomial(_padd(self._c, o._c))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Polynomial(_padd(self._c, -o._c))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Polynomial(np.convolve(self._c, o._c))

    __rmul__ = __mul__

    def __truediv__(self, k: float) -> "Polynomial":
        return Polynomial(self._c / float(k))

    def __neg__(self) -> "Polynomial":
        return Polynomial(-self._c)

    def __pow__(self, n: int) -> "Polynomial":
        out = Polynomial([1.0])
        for _ in range(int(n)):
            out = out * self
        return out

    def divmod(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        q, r = P.polydiv(self._c, other._c)
        return Polynomial(q), Polynomial(r)

    def shift(self, n: int) -> "Polynomial":
        """Multiply by ``x**n``."""
        if n == 0 or self.is_zero:
            return self
        return Polynomial(np.concatenate([np.zeros(n), self._c]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(np.all(self._c == other._c))

    def __hash__(self) -> int:
        return hash(self._c.tobytes())

    def allclose(self, other: "Polynomial", rtol: float = 1e-9, atol: float = 0.0) -> bool:
        a, b = self._c, other._c
        n = max(a.size, b.size)
        a = np.pad(a, (0, n - a.size))
        b = np.pad(b, (0, n - b.size))
        return bool(np.allclose(a, b, rtol=rtol, atol=atol))

    def __repr__(self) -> str:
        return f"Polynomial({self._c.tolist()})"


def _padd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.size < b.size:
        a, b = b, a
    out = a.copy()
    out[: b.size] += b
    return out
