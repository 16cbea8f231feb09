"""Integer- and fractional-order SISO transfer functions with pure delay."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .polynomial import Polynomial

__all__ = ["RationalTf", "FractionalTf", "FrequencyResponse", "Term"]

Term = tuple[float, float]


def _check_delay(delay: float) -> float:
    delay = float(delay)
    if not math.isfinite(delay) or delay < 0:
        raise ValueError(f"delay must be finite and non-negative, got {delay}")
    return delay


@dataclass(frozen=True)
class FrequencyResponse:
    """Complex response samples; ``valid`` flags points where evaluation failed."""

    omegas: np.ndarray
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float)
        if w.shape != np.shape(self.values):
            raise ValueError("omegas and values must have the same length")
        if np.any(w <= 0):
            raise ValueError("frequencies must be positive")
        if w.size > 1 and np.any(np.diff(w) <= 0):
            raise ValueError("frequencies must be strictly increasing")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def magnitude_db(self) -> np.ndarray:
        return 20.0 * np.log10(np.abs(self.values))

    @property
    def phase(self) -> np.ndarray:
        """Unwrapped phase in radians."""
        return np.unwrap(np.angle(self.values))


class RationalTf:
    """``num(s)/den(s) * exp(-delay*s)`` with a monic denominator.

    Parameters
    ----------
    num, den
        Polynomials or ascending coefficient sequences.
    delay
        Pure input delay in seconds.
    """

    __slots__ = ("_num", "_den", "_delay", "_poles", "_zeros")

    def __init__(self, num, den=(1.0,), delay: float = 0.0):
        num = num if isinstance(num, Polynomial) else Polynomial(num)
        den = den if isinstance(den, Polynomial) else Polynomial(den)
        if den.is_zero:
            raise ValueError("denominator is identically zero")
        if num.is_zero:
            den = Polynomial([1.0])
        lead = den.leading
        if lead != 1.0:
            num, den = num / lead, den / lead
        self._num = num
        self._den = den
        self._delay = _check_delay(delay)
        self._poles = None
        self._zeros = None

    num = property(lambda self: self._num)
    den = property(lambda self: self._den)
    delay = property(lambda self: self._delay)

    @classmethod
    def gain(cls, k: float) -> "RationalTf":
        return cls([k], [1.0])

    @classmethod
    def s(cls) -> "RationalTf":
        return cls([0.0, 1.0], [1.0])

    def with_delay(self, delay: float) -> "RationalTf":
        return RationalTf(self._num, self._den, delay)

    @property
    def order(self) -> int:
        return self._den.degree

    @property
    def relative_degree(self) -> int:
        return self._den.degree - self._num.degree if not self._num.is_zero else self._den.degree + 1

    def is_proper(self) -> bool:
        return self._num.is_zero or self._num.degree <= self._den.degree

    def is_strictly_proper(self) -> bool:
        return self._num.is_zero or self._num.degree < self._den.degree

    def poles(self) -> np.ndarray:
        if self._poles is None:
            self._poles = self._den.roots()
        return self._poles

    def zeros(self) -> np.ndarray:
        if self._zeros is None:
            self._zeros = np.empty(0, complex) if self._num.is_zero else self._num.roots()
        return self._zeros

    def feedthrough(self) -> float:
        """Value at ``s -> inf`` of the delay-free part (proper systems)."""
        if not self.is_proper():
            raise ValueError("improper system has no finite high-frequency gain")
        if self._num.degree < self._den.degree or self._num.is_zero:
            return 0.0
        return self._num.leading / self._den.leading

    def strictly_proper_part(self) -> "RationalTf":
        d = self.feedthrough()
        if d == 0.0:
            return self
        return RationalTf(self._num - d * self._den, self._den, self._delay)

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        val = self._num(s) / self._den(s)
        if self._delay:
            val = val * np.exp(-self._delay * s)
        return val

    def evaluate_jw(self, omegas) -> tuple[np.ndarray, np.ndarray]:
        w = np.asarray(omegas, dtype=float)
        s = 1j * w
        d = self._den(s)
        valid = d != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(valid, self._num(s) / np.where(valid, d, 1.0), np.nan + 0j)
        if self._delay:
            val = val * np.exp(-1j * w * self._delay)
        return val, valid

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, RationalTf):
            return other
        if np.isscalar(other):
            return RationalTf.gain(float(other))
        return NotImplemented

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        out = RationalTf(self._num * o._num, self._den * o._den, self._delay + o._delay)
        if self._poles is not None and o._poles is not None:
            out._poles = np.concatenate([self._poles, o._poles])
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o._delay:
            raise ValueError("cannot divide by a system with delay")
        return RationalTf(self._num * o._den, self._den * o._num, self._delay)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self._delay != o._delay:
            raise ValueError("sum of systems with different delays is not rational")
        if self._den == o._den:
            return RationalTf(self._num + o._num, self._den, self._delay)
        return RationalTf(self._num * o._den + o._num * self._den, self._den * o._den, self._delay)

    __radd__ = __add__

    def __neg__(self):
        return RationalTf(-self._num, self._den, self._delay)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __repr__(self) -> str:
        tail = f", delay={self._delay!r}" if self._delay else ""
        return f"RationalTf(num={self._num.coeffs.tolist()}, den={self._den.coeffs.tolist()}{tail})"


def _canonical_terms(terms: Iterable[Sequence[float]], tol: float = 1e-12) -> tuple[Term, ...]:
    merged: dict[float, float] = {}
    for c, e in terms:
        c, e = float(c), float(e)
        if not (math.isfinite(c) and math.isfinite(e)):
            raise ValueError("terms must be finite")
        if e < 0:
            raise ValueError(f"exponents must be non-negative, got {e}")
        key = next((k for k in merged if abs(k - e) <= tol), e)
        merged[key] = merged.get(key, 0.0) + c
    return tuple(sorted(((c, e) for e, c in merged.items() if c != 0.0), key=lambda t: -t[1]))


class FractionalTf:
    """Pseudo-rational ``sum a_i s^alpha_i / sum b_j s^beta_j * exp(-delay*s)``.

    Terms are ``(coefficient, exponent)`` pairs; duplicates are merged and
    the exponents kept strictly decreasing. Fractional powers use the
    principal branch.
    """

    __slots__ = ("_num", "_den", "_delay")

    def __init__(self, num_terms: Iterable[Sequence[float]], den_terms: Iterable[Sequence[float]], delay: float = 0.0):
        self._num = _canonical_terms(num_terms)
        self._den = _canonical_terms(den_terms)
        if not self._den:
            raise ValueError("denominator needs at least one nonzero term")
        self._delay = _check_delay(delay)

    num_terms = property(lambda self: self._num)
    den_terms = property(lambda self: self._den)
    delay = property(lambda self: self._delay)

    @classmethod
    def from_rational(cls, sys: RationalTf) -> "FractionalTf":
        return cls(
            [(c, k) for k, c in enumerate(sys.num.coeffs)],
            [(c, k) for k, c in enumerate(sys.den.coeffs)],
            sys.delay,
        )

    @classmethod
    def gain(cls, k: float) -> "FractionalTf":
        return cls([(k, 0.0)], [(1.0, 0.0)])

    def is_integer_order(self) -> bool:
        return all(float(e).is_integer() for _, e in self._num + self._den)

    def to_rational(self) -> RationalTf:
        if not self.is_integer_order():
            raise ValueError("system has non-integer exponents; use rationalize()")
        return RationalTf(_terms_to_coeffs(self._num), _terms_to_coeffs(self._den), self._delay)

    def with_delay(self, delay: float) -> "FractionalTf":
        return FractionalTf(self._num, self._den, delay)

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        n = sum((c * s**e for c, e in self._num), np.zeros_like(s))
        d = sum((c * s**e for c, e in self._den), np.zeros_like(s))
        val = n / d
        if self._delay:
            val = val * np.exp(-self._delay * s)
        return val

    def evaluate_jw(self, omegas) -> tuple[np.ndarray, np.ndarray]:
        w = np.asarray(omegas, dtype=float)
        n = _terms_jw(self._num, w)
        d = _terms_jw(self._den, w)
        valid = d != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(valid, n / np.where(valid, d, 1.0), np.nan + 0j)
        if self._delay:
            val = val * np.exp(-1j * w * self._delay)
        return val, valid

    def _coerce(self, other):
        if isinstance(other, FractionalTf):
            return other
        if isinstance(other, RationalTf):
            return FractionalTf.from_rational(other)
        if np.isscalar(other):
            return FractionalTf.gain(float(other))
        return NotImplemented

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FractionalTf(_terms_mul(self._num, o._num), _terms_mul(self._den, o._den), self._delay + o._delay)

    __rmul__ = __mul__

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self._delay != o._delay:
            raise ValueError("sum of systems with different delays is not pseudo-rational")
        if self._den == o._den:
            return FractionalTf(self._num + o._num, self._den, self._delay)
        num = _terms_mul(self._num, o._den) + _terms_mul(o._num, self._den)
        return FractionalTf(num, _terms_mul(self._den, o._den), self._delay)

    __radd__ = __add__

    def __neg__(self):
        return FractionalTf([(-c, e) for c, e in self._num], self._den, self._delay)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def reciprocal(self) -> "FractionalTf":
        if self._delay:
            raise ValueError("reciprocal of a delayed system is non-causal")
        if not self._num:
            raise ValueError("reciprocal of the zero system")
        return FractionalTf(self._den, self._num)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.reciprocal()

    def __repr__(self) -> str:
        tail = f", delay={self._delay!r}" if self._delay else ""
        return f"FractionalTf(num_terms={list(self._num)}, den_terms={list(self._den)}{tail})"


def _terms_jw(terms: tuple[Term, ...], w: np.ndarray) -> np.ndarray:
    out = np.zeros(w.shape, dtype=complex)
    for c, e in terms:
        if e == 0:
            out += c
        elif float(e).is_integer():
            out += c * w**e * _J_POWERS[int(e) % 4]
        else:
            out += c * w**e * np.exp(0.5j * math.pi * e)
    return out


_J_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def _terms_mul(a: tuple[Term, ...], b: tuple[Term, ...]) -> list[Term]:
    return [(ca * cb, ea + eb) for ca, ea in a for cb, eb in b]


def _terms_to_coeffs(terms: tuple[Term, ...]) -> np.ndarray:
    if not terms:
        return np.zeros(1)
    deg = int(round(max(e for _, e in terms)))
    c = np.zeros(deg + 1)
    for coef, e in terms:
        c[int(round(e))] += coef
    return c
