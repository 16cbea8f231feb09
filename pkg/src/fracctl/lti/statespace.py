"""State-space realization, zero-order-hold simulation and unity-feedback loops."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .approx import DEFAULT_BAND, DEFAULT_OUSTALOUP_ORDER, DEFAULT_PADE_ORDER, rationalize
from .systems import FractionalTf, RationalTf

__all__ = ["StateSpace", "realize", "realize_zpk", "simulate", "ClosedLoop", "closed_loop", "ImproperSystemError"]


class ImproperSystemError(ValueError):
    """Raised when a system with more zeros than poles reaches the simulator."""


@dataclass(frozen=True)
class StateSpace:
    """``x' = A x + B u``, ``y = C x + D u`` (single input, single output)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.size == 0:
            A = np.zeros((0, 0))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n)
        C = np.asarray(self.C, dtype=float).reshape(n)
        if A.shape != (n, n):
            raise ValueError("A must be square")
        for name, arr in (("A", A), ("B", B), ("C", C)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "D", float(self.D))

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.order else np.empty(0, complex)

    def evaluate_jw(self, omegas) -> np.ndarray:
        w = np.atleast_1d(np.asarray(omegas, dtype=float))
        n = self.order
        if n == 0:
            return np.full(w.shape, self.D, dtype=complex)
        eye = np.eye(n)
        out = np.empty(w.shape, dtype=complex)
        for i, wi in enumerate(w):
            out[i] = self.C @ np.linalg.solve(1j * wi * eye - self.A, self.B) + self.D
        return out

    def to_tf(self) -> RationalTf:
        """Transfer function via ``det(sI - A + BC) - det(sI - A)`` over ``det(sI - A)``."""
        if self.order == 0:
            return RationalTf.gain(self.D)
        pa = np.poly(self.A)
        pabc = np.poly(self.A - np.outer(self.B, self.C))
        num = pabc - pa + self.D * pa
        return RationalTf(num[::-1], pa[::-1])

    def series(self, other: "StateSpace") -> "StateSpace":
        """``other`` driven by the output of ``self``."""
        n1, n2 = self.order, other.order
        A = np.zeros((n1 + n2, n1 + n2))
        A[:n1, :n1] = self.A
        A[n1:, n1:] = other.A
        A[n1:, :n1] = np.outer(other.B, self.C)
        B = np.concatenate([self.B, other.B * self.D])
        C = np.concatenate([other.D * self.C, other.C])
        return StateSpace(A, B, C, other.D * self.D)

    def feedback(self) -> "StateSpace":
        """Unity negative feedback around ``self``: ``G/(1+G)``."""
        k = 1.0 + self.D
        if k == 0:
            raise ValueError("algebraic loop: 1 + D = 0")
        A = self.A - np.outer(self.B, self.C) / k
        return StateSpace(A, self.B / k, self.C / k, self.D / k)

    def scaled(self, gain: float) -> "StateSpace":
        return StateSpace(self.A, self.B, self.C * gain, self.D * gain)


def _quadratic_groups(roots: np.ndarray, pair_reals: bool = True) -> list[np.ndarray]:
    """Group roots into real-coefficient factors: conjugate pairs, then real
    roots paired up (or left single when ``pair_reals`` is false)."""
    roots = np.asarray(roots, dtype=complex)
    tol = 1e-9
    real_mask = np.abs(roots.imag) <= tol * np.maximum(1.0, np.abs(roots))
    reals = np.sort(roots[real_mask].real)
    upper = roots[~real_mask & (roots.imag > 0)]
    upper = upper[np.argsort(np.abs(upper))]
    groups = [np.array([r, np.conj(r)]) for r in upper]
    if not pair_reals:
        return groups + [np.array([r], dtype=complex) for r in reals]
    for i in range(0, len(reals) - 1, 2):
        groups.append(np.array([reals[i], reals[i + 1]], dtype=complex))
    if len(reals) % 2:
        groups.append(np.array([reals[-1]], dtype=complex))
    return groups


def _unit_factor(roots: np.ndarray) -> tuple[np.ndarray, float]:
    """Ascending coefficients of ``prod(s - r)`` scaled to unit value at ``s = 0``
    when no root sits at the origin, plus the scale removed."""
    c = np.real(np.polynomial.polynomial.polyfromroots(roots))
    c0 = c[0]
    if abs(c0) > 1e-300 and np.all(np.abs(roots) > 0):
        return c / c0, c0
    return c, 1.0


def _section(num: np.ndarray, den: np.ndarray) -> StateSpace:
    """Controllable canonical form of a section of degree one or two."""
    lead = den[-1]
    num = np.pad(num, (0, len(den) - len(num))) / lead
    den = den / lead
    m = len(den) - 1
    d = num[m]
    b = num[:m] - d * den[:m]
    if m == 1:
        return StateSpace([[-den[0]]], [1.0], [b[0]], d)
    A = np.array([[0.0, 1.0], [-den[0], -den[1]]])
    return StateSpace(A, [0.0, 1.0], b, d)


def realize(sys: RationalTf) -> StateSpace:
    """Cascade of first/second-order sections built from the poles and zeros.

    Working from roots keeps each section small and well scaled even when
    the poles span many decades, which a single companion form cannot.
    """
    if not sys.is_proper():
        raise ImproperSystemError("system is improper; rationalize it (band-limit derivatives) before simulating")
    if sys.delay:
        raise ValueError("rationalize the delay before realizing")
    if sys.num.is_zero:
        return StateSpace(np.zeros((0, 0)), [], [], 0.0)
    return realize_zpk(sys.zeros(), sys.poles(), sys.num.leading)


def realize_zpk(zeros, poles, gain: float) -> StateSpace:
    """Cascade realization of ``gain * prod(s - z) / prod(s - p)``."""
    zeros = np.asarray(zeros, dtype=complex)
    poles = np.asarray(poles, dtype=complex)
    if zeros.size > poles.size:
        raise ImproperSystemError("system is improper; rationalize it (band-limit derivatives) before simulating")
    if poles.size == 0:
        return StateSpace(np.zeros((0, 0)), [], [], gain)
    pole_groups = _quadratic_groups(poles)
    # conjugate zero pairs come first; each fits a whole degree-two slot
    zero_groups = _quadratic_groups(zeros, pair_reals=False)
    cap = [len(g) for g in pole_groups]
    assigned: list[list[np.ndarray]] = [[] for _ in pole_groups]
    logmag = [math.log10(max(np.abs(g).max(), 1e-300)) for g in pole_groups]
    for zg in zero_groups:
        lz = math.log10(max(np.abs(zg).max(), 1e-300))
        options = [i for i in range(len(pole_groups)) if cap[i] >= len(zg)]
        i = min(options, key=lambda j: abs(logmag[j] - lz))
        assigned[i].append(zg)
        cap[i] -= len(zg)
    gain = float(gain)
    out = None
    for pg, zs in zip(pole_groups, assigned):
        zr = np.concatenate(zs) if zs else np.empty(0, complex)
        nc, ns = _unit_factor(zr) if zr.size else (np.array([1.0]), 1.0)
        dc, ds = _unit_factor(pg)
        gain *= ns / ds
        sec = _section(nc, dc)
        out = sec if out is None else out.series(sec)
    return out.scaled(gain)


def _zoh(ss: StateSpace, Ts: float) -> tuple[np.ndarray, np.ndarray]:
    n = ss.order
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = ss.A
    M[:n, n] = ss.B
    E = expm(M * Ts)
    return E[:n, :n], E[:n, n]


def simulate(sys: RationalTf | StateSpace, u, Ts: float) -> np.ndarray:
    """Zero-initial-state response to a zero-order-held input.

    ``y[k]`` is the output at ``t = k*Ts``. A delay on a rational system
    must be a whole number of samples; otherwise rationalize it first.
    """
    if Ts <= 0:
        raise ValueError("sampling period must be positive")
    u = np.asarray(u, dtype=float)
    shift = 0
    if isinstance(sys, RationalTf):
        if sys.delay:
            shift = int(round(sys.delay / Ts))
            if abs(shift * Ts - sys.delay) > 1e-9 * max(Ts, sys.delay):
                raise ValueError("delay is not a whole number of samples; rationalize it first")
        ss = realize(RationalTf(sys.num, sys.den))
    else:
        ss = sys
    if shift:
        u = np.concatenate([np.zeros(min(shift, u.size)), u[: max(u.size - shift, 0)]])
    if ss.order == 0:
        return ss.D * u
    Ad, Bd = _zoh(ss, Ts)
    x = np.zeros(ss.order)
    y = np.empty(u.size)
    C, D = ss.C, ss.D
    for k, uk in enumerate(u):
        y[k] = C @ x + D * uk
        x = Ad @ x + Bd * uk
    return y


@dataclass(frozen=True)
class ClosedLoop:
    """Unity-feedback loop around ``controller * plant``.

    The ``loop``, ``sensitivity`` and ``complementary`` methods evaluate the
    exact fractional expressions; the ``*_ss`` fields are rationalized
    realizations for time simulation.
    """

    plant: FractionalTf
    controller: FractionalTf
    loop_ss: StateSpace = field(repr=False)
    complementary_ss: StateSpace = field(repr=False)
    sensitivity_ss: StateSpace = field(repr=False)

    def loop(self, omegas) -> np.ndarray:
        w = np.asarray(omegas, dtype=float)
        c, _ = self.controller.evaluate_jw(w)
        p, _ = self.plant.evaluate_jw(w)
        return c * p

    def sensitivity(self, omegas) -> np.ndarray:
        return 1.0 / (1.0 + self.loop(omegas))

    def complementary(self, omegas) -> np.ndarray:
        g = self.loop(omegas)
        return g / (1.0 + g)

    def is_stable(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.complementary_ss.poles().real < -tol))


def _as_fractional(sys) -> FractionalTf:
    return sys if isinstance(sys, FractionalTf) else FractionalTf.from_rational(sys)


def closed_loop(
    plant: FractionalTf | RationalTf,
    controller: FractionalTf | RationalTf,
    oustaloup_order: int = DEFAULT_OUSTALOUP_ORDER,
    band=DEFAULT_BAND,
    pade_order: int = DEFAULT_PADE_ORDER,
) -> ClosedLoop:
    plant, controller = _as_fractional(plant), _as_fractional(controller)
    opts = dict(oustaloup_order=oustaloup_order, band=band, pade_order=pade_order)
    c = rationalize(controller, **opts)
    p = rationalize(plant, **opts)
    # realize the product from its factors: the controller alone may be improper
    g = realize_zpk(
        np.concatenate([c.zeros(), p.zeros()]),
        np.concatenate([c.poles(), p.poles()]),
        c.num.leading * p.num.leading,
    )
    t = g.feedback()
    # S = 1 - T shares T's dynamics
    s = StateSpace(t.A, t.B, -t.C, 1.0 - t.D)
    return ClosedLoop(plant, controller, g, t, s)
