"""Least-squares and prediction-error identification of discrete models.

The general structure is ``A y = B/F u + C/D e`` with every polynomial in
the backward shift ``q^-1`` (ascending coefficients). ``A, C, D, F`` are
monic; ``B`` carries ``nk`` leading zeros for the input delay.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import lfilter

from .lti.analysis import is_stable
from .lti.discrete import tustin_c2d
from .lti.polynomial import Polynomial
from .lti.statespace import simulate
from .lti.systems import RationalTf

__all__ = [
    "Structure",
    "DataRecord",
    "EstimatorSpec",
    "IdentifiedModel",
    "NoiseSpec",
    "SweepEntry",
    "SingularRegressorError",
    "estimate",
    "estimate_arx",
    "estimate_pem",
    "aic",
    "order_sweep",
    "generate_stepback_data",
    "stepback_input",
]


class Structure(str, enum.Enum):
    ARX = "ARX"
    ARMAX = "ARMAX"
    BJ = "BJ"
    OE = "OE"


_ACTIVE = {
    Structure.ARX: {"na", "nb"},
    Structure.ARMAX: {"na", "nb", "nc"},
    Structure.OE: {"nb", "nf"},
    Structure.BJ: {"nb", "nc", "nd", "nf"},
}


class SingularRegressorError(ValueError):
    """The regressor Gram matrix is rank deficient (insufficient excitation)."""


@dataclass(frozen=True)
class DataRecord:
    """Uniformly sampled input ``u`` and output ``y`` with period ``Ts``."""

    Ts: float
    u: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float, ndmin=1)
        y = np.array(self.y, dtype=float, ndmin=1)
        if not (self.Ts > 0):
            raise ValueError("sampling period must be positive")
        if u.shape != y.shape or u.ndim != 1:
            raise ValueError("u and y must be one-dimensional with equal length")
        if np.isnan(u).any() or np.isnan(y).any():
            raise ValueError("data contains NaN")
        u.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "Ts", float(self.Ts))

    @property
    def N(self) -> int:
        return self.u.size

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.N) * self.Ts


@dataclass(frozen=True)
class EstimatorSpec:
    """Model structure and orders.

    ``nb`` counts numerator parameters and ``nk`` is the input delay in
    samples, so ``B = q^-nk (b0 + b1 q^-1 + ... )`` with ``nb`` terms.
    """

    structure: Structure
    na: int = 0
    nb: int = 1
    nc: int = 0
    nd: int = 0
    nf: int = 0
    nk: int = 1

    def __post_init__(self):
        object.__setattr__(self, "structure", Structure(self.structure))
        for name in ("na", "nb", "nc", "nd", "nf", "nk"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer")
            object.__setattr__(self, name, int(v))
        active = _ACTIVE[self.structure]
        for name in ("na", "nc", "nd", "nf"):
            if name not in active and getattr(self, name):
                raise ValueError(f"{name} must be zero for the {self.structure.value} structure")
        if self.nb < 1:
            raise ValueError("nb must be at least 1")

    @property
    def n_params(self) -> int:
        return self.na + self.nb + self.nc + self.nd + self.nf

    @property
    def max_lag(self) -> int:
        return max(self.na, self.nk + self.nb - 1, self.nc, self.nd, self.nf)

    def label(self) -> str:
        orders = ",".join(f"{n}={getattr(self, n)}" for n in ("na", "nb", "nc", "nd", "nf", "nk") if n in _ACTIVE[self.structure] or n == "nk")
        return f"{self.structure.value}({orders})"


@dataclass
class IdentifiedModel:
    spec: EstimatorSpec
    Ts: float
    A: Polynomial
    B: Polynomial
    C: Polynomial
    D: Polynomial
    F: Polynomial
    residuals: np.ndarray
    V: float
    aic: float | None
    converged: bool = True
    iterations: int = 0
    message: str = ""

    @property
    def system_num(self) -> Polynomial:
        return self.B

    @property
    def system_den(self) -> Polynomial:
        return self.A * self.F

    @property
    def noise_num(self) -> Polynomial:
        return self.C

    @property
    def noise_den(self) -> Polynomial:
        return self.A * self.D

    def to_dict(self) -> dict:
        s = self.spec
        return {
            "structure": s.structure.value,
            "orders": {"na": s.na, "nb": s.nb, "nc": s.nc, "nd": s.nd, "nf": s.nf, "nk": s.nk},
            "Ts": self.Ts,
            "coeffs": {k: getattr(self, k).coeffs.tolist() for k in ("A", "B", "C", "D", "F")},
            "V": self.V,
            "aic": self.aic,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IdentifiedModel":
        spec = EstimatorSpec(Structure(d["structure"]), **d["orders"])
        polys = {k: Polynomial(v) for k, v in d["coeffs"].items()}
        return cls(spec, float(d["Ts"]), residuals=np.empty(0), V=float(d["V"]), aic=d.get("aic"),
                   converged=bool(d.get("converged", True)), iterations=int(d.get("iterations", 0)), **polys)


# --------------------------------------------------------------------------
# AIC


def aic(model: IdentifiedModel, N: int | None = None) -> float:
    """``ln V + 2 d / N``; stores the value on the model."""
    if model.V <= 0:
        raise ValueError("AIC undefined for a perfect fit (V = 0)")
    N = model.residuals.size if N is None else int(N)
    if N <= 0:
        raise ValueError("N must be positive")
    model.aic = math.log(model.V) + 2.0 * model.spec.n_params / N
    return model.aic


def _finish(model: IdentifiedModel) -> IdentifiedModel:
    if model.V > 0 and model.residuals.size:
        aic(model)
    else:
        model.aic = None
    return model


# --------------------------------------------------------------------------
# ARX


def _check_length(data: DataRecord, spec: EstimatorSpec) -> None:
    if data.N < spec.max_lag + spec.n_params + 1:
        raise ValueError(f"record of {data.N} samples is too short for {spec.label()}")


def _arx_regressors(y: np.ndarray, u: np.ndarray, na: int, nb: int, nk: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``phi(t) = [-y(t-1)..-y(t-na), u(t-nk)..u(t-nk-nb+1)]`` for ``t >= start``."""
    N = y.size
    t = np.arange(start, N)
    cols = [-y[t - i] for i in range(1, na + 1)]
    cols += [u[t - nk - j] for j in range(nb)]
    return np.column_stack(cols) if cols else np.empty((t.size, 0)), y[start:]


def estimate_arx(data: DataRecord, spec: EstimatorSpec) -> IdentifiedModel:
    """Least-squares ARX fit from the normal equations."""
    if spec.structure is not Structure.ARX:
        raise ValueError("estimate_arx needs an ARX spec")
    _check_length(data, spec)
    start = spec.max_lag
    Phi, Y = _arx_regressors(data.y, data.u, spec.na, spec.nb, spec.nk, start)
    G = Phi.T @ Phi
    rank = np.linalg.matrix_rank(G)
    if rank < G.shape[0]:
        raise SingularRegressorError(
            f"regressor Gram matrix is singular (rank {rank} of {G.shape[0]}): the input does not excite the model"
        )
    theta = np.linalg.solve(G, Phi.T @ Y)
    eps = Y - Phi @ theta
    A = Polynomial(np.concatenate([[1.0], theta[: spec.na]]))
    B = Polynomial(np.concatenate([np.zeros(spec.nk), theta[spec.na :]]))
    one = Polynomial([1.0])
    V = float(np.mean(eps**2))
    return _finish(IdentifiedModel(spec, data.Ts, A, B, one, one, one, eps, V, None))


# --------------------------------------------------------------------------
# prediction error


def _unpack(theta: np.ndarray, spec: EstimatorSpec):
    i = 0
    out = {}
    for name in ("na", "nb", "nc", "nd", "nf"):
        n = getattr(spec, name)
        out[name] = theta[i : i + n]
        i += n
    a = np.concatenate([[1.0], out["na"]])
    b = np.concatenate([np.zeros(spec.nk), out["nb"]])
    c = np.concatenate([[1.0], out["nc"]])
    d = np.concatenate([[1.0], out["nd"]])
    f = np.concatenate([[1.0], out["nf"]])
    return a, b, c, d, f


def _prediction_errors(theta: np.ndarray, spec: EstimatorSpec, y: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``e = D/C (A y - B/F u)`` from zero initial conditions, for ``t >= max_lag``."""
    a, b, c, d, f = _unpack(theta, spec)
    w = lfilter(a, [1.0], y) - lfilter(b, f, u)
    e = lfilter(d, c, w)
    return e[spec.max_lag :]


def _reflect_monic(coeffs: np.ndarray) -> np.ndarray:
    """Mirror roots (in ``z``) outside the unit circle to their inverse conjugates."""
    if coeffs.size <= 1:
        return coeffs
    r = np.roots(coeffs)
    out = np.abs(r) > 1.0
    if not out.any():
        return coeffs
    r[out] = 1.0 / np.conj(r[out])
    return np.real(np.poly(r))


def _project(theta: np.ndarray, spec: EstimatorSpec) -> np.ndarray:
    theta = theta.copy()
    offs = {}
    i = 0
    for name in ("na", "nb", "nc", "nd", "nf"):
        offs[name] = (i, i + getattr(spec, name))
        i = offs[name][1]
    for name in ("nc", "nf"):
        lo, hi = offs[name]
        if hi > lo:
            theta[lo:hi] = _reflect_monic(np.concatenate([[1.0], theta[lo:hi]]))[1:]
    return theta


def _initial_theta(data: DataRecord, spec: EstimatorSpec) -> np.ndarray:
    den_order = spec.na if spec.structure is Structure.ARMAX else spec.nf
    arx = EstimatorSpec(Structure.ARX, na=den_order, nb=spec.nb, nk=spec.nk)
    try:
        m = estimate_arx(data, arx)
        den = m.A.coeffs[1:]
        den = np.pad(den, (0, den_order - den.size))
        b = m.B.coeffs[spec.nk :]
        b = np.pad(b, (0, spec.nb - b.size))
    except SingularRegressorError:
        raise
    parts = {"na": np.zeros(spec.na), "nb": b, "nc": np.zeros(spec.nc), "nd": np.zeros(spec.nd), "nf": np.zeros(spec.nf)}
    if spec.structure is Structure.ARMAX:
        parts["na"] = den
    else:
        parts["nf"] = _reflect_monic(np.concatenate([[1.0], den]))[1:] if den.size else den
    return np.concatenate([parts[k] for k in ("na", "nb", "nc", "nd", "nf")])


def _jacobian(fun, theta: np.ndarray, r0: np.ndarray) -> np.ndarray:
    J = np.empty((r0.size, theta.size))
    for j in range(theta.size):
        h = 1e-7 * max(1.0, abs(theta[j]))
        tp = theta.copy()
        tp[j] += h
        J[:, j] = (fun(tp) - r0) / h
    return J


def estimate_pem(
    data: DataRecord,
    spec: EstimatorSpec,
    max_iter: int = 200,
    rel_tol: float = 1e-9,
    initial: Sequence[float] | None = None,
) -> IdentifiedModel:
    """Prediction-error fit by Levenberg-Marquardt damped Gauss-Newton.

    Starts from the ARX fit of the system part (noise polynomials zero)
    unless ``initial`` is given. Iterates whose ``C`` or ``F`` has roots
    outside the unit circle are projected back inside.
    """
    if spec.structure is Structure.ARX:
        raise ValueError("use estimate_arx for ARX structures")
    _check_length(data, spec)
    y, u = data.y, data.u

    def fun(th):
        return _prediction_errors(th, spec, y, u)

    theta = _project(np.asarray(initial, float) if initial is not None else _initial_theta(data, spec), spec)
    r = fun(theta)
    V = float(np.mean(r**2))
    mu = 1e-3
    converged = False
    message = "iteration limit reached"
    it = 0
    for it in range(1, max_iter + 1):
        J = _jacobian(fun, theta, r)
        g = J.T @ r
        H = J.T @ J
        diag = np.diag(H).copy()
        diag[diag <= 0] = 1.0
        improved = False
        while mu < 1e12:
            try:
                step = np.linalg.solve(H + mu * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            cand = _project(theta + step, spec)
            rc = fun(cand)
            Vc = float(np.mean(rc**2)) if np.all(np.isfinite(rc)) else math.inf
            if Vc < V:
                improved = True
                break
            mu *= 10.0
        if not improved:
            converged = True
            message = "no further decrease"
            break
        rel = (V - Vc) / V if V > 0 else 0.0
        theta, r, V = cand, rc, Vc
        mu = max(mu / 10.0, 1e-12)
        if rel < rel_tol or V == 0.0:
            converged = True
            message = "relative improvement below tolerance"
            break
    a, b, c, d, f = _unpack(theta, spec)
    model = IdentifiedModel(
        spec, data.Ts, Polynomial(a), Polynomial(b), Polynomial(c), Polynomial(d), Polynomial(f),
        r, V, None, converged, it, message,
    )
    return _finish(model)


def estimate(data: DataRecord, spec: EstimatorSpec) -> IdentifiedModel:
    return estimate_arx(data, spec) if spec.structure is Structure.ARX else estimate_pem(data, spec)


# --------------------------------------------------------------------------
# order selection


@dataclass
class SweepEntry:
    spec: EstimatorSpec
    aic: float | None
    V: float | None
    model: IdentifiedModel | None = field(default=None, repr=False)
    error: str | None = None


def _specs_for(structure: Structure, orders: Iterable[int], noise_order: int, nk: int) -> list[EstimatorSpec]:
    orders = list(orders)
    out = []
    for n_den, n_num in itertools.product(orders, orders):
        if n_num < 1:
            continue
        if structure is Structure.ARX:
            out.append(EstimatorSpec(structure, na=n_den, nb=n_num, nk=nk))
        elif structure is Structure.ARMAX:
            out.append(EstimatorSpec(structure, na=n_den, nb=n_num, nc=noise_order, nk=nk))
        elif structure is Structure.OE:
            out.append(EstimatorSpec(structure, nb=n_num, nf=n_den, nk=nk))
        else:
            out.append(EstimatorSpec(structure, nb=n_num, nf=n_den, nc=noise_order, nd=noise_order, nk=nk))
    return out


def order_sweep(
    data: DataRecord,
    structure: Structure | str | Sequence[Structure | str],
    order_range: Iterable[int],
    noise_order: int = 1,
    nk: int = 1,
) -> list[SweepEntry]:
    """Fit every (denominator, numerator) order pair in ``order_range``.

    Returns successful fits in ascending AIC order (ties broken by spec
    label), followed by failed fits with their reasons.
    """
    structures = [structure] if isinstance(structure, (str, Structure)) else list(structure)
    specs: list[EstimatorSpec] = []
    orders = list(order_range)
    if not orders:
        raise ValueError("order range is empty")
    for s in structures:
        specs += _specs_for(Structure(s), orders, noise_order, nk)
    ok, failed = [], []
    for spec in specs:
        try:
            m = estimate(data, spec)
        except (ValueError, np.linalg.LinAlgError) as exc:
            failed.append(SweepEntry(spec, None, None, None, str(exc)))
            continue
        if m.aic is None:
            failed.append(SweepEntry(spec, None, m.V, m, "perfect fit (V = 0), AIC undefined"))
            continue
        ok.append(SweepEntry(spec, m.aic, m.V, m))
    ok.sort(key=lambda e: (e.aic, e.spec.label()))
    return ok + failed


# --------------------------------------------------------------------------
# synthetic data


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian noise passed through ``num(q^-1)/den(q^-1)``.

    ``sigma_fraction`` sets the white-noise standard deviation relative to
    the span of the noise-free output. The default filter is a unit-DC-gain
    first-order lowpass.
    """

    enabled: bool = True
    sigma_fraction: float = 0.005
    # slow drift: pole well away from the plant's sampled poles
    num: tuple[float, ...] = (0.02,)
    den: tuple[float, ...] = (1.0, -0.98)
    seed: int = 0

    @classmethod
    def off(cls) -> "NoiseSpec":
        return cls(enabled=False)


def stepback_input(drop_fraction: float, ramp_time: float, total_time: float, Ts: float) -> tuple[np.ndarray, np.ndarray]:
    n = int(round(total_time / Ts)) + 1
    t = np.arange(n) * Ts
    if ramp_time > 0:
        u = drop_fraction * np.minimum(t / ramp_time, 1.0)
    else:
        u = np.full(n, float(drop_fraction))
    return t, u


def generate_stepback_data(
    plant: RationalTf,
    drop_fraction: float = 0.3,
    ramp_time: float = 3.0,
    total_time: float = 14.0,
    Ts: float = 0.1,
    noise: NoiseSpec | None = None,
    method: str = "zoh",
) -> DataRecord:
    """Truncated-ramp rod input and the plant's (optionally noisy) response.

    ``method="zoh"`` samples the continuous response to a held input;
    ``method="tustin"`` replays the discrete model whose bilinear image is
    the plant, so identification can recover that model exactly.
    """
    if not (0 <= drop_fraction <= 1):
        raise ValueError("drop fraction must lie in [0, 1]")
    if not (ramp_time < total_time):
        raise ValueError("ramp time must be shorter than the record")
    if not is_stable(plant):
        raise ValueError("plant is unstable")
    noise = noise or NoiseSpec()
    _, u = stepback_input(drop_fraction, ramp_time, total_time, Ts)
    if method == "zoh":
        y = simulate(plant, u, Ts)
    elif method == "tustin":
        b, a = tustin_c2d(plant, Ts)
        y = lfilter(b.coeffs, a.coeffs, u)
    else:
        raise ValueError(f"unknown discretization method {method!r}")
    if noise.enabled and noise.sigma_fraction > 0:
        span = float(np.ptp(y))
        rng = np.random.default_rng(noise.seed)
        e = rng.standard_normal(u.size) * noise.sigma_fraction * span
        y = y + lfilter(np.asarray(noise.num, float), np.asarray(noise.den, float), e)
    return DataRecord(Ts, u, y)
