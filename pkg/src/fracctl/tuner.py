"""Frequency-domain tuning of PI^lambda D^mu and PID controllers, and loop verification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .lti.statespace import closed_loop, simulate
from .lti.systems import FractionalTf, RationalTf
from .numerics import OptimOptions, dogleg_solve

__all__ = [
    "FopidParams",
    "TuningSpec",
    "TuneReport",
    "ScaleMetrics",
    "IsodampingReport",
    "loop_response",
    "loop_phase",
    "spec_residuals",
    "achieved_spec",
    "default_initial",
    "solve_spec",
    "tune_fopid",
    "tune_pid",
    "verify_isodamping",
    "phase_flatness",
    "step_metrics",
    "RESIDUAL_NAMES",
    "PARAM_NAMES",
]

PARAM_NAMES = ("Kp", "Ki", "Kd", "lam", "mu")
RESIDUAL_NAMES = ("phase_margin", "crossover_magnitude", "phase_slope", "complementary_sensitivity", "sensitivity")
CONVERGENCE_TOL = 1e-6


@dataclass(frozen=True)
class FopidParams:
    """``Kp + Ki / s^lam + Kd s^mu``; ``lam = mu = 1`` is a PID."""

    Kp: float
    Ki: float
    Kd: float
    lam: float = 1.0
    mu: float = 1.0

    def to_fractional_tf(self) -> FractionalTf:
        lam = self.lam
        num = [(self.Kd, lam + self.mu), (self.Kp, lam), (self.Ki, 0.0)]
        return FractionalTf(num, [(1.0, lam)])

    def evaluate_jw(self, omegas) -> np.ndarray:
        s = 1j * np.asarray(omegas, dtype=float)
        return self.Kp + self.Ki * s ** (-self.lam) + self.Kd * s**self.mu

    def as_vector(self) -> np.ndarray:
        return np.array([self.Kp, self.Ki, self.Kd, self.lam, self.mu])

    @classmethod
    def from_vector(cls, x) -> "FopidParams":
        return cls(*(float(v) for v in x))

    def scaled(self, k: float) -> "FopidParams":
        return replace(self, Kp=self.Kp * k, Ki=self.Ki * k, Kd=self.Kd * k)

    def to_dict(self) -> dict:
        return {"Kp": self.Kp, "Ki": self.Ki, "Kd": self.Kd, "lambda": self.lam, "mu": self.mu}

    @classmethod
    def from_dict(cls, d: dict) -> "FopidParams":
        return cls(float(d["Kp"]), float(d["Ki"]), float(d["Kd"]), float(d.get("lambda", 1.0)), float(d.get("mu", 1.0)))


@dataclass(frozen=True)
class TuningSpec:
    """Targets: crossover ``omega_gc`` with margin ``phi_m`` (rad), flat phase
    there, ``|T(j omega_t)| = A_db`` and ``|S(j omega_s)| = B_db``."""

    omega_gc: float
    phi_m: float
    A_db: float = -20.0
    omega_t: float = 100.0
    B_db: float = -20.0
    omega_s: float = 0.01

    def __post_init__(self):
        if not (0 < self.omega_s < self.omega_gc < self.omega_t):
            raise ValueError("need 0 < omega_s < omega_gc < omega_t")
        if not (0 < self.phi_m < math.pi):
            raise ValueError("phase margin must lie in (0, pi) radians")

    def to_dict(self) -> dict:
        return {
            "omega_gc": self.omega_gc,
            "phi_m_deg": math.degrees(self.phi_m),
            "A_db": self.A_db,
            "omega_t": self.omega_t,
            "B_db": self.B_db,
            "omega_s": self.omega_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TuningSpec":
        known = {"omega_gc", "phi_m_deg", "A_db", "omega_t", "B_db", "omega_s"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown tuning spec keys: {sorted(extra)}")
        return cls(
            omega_gc=float(d["omega_gc"]),
            phi_m=math.radians(float(d["phi_m_deg"])),
            A_db=float(d.get("A_db", -20.0)),
            omega_t=float(d.get("omega_t", 100.0)),
            B_db=float(d.get("B_db", -20.0)),
            omega_s=float(d.get("omega_s", 0.01)),
        )


@dataclass
class TuneReport:
    params: FopidParams
    residuals: np.ndarray
    converged: bool
    flatness: float
    margins: dict
    restarts: int = 0
    evals: int = 0
    message: str = ""
    active: tuple[int, ...] = (0, 1, 2, 3, 4)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "residuals": {RESIDUAL_NAMES[i]: float(r) for i, r in zip(self.active, self.residuals)},
            "converged": self.converged,
            "flatness": self.flatness,
            "margins": dict(self.margins),
            "restarts": self.restarts,
            "evals": self.evals,
            "message": self.message,
        }


# --------------------------------------------------------------------------
# loop evaluation


def _plant_jw(plant, w) -> np.ndarray:
    vals, valid = plant.evaluate_jw(np.atleast_1d(np.asarray(w, dtype=float)))
    if not np.all(valid) or not np.all(np.isfinite(vals)):
        raise ValueError("plant response undefined at a target frequency")
    return vals


def loop_response(plant, params: FopidParams, omegas) -> np.ndarray:
    """Exact ``C(jw) P(jw)``."""
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    return params.evaluate_jw(w) * _plant_jw(plant, w)


def loop_phase(plant, params: FopidParams, omega: float, points: int = 600) -> float:
    """Continuous loop phase at ``omega``, unwrapped from six decades below."""
    grid = np.geomspace(omega * 1e-6, omega, points)
    ph = np.unwrap(np.angle(loop_response(plant, params, grid)))
    return float(ph[-1])


def _phase_slope(plant, params: FopidParams, omega: float) -> float:
    h = 1e-4 * omega
    g = loop_response(plant, params, [omega - h, omega + h])
    return float(np.angle(g[1] / g[0]) / (2.0 * h))


def _db(x) -> float:
    return float(20.0 * np.log10(np.abs(x)))


def spec_residuals(plant, params: FopidParams, spec: TuningSpec) -> np.ndarray:
    """The five tuning-target residuals.

    Phase residuals are in radians, the magnitude residual in natural units
    and the two dB residuals are divided by 20.
    """
    g_gc = loop_response(plant, params, [spec.omega_gc])[0]
    g_t = loop_response(plant, params, [spec.omega_t])[0]
    g_s = loop_response(plant, params, [spec.omega_s])[0]
    t_mag = _db(g_t / (1.0 + g_t))
    s_mag = _db(1.0 / (1.0 + g_s))
    return np.array(
        [
            loop_phase(plant, params, spec.omega_gc) + math.pi - spec.phi_m,
            abs(g_gc) - 1.0,
            _phase_slope(plant, params, spec.omega_gc),
            (t_mag - spec.A_db) / 20.0,
            (s_mag - spec.B_db) / 20.0,
        ]
    )


def achieved_spec(plant, params: FopidParams, omega_gc: float = 1.0, omega_t: float = 100.0, omega_s: float = 0.01) -> TuningSpec:
    """Targets that ``params`` attains on ``plant`` at the given anchor frequencies."""
    g_t = loop_response(plant, params, [omega_t])[0]
    g_s = loop_response(plant, params, [omega_s])[0]
    return TuningSpec(
        omega_gc=omega_gc,
        phi_m=math.pi + loop_phase(plant, params, omega_gc),
        A_db=_db(g_t / (1.0 + g_t)),
        omega_t=omega_t,
        B_db=_db(1.0 / (1.0 + g_s)),
        omega_s=omega_s,
    )


def _margins(plant, params: FopidParams, spec: TuningSpec) -> dict:
    g = loop_response(plant, params, [spec.omega_gc, spec.omega_t, spec.omega_s])
    return {
        "phase_margin_deg": math.degrees(math.pi + loop_phase(plant, params, spec.omega_gc)),
        "crossover_magnitude": float(abs(g[0])),
        "T_db_at_omega_t": _db(g[1] / (1.0 + g[1])),
        "S_db_at_omega_s": _db(1.0 / (1.0 + g[2])),
    }


def default_initial(plant, omega_gc: float) -> FopidParams:
    """Magnitude-matched start near crossover."""
    kp = 1.0 / float(abs(_plant_jw(plant, [omega_gc])[0]))
    return FopidParams(kp, kp * omega_gc / 10.0, kp / (10.0 * omega_gc), 1.0, 1.0)


# --------------------------------------------------------------------------
# solving


def solve_spec(
    plant,
    spec: TuningSpec,
    initial: FopidParams,
    free: tuple[str, ...] = PARAM_NAMES,
    active: tuple[int, ...] = (0, 1, 2, 3, 4),
    options: OptimOptions | None = None,
    max_restarts: int = 10,
    seed: int = 0,
) -> TuneReport:
    """Solve the ``active`` residuals for the ``free`` parameters with the
    trust-region dogleg, restarting from perturbed starts on failure."""
    if len(free) != len(active):
        raise ValueError("number of free parameters must equal number of active residuals")
    idx = [PARAM_NAMES.index(n) for n in free]
    base = initial.as_vector()
    act = list(active)

    def params_of(z):
        x = base.copy()
        x[idx] = z
        return FopidParams.from_vector(x)

    def F(z):
        p = params_of(z)
        if p.lam <= 0 or p.mu < 0:
            return np.full(len(act), np.inf)
        try:
            return spec_residuals(plant, p, spec)[act]
        except (ValueError, FloatingPointError, ZeroDivisionError):
            return np.full(len(act), np.inf)

    opts = options or OptimOptions(root_ftol=1e-10)
    rng = np.random.default_rng(seed)
    z0 = base[idx].copy()
    best = None
    evals = 0
    restarts = 0
    for attempt in range(max_restarts + 1):
        start = z0 if attempt == 0 else z0 * 2.0 ** rng.uniform(-1.0, 1.0, size=z0.size)
        if not np.all(np.isfinite(F(start))):
            restarts += 1
            continue
        res = dogleg_solve(F, start, opts)
        evals += res.evals
        r = F(res.x)
        norm = float(np.max(np.abs(r))) if np.all(np.isfinite(r)) else math.inf
        if best is None or norm < best[1]:
            best = (res.x, norm, res.message)
        if norm < CONVERGENCE_TOL:
            break
        restarts += 1
    if best is None:
        p = params_of(z0)
        return TuneReport(p, np.full(len(act), np.nan), False, math.nan, {}, restarts, evals, "no finite start", tuple(act))
    p = params_of(best[0])
    try:
        resid = spec_residuals(plant, p, spec)
        flat = float(resid[2])
        margins = _margins(plant, p, spec)
    except ValueError:
        resid, flat, margins = np.full(5, np.nan), math.nan, {}
    converged = best[1] < CONVERGENCE_TOL
    msg = "converged" if converged else f"did not converge ({best[2]})"
    return TuneReport(p, resid[act], converged, flat, margins, restarts, evals, msg, tuple(act))


def tune_fopid(plant, spec: TuningSpec, initial: FopidParams | None = None, seed: int = 0, max_restarts: int = 10) -> TuneReport:
    """Solve all five tuning targets for ``Kp, Ki, Kd, lambda, mu``."""
    initial = initial or default_initial(plant, spec.omega_gc)
    return solve_spec(plant, spec, initial, PARAM_NAMES, (0, 1, 2, 3, 4), max_restarts=max_restarts, seed=seed)


def tune_pid(plant, spec: TuningSpec, initial: FopidParams | None = None, seed: int = 0, max_restarts: int = 10) -> TuneReport:
    """Solve the phase-margin, crossover and flatness targets for ``Kp, Ki, Kd``."""
    initial = initial or default_initial(plant, spec.omega_gc)
    initial = replace(initial, lam=1.0, mu=1.0)
    return solve_spec(plant, spec, initial, ("Kp", "Ki", "Kd"), (0, 1, 2), max_restarts=max_restarts, seed=seed)


# --------------------------------------------------------------------------
# verification


@dataclass
class ScaleMetrics:
    scale: float
    stable: bool
    degenerate: bool
    overshoot_pct: float
    settling_time: float
    steady_state_error: float
    t: np.ndarray = field(repr=False, default=None)
    y: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "stable": self.stable,
            "degenerate": self.degenerate,
            "overshoot_pct": self.overshoot_pct,
            "settling_time": self.settling_time,
            "steady_state_error": self.steady_state_error,
        }


@dataclass
class IsodampingReport:
    scales: list[ScaleMetrics]
    overshoot_spread: float

    def to_dict(self) -> dict:
        return {"scales": [m.to_dict() for m in self.scales], "overshoot_spread": self.overshoot_spread}


def step_metrics(t: np.ndarray, y: np.ndarray, band: float = 0.02) -> tuple[float, float, float]:
    overshoot = max(float(np.max(y)) - 1.0, 0.0) * 100.0
    outside = np.flatnonzero(np.abs(y - 1.0) > band)
    if outside.size == 0:
        settle = 0.0
    elif outside[-1] == y.size - 1:
        settle = math.inf
    else:
        settle = float(t[outside[-1] + 1])
    return overshoot, settle, abs(1.0 - float(y[-1]))


def verify_isodamping(
    plant,
    params: FopidParams,
    gain_scales=(1.0,),
    t_final: float = 100.0,
    Ts: float = 0.01,
    keep_traces: bool = False,
) -> IsodampingReport:
    """Unit step responses of the rationalized closed loop at each controller-gain scale.

    Reports overshoot (%), 2% settling time and steady-state error per scale;
    the iso-damping verdict is the spread of overshoot across stable scales.
    """
    n = int(round(t_final / Ts)) + 1
    t = np.arange(n) * Ts
    u = np.ones(n)
    out = []
    for k in gain_scales:
        k = float(k)
        if k == 0.0:
            y = np.zeros(n)
            out.append(ScaleMetrics(k, True, True, 0.0, math.inf, 1.0, t if keep_traces else None, y if keep_traces else None))
            continue
        cl = closed_loop(plant, params.scaled(k).to_fractional_tf())
        stable = cl.is_stable()
        if not stable:
            out.append(ScaleMetrics(k, False, False, math.nan, math.inf, math.nan))
            continue
        y = simulate(cl.complementary_ss, u, Ts)
        ov, st, sse = step_metrics(t, y)
        out.append(ScaleMetrics(k, True, False, ov, st, sse, t if keep_traces else None, y if keep_traces else None))
    ovs = [m.overshoot_pct for m in out if m.stable and not m.degenerate]
    spread = (max(ovs) - min(ovs)) if ovs else math.nan
    return IsodampingReport(out, spread)


def phase_flatness(plant, params: FopidParams, omega_gc: float, half_decades: float = 2.0, tol_deg: float = 2.0) -> tuple[float, float]:
    """Phase slope at ``omega_gc`` and the width (rad/s) of the contiguous band
    around it where the phase stays within ``tol_deg`` of its crossover value.

    A band that reaches both ends of the ``half_decades`` search window is
    reported as infinitely wide.
    """
    slope = _phase_slope(plant, params, omega_gc)
    per = 200
    lo = np.geomspace(omega_gc * 10.0 ** (-half_decades), omega_gc, int(per * half_decades) + 1)
    hi = np.geomspace(omega_gc, omega_gc * 10.0**half_decades, int(per * half_decades) + 1)
    grid = np.concatenate([lo, hi[1:]])
    c = lo.size - 1
    g = loop_response(plant, params, grid)
    ph = np.unwrap(np.angle(g / g[c]))
    ph -= ph[c]
    bad = np.abs(np.degrees(ph)) >= tol_deg
    left = np.flatnonzero(bad[:c])
    right = np.flatnonzero(bad[c:])
    if left.size == 0 and right.size == 0:
        return slope, math.inf
    w_lo = grid[left[-1] + 1] if left.size else grid[0]
    w_hi = grid[c + right[0] - 1] if right.size else grid[-1]
    return slope, float(w_hi - w_lo)
