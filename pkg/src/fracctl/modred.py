"""Reduction of rational models to (non-)integer-order-plus-delay templates
by H2-norm minimization with a stability-guarded Nelder-Mead multi-start."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .lti.analysis import H2UndefinedError, dc_gain, h2_from_samples, h2_grid, is_stable
from .lti.approx import DEFAULT_BAND, DEFAULT_OUSTALOUP_ORDER, DEFAULT_PADE_ORDER, NEGLIGIBLE_DELAY, rationalize
from .lti.systems import FractionalTf, RationalTf
from .numerics import OptimOptions, nelder_mead

__all__ = [
    "Template",
    "NioptdI",
    "NioptdII",
    "ReductionResult",
    "ReductionSettings",
    "reduction_objective",
    "reduce",
    "reduce_all_templates",
    "PENALTY",
]

PENALTY = 1e6


class Template(str, enum.Enum):
    FOPTD = "FOPTD"
    SOPTD = "SOPTD"
    NIOPTD_I = "NIOPTD-I"
    NIOPTD_II = "NIOPTD-II"

    @classmethod
    def parse(cls, name: str) -> "Template":
        key = name.strip().upper().replace("_", "-")
        aliases = {"NIOPTD1": "NIOPTD-I", "NIOPTD2": "NIOPTD-II"}
        key = aliases.get(key.replace("-", ""), key)
        return cls(key)


@dataclass(frozen=True)
class NioptdI:
    """``K exp(-L s) / (T s^alpha + 1)``."""

    K: float
    T: float
    L: float = 0.0
    alpha: float = 1.0

    def to_fractional_tf(self) -> FractionalTf:
        return FractionalTf([(self.K, 0.0)], [(self.T, self.alpha), (1.0, 0.0)], self.L)

    @property
    def dc_gain(self) -> float:
        return self.K

    @property
    def effective_delay(self) -> float:
        return 0.0 if self.L < NEGLIGIBLE_DELAY else self.L


@dataclass(frozen=True)
class NioptdII:
    """``K exp(-L s) / (s^alpha + 2 zeta omega_n s^beta + omega_n^2)``."""

    K: float
    zeta: float
    omega_n: float
    L: float = 0.0
    alpha: float = 2.0
    beta: float = 1.0

    @classmethod
    def from_coefficients(cls, K, alpha, two_zeta_omega_n, beta, omega_n_sq, L=0.0) -> "NioptdII":
        """Build from the polynomial form ``K/(s^alpha + c1 s^beta + c0)``."""
        wn = math.sqrt(omega_n_sq)
        return cls(K=K, zeta=two_zeta_omega_n / (2.0 * wn), omega_n=wn, L=L, alpha=alpha, beta=beta)

    def to_fractional_tf(self) -> FractionalTf:
        wn = self.omega_n
        den = [(1.0, self.alpha), (2.0 * self.zeta * wn, self.beta), (wn * wn, 0.0)]
        return FractionalTf([(self.K, 0.0)], den, self.L)

    @property
    def dc_gain(self) -> float:
        return self.K / self.omega_n**2

    @property
    def effective_delay(self) -> float:
        return 0.0 if self.L < NEGLIGIBLE_DELAY else self.L


@dataclass(frozen=True)
class ReductionSettings:
    oustaloup_order: int = DEFAULT_OUSTALOUP_ORDER
    band: tuple[float, float] = DEFAULT_BAND
    pade_order: int = DEFAULT_PADE_ORDER
    max_evals: int = 2000
    xtol: float = 1e-6
    ftol: float = 1e-10


@dataclass
class ReductionResult:
    template: Template
    params: NioptdI | NioptdII | None
    J: float
    J_normalized: float
    starts_tried: int
    feasible: bool
    evals: int = 0
    converged: bool = False
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "template": self.template.value,
            "params": None if self.params is None else {"kind": type(self.params).__name__, **asdict(self.params)},
            "J": self.J,
            "J_normalized": self.J_normalized,
            "starts_tried": self.starts_tried,
            "feasible": self.feasible,
            "evals": self.evals,
            "converged": self.converged,
            "diagnostics": list(self.diagnostics),
        }


class _Objective:
    """J(candidate) against a fixed source, with the source response cached."""

    def __init__(self, source: RationalTf, settings: ReductionSettings):
        if source.delay:
            raise ValueError("source models are expected to be delay-free")
        if not is_stable(source):
            raise H2UndefinedError("source model is unstable; reduction needs a stable source")
        self.settings = settings
        self.omegas = h2_grid()
        self.source_values, _ = source.evaluate_jw(self.omegas)
        self.source_feedthrough = source.feedthrough()

    def __call__(self, candidate: NioptdI | NioptdII) -> float:
        s = self.settings
        try:
            rat = rationalize(candidate.to_fractional_tf(), s.oustaloup_order, s.band, s.pade_order)
        except (ValueError, ZeroDivisionError):
            return math.inf
        poles = rat.poles()
        if not np.all(np.isfinite(poles)):
            return math.inf
        values, _ = rat.evaluate_jw(self.omegas)
        # only the strictly proper part of the difference has a finite H2 norm
        d = self.source_feedthrough - rat.feedthrough()
        with np.errstate(all="ignore"):
            J = h2_from_samples(self.source_values - values - d, self.omegas)
        worst = float(np.max(poles.real)) if poles.size else -math.inf
        if worst >= -1e-9:
            return (J if math.isfinite(J) else 0.0) + PENALTY * (1.0 + max(worst, 0.0))
        return J if math.isfinite(J) else math.inf


def reduction_objective(source: RationalTf, candidate: NioptdI | NioptdII, settings: ReductionSettings | None = None) -> float:
    """H2 norm of the (strictly proper) difference between the source and the
    rationalized candidate; unstable candidates receive an additive penalty."""
    return _Objective(source, settings or ReductionSettings())(candidate)


def _softplus(x: float) -> float:
    return x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))


def _softplus_inv(y: float) -> float:
    y = max(y, 1e-300)
    return y + math.log(-math.expm1(-y)) if y > 30 else math.log(math.expm1(y))


# vector <-> template parameters ---------------------------------------------


def _encode(template: Template, p) -> np.ndarray:
    if template in (Template.FOPTD, Template.NIOPTD_I):
        v = [p.K, math.log(p.T), _softplus_inv(p.L)]
        if template is Template.NIOPTD_I:
            v.append(p.alpha)
        return np.array(v)
    v = [p.K, math.log(p.zeta), math.log(p.omega_n), _softplus_inv(p.L)]
    if template is Template.NIOPTD_II:
        v += [p.alpha, p.beta]
    return np.array(v)


def _decode(template: Template, x: np.ndarray):
    if template in (Template.FOPTD, Template.NIOPTD_I):
        alpha = x[3] if template is Template.NIOPTD_I else 1.0
        return NioptdI(K=float(x[0]), T=math.exp(x[1]), L=_softplus(x[2]), alpha=float(alpha))
    alpha, beta = (x[4], x[5]) if template is Template.NIOPTD_II else (2.0, 1.0)
    return NioptdII(K=float(x[0]), zeta=math.exp(x[1]), omega_n=math.exp(x[2]), L=_softplus(x[3]), alpha=float(alpha), beta=float(beta))


def _initial_guess(source: RationalTf, template: Template):
    K0 = dc_gain(source)
    poles = source.poles()
    slow = float(np.min(np.abs(poles))) if poles.size else 1.0
    slow = slow if slow > 0 else 1.0
    L0 = 0.05
    if template in (Template.FOPTD, Template.NIOPTD_I):
        return NioptdI(K=K0, T=1.0 / slow, L=L0, alpha=1.0)
    return NioptdII(K=K0 * slow**2, zeta=1.0, omega_n=slow, L=L0, alpha=2.0, beta=1.0)


def _perturb(template: Template, p, rng: np.random.Generator):
    def f():
        return float(2.0 ** rng.uniform(-1.0, 1.0))

    if template in (Template.FOPTD, Template.NIOPTD_I):
        alpha = p.alpha * f() if template is Template.NIOPTD_I else 1.0
        return NioptdI(K=p.K * f(), T=p.T * f(), L=p.L * f(), alpha=alpha)
    wn = p.omega_n * f()
    K = p.K * f() * (wn / p.omega_n) ** 2
    if template is Template.NIOPTD_II:
        alpha, beta = p.alpha * f(), p.beta * f()
    else:
        alpha, beta = 2.0, 1.0
    return NioptdII(K=K, zeta=p.zeta * f(), omega_n=wn, L=p.L * f(), alpha=alpha, beta=beta)


def _lift(template: Template, p):
    """Embed a nested-template optimum into ``template``'s parameter space."""
    if template is Template.NIOPTD_I and isinstance(p, NioptdI):
        return p
    if template is Template.NIOPTD_II and isinstance(p, NioptdII):
        return p
    return None


def reduce(
    source: RationalTf,
    template: Template | str,
    n_starts: int = 8,
    seed: int = 0,
    settings: ReductionSettings | None = None,
    extra_starts: tuple = (),
) -> ReductionResult:
    """Best-of-``n_starts`` Nelder-Mead minimization of the reduction objective.

    The first start is the deterministic initial guess; the rest perturb it
    log-uniformly by a factor in ``[0.5, 2]`` per parameter. Each run is
    restarted once from its end point to re-expand a collapsed simplex.
    ``extra_starts`` (template parameter objects) are tried in addition.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    template = Template.parse(template) if isinstance(template, str) else template
    settings = settings or ReductionSettings()
    obj = _Objective(source, settings)
    rng = np.random.default_rng(seed)
    base = _initial_guess(source, template)
    starts = [base] + [_perturb(template, base, rng) for _ in range(n_starts - 1)]
    starts += [q for q in (_lift(template, e) for e in extra_starts) if q is not None]

    def f(x):
        try:
            return obj(_decode(template, x))
        except (ValueError, OverflowError):
            return math.inf

    opts = OptimOptions(xtol=settings.xtol, ftol=settings.ftol, max_evals=settings.max_evals, relative_xtol=True)
    best_x, best_f, evals, tried, conv = None, math.inf, 0, 0, False
    diagnostics = []
    for k, p in enumerate(starts):
        try:
            x0 = _encode(template, p)
        except ValueError:
            diagnostics.append(f"start {k}: invalid parameters")
            continue
        if not math.isfinite(f(x0)):
            diagnostics.append(f"start {k}: objective not finite at start")
            continue
        tried += 1
        res = nelder_mead(f, x0, opts)
        evals += res.evals
        if math.isfinite(res.f):
            again = nelder_mead(f, res.x, opts)
            evals += again.evals
            if again.f <= res.f:
                res = again
        if res.f < best_f:
            best_x, best_f, conv = res.x, res.f, res.converged
    dc = abs(dc_gain(source))
    if best_x is None or best_f >= PENALTY:
        diagnostics.append("no start produced a stable candidate")
        params = None if best_x is None else _decode(template, best_x)
        return ReductionResult(template, params, best_f, best_f / dc, tried, False, evals, False, diagnostics)
    params = _decode(template, best_x)
    return ReductionResult(template, params, best_f, best_f / dc, tried, True, evals, conv, diagnostics)


def reduce_all_templates(
    source: RationalTf,
    n_starts: int = 8,
    seed: int = 0,
    settings: ReductionSettings | None = None,
) -> dict[Template, ReductionResult]:
    """Run all four templates with a shared start policy.

    The FOPTD and SOPTD optima also seed the NIOPTD-I and NIOPTD-II runs,
    since each classical template is a slice of its fractional counterpart.
    """
    out: dict[Template, ReductionResult] = {}
    for template, nested in (
        (Template.FOPTD, None),
        (Template.SOPTD, None),
        (Template.NIOPTD_I, Template.FOPTD),
        (Template.NIOPTD_II, Template.SOPTD),
    ):
        extra = ()
        if nested is not None and out.get(nested) is not None and out[nested].params is not None:
            extra = (out[nested].params,)
        try:
            out[template] = reduce(source, template, n_starts, seed, settings, extra)
        except (ValueError, np.linalg.LinAlgError) as exc:
            out[template] = ReductionResult(template, None, math.inf, math.inf, 0, False, 0, False, [str(exc)])
    return out
