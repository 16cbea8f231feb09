"""Shared numerical machinery: simplex search, dogleg root finding,
polynomial roots, log-grid quadrature and finite differences.

All routines are pure; any randomness is driven by an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "OptimOptions",
    "OptimResult",
    "Quadrature",
    "nelder_mead",
    "dogleg_solve",
    "poly_roots",
    "log_trapezoid",
    "forward_jacobian",
    "central_difference",
]


@dataclass(frozen=True)
class OptimOptions:
    """Tolerances and budgets for both optimizers.

    ``xtol``/``ftol`` drive Nelder-Mead (simplex size and value spread);
    ``root_ftol``/``step_tol`` drive the dogleg solver.
    """

    xtol: float = 1e-8
    ftol: float = 1e-10
    max_evals: int | None = None
    # Nelder-Mead reflection, expansion, contraction, shrink
    rho: float = 1.0
    chi: float = 2.0
    gamma: float = 0.5
    sigma: float = 0.5
    relative_xtol: bool = False
    initial_step: float = 0.05
    zero_step: float = 0.00025
    root_ftol: float = 1e-9
    step_tol: float = 1e-12
    max_iter: int = 200
    initial_radius: float = 1.0
    keep_trace: bool = False


@dataclass
class OptimResult:
    x: np.ndarray
    f: float
    evals: int
    converged: bool
    message: str = ""
    trace: list = field(default_factory=list)


class Quadrature(NamedTuple):
    value: float
    error_estimate: float


class _BudgetExhausted(Exception):
    pass


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    options: OptimOptions | None = None,
) -> OptimResult:
    """Minimize ``f`` with the Nelder-Mead simplex method.

    Non-finite objective values away from ``x0`` are treated as ``+inf`` so a
    penalty plateau simply repels the simplex. The initial simplex perturbs
    each coordinate by ``initial_step`` relative (``zero_step`` absolute for
    zero entries).

    Parameters
    ----------
    f
        Objective, maps a 1-d array to a float.
    x0
        Starting point; ``f(x0)`` must be finite.
    options
        Tolerances and budget, see :class:`OptimOptions`.

    Returns
    -------
    OptimResult
        Best vertex found. ``converged`` is true when both the simplex size
        and the spread of vertex values fell below tolerance.
    """
    opt = options or OptimOptions()
    x0 = np.asarray(x0, dtype=float).ravel()
    n = x0.size
    budget = opt.max_evals if opt.max_evals is not None else 200 * max(n, 1) * 5
    evals = 0

    def fx(x: np.ndarray) -> float:
        nonlocal evals
        if evals >= budget:
            raise _BudgetExhausted
        evals += 1
        v = float(f(x))
        return v if math.isfinite(v) else math.inf

    budget = max(budget, n + 1)
    f0 = fx(x0)
    if not math.isfinite(f0):
        raise ValueError("objective is not finite at the starting point")

    simplex = np.empty((n + 1, n))
    fvals = np.empty(n + 1)
    simplex[0] = x0
    fvals[0] = f0
    for i in range(n):
        y = x0.copy()
        y[i] = y[i] * (1.0 + opt.initial_step) if y[i] != 0 else opt.zero_step
        simplex[i + 1] = y
        fvals[i + 1] = fx(y)

    trace = []
    converged = False
    message = "evaluation budget exhausted"
    try:
        while evals < budget:
            order = np.argsort(fvals, kind="stable")
            simplex, fvals = simplex[order], fvals[order]
            if opt.keep_trace:
                trace.append((simplex[0].copy(), fvals[0]))

            size = np.max(np.abs(simplex[1:] - simplex[0]))
            if opt.relative_xtol:
                size /= max(1.0, np.max(np.abs(simplex[0])))
            spread = np.max(np.abs(fvals[1:] - fvals[0])) if math.isfinite(fvals[-1]) else math.inf
            if size <= opt.xtol and spread <= opt.ftol:
                converged = True
                message = "simplex converged"
                break

            centroid = simplex[:-1].mean(axis=0)
            worst = simplex[-1]
            xr = centroid + opt.rho * (centroid - worst)
            fr = fx(xr)
            if fr < fvals[0]:
                xe = centroid + opt.chi * (xr - centroid)
                fe = fx(xe)
                if fe < fr:
                    simplex[-1], fvals[-1] = xe, fe
                else:
                    simplex[-1], fvals[-1] = xr, fr
                continue
            if fr < fvals[-2]:
                simplex[-1], fvals[-1] = xr, fr
                continue
            if fr < fvals[-1]:
                xc = centroid + opt.gamma * (xr - centroid)
                fc = fx(xc)
                if fc <= fr:
                    simplex[-1], fvals[-1] = xc, fc
                    continue
            else:
                xc = centroid + opt.gamma * (worst - centroid)
                fc = fx(xc)
                if fc < fvals[-1]:
                    simplex[-1], fvals[-1] = xc, fc
                    continue
            for i in range(1, n + 1):
                xi = simplex[0] + opt.sigma * (simplex[i] - simplex[0])
                fvals[i] = fx(xi)
                simplex[i] = xi
    except _BudgetExhausted:
        pass

    best = int(np.argmin(fvals))
    return OptimResult(simplex[best].copy(), float(fvals[best]), evals, converged, message, trace)


def forward_jacobian(
    F: Callable[[np.ndarray], np.ndarray], x: np.ndarray, fx: np.ndarray | None = None
) -> np.ndarray:
    """Forward-difference Jacobian with relative steps ``sqrt(eps)*max(|x|, 1e-8)``."""
    x = np.asarray(x, dtype=float)
    if fx is None:
        fx = np.asarray(F(x), dtype=float)
    J = np.empty((fx.size, x.size))
    base = math.sqrt(np.finfo(float).eps)
    for j in range(x.size):
        h = base * max(abs(x[j]), 1e-8)
        xp = x.copy()
        xp[j] += h
        h = xp[j] - x[j]
        J[:, j] = (np.asarray(F(xp), dtype=float) - fx) / h
    return J


def central_difference(g: Callable[[float], float], x: float, h: float) -> float:
    return (g(x + h) - g(x - h)) / (2.0 * h)


def _gauss_newton_step(J: np.ndarray, F: np.ndarray) -> np.ndarray:
    # Rank-deficient R gets its tiny diagonal lifted (MINPACK-style) so the
    # step stays defined; the trust region then truncates it.
    Q, R = np.linalg.qr(J)
    d = np.abs(np.diag(R))
    floor = np.finfo(float).eps * max(d.max(initial=0.0), 1.0) * 10
    R = R.copy()
    for i in range(R.shape[0]):
        if abs(R[i, i]) < floor:
            R[i, i] = floor if R[i, i] >= 0 else -floor
    return np.linalg.solve(R, -(Q.T @ F))


def _dogleg_step(Js: np.ndarray, fx: np.ndarray, radius: float) -> np.ndarray:
    g = Js.T @ fx
    p_gn = _gauss_newton_step(Js, fx)
    if np.linalg.norm(p_gn) <= radius:
        return p_gn
    Jg = Js @ g
    gg = np.dot(g, g)
    if gg == 0 or np.dot(Jg, Jg) == 0:
        return p_gn * (radius / np.linalg.norm(p_gn))
    p_sd = -(gg / np.dot(Jg, Jg)) * g
    sd_norm = np.linalg.norm(p_sd)
    if sd_norm >= radius:
        return p_sd * (radius / sd_norm)
    d = p_gn - p_sd
    a = np.dot(d, d)
    b = 2.0 * np.dot(p_sd, d)
    c = sd_norm**2 - radius**2
    t = (-b + math.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
    return p_sd + t * d


def dogleg_solve(
    F: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    options: OptimOptions | None = None,
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None,
) -> OptimResult:
    """Solve the square system ``F(x) = 0`` with Powell's hybrid dogleg method.

    Each iteration takes the dogleg blend of the Gauss-Newton and steepest
    descent steps inside a trust region measured in a diagonally scaled norm
    (weights are running maxima of the Jacobian column norms). After every
    trial step, accepted or not, the Jacobian receives a Broyden rank-one
    update; it is recomputed by forward differences after two consecutive
    poor steps. Rank-deficient Jacobians are regularized inside the
    Gauss-Newton step.
    """
    opt = options or OptimOptions()
    x = np.asarray(x0, dtype=float).ravel().copy()
    evals = 0

    def Fx(z: np.ndarray) -> np.ndarray:
        nonlocal evals
        evals += 1
        return np.asarray(F(z), dtype=float).ravel()

    fx = Fx(x)
    if not np.all(np.isfinite(fx)):
        raise ValueError("residual map is not finite at the starting point")
    if fx.size != x.size:
        raise ValueError("dogleg_solve needs a square system")

    radius = opt.initial_radius
    scale = np.zeros_like(x)
    trace: list = []
    budget = opt.max_evals if opt.max_evals is not None else 200 * (x.size + 1)
    J = None
    poor = 0

    def done(msg: str, ok: bool) -> OptimResult:
        return OptimResult(x, float(np.linalg.norm(fx)), evals, ok, msg, trace)

    for _ in range(opt.max_iter):
        if np.max(np.abs(fx), initial=0.0) < opt.root_ftol:
            return done("residual below tolerance", True)
        if evals >= budget:
            return done("evaluation budget exhausted", False)
        if J is None or poor >= 2:
            J = jacobian(x) if jacobian else forward_jacobian(Fx, x, fx)
            poor = 0
            if not np.all(np.isfinite(J)):
                return done("non-finite Jacobian", False)
            scale = np.maximum(scale, np.linalg.norm(J, axis=0))
        D = np.where(scale > 0, scale, 1.0)
        Js = J / D

        p = _dogleg_step(Js, fx, radius)
        step = p / D
        pnorm = float(np.linalg.norm(p))
        half_f = 0.5 * np.dot(fx, fx)
        pred = half_f - 0.5 * np.sum((fx + Js @ p) ** 2)
        x_new = x + step
        f_new = Fx(x_new)

        if not np.all(np.isfinite(f_new)):
            radius = 0.25 * pnorm
            poor += 1
        else:
            actual = half_f - 0.5 * np.dot(f_new, f_new)
            rho = actual / pred if pred > 0 else -1.0
            if rho < 0.1:
                poor += 1
            else:
                poor = 0
            if rho < 0.25:
                radius = 0.5 * pnorm
            elif rho > 0.75 or abs(1.0 - rho) < 0.1:
                radius = max(radius, 2.0 * pnorm)
            # Broyden rank-one secant update along the trial step.
            ss = np.dot(step, step)
            if ss > 0:
                J = J + np.outer(f_new - fx - J @ step, step) / ss
            if rho > 1e-4:
                x, fx = x_new, f_new
                if opt.keep_trace:
                    trace.append((x.copy(), float(np.linalg.norm(fx))))
                if np.max(np.abs(fx)) < opt.root_ftol:
                    return done("residual below tolerance", True)
                if np.max(np.abs(step)) < opt.step_tol * max(1.0, np.max(np.abs(x))):
                    return done("step below tolerance", True)
        if radius < opt.step_tol * max(1.0, float(np.linalg.norm(D * x))):
            ok = bool(np.max(np.abs(fx)) < opt.root_ftol)
            return done("trust region collapsed", ok)

    ok = bool(np.max(np.abs(fx), initial=0.0) < opt.root_ftol)
    return done("residual below tolerance" if ok else "iteration limit reached", ok)


def poly_roots(coeffs: Sequence[float]) -> np.ndarray:
    """Roots of a polynomial given in ascending powers.

    Computed as eigenvalues of the (balanced) companion matrix.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size == 0:
        raise ValueError("the zero polynomial has no well-defined roots")
    if c.size == 1:
        return np.empty(0, dtype=complex)
    return np.roots(c[::-1]).astype(complex)


def log_trapezoid(
    f: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int
) -> Quadrature:
    """Trapezoid rule in ``x`` on ``n`` log-spaced nodes over ``[a, b]``.

    ``f`` is called once with the full node array. The error estimate is the
    change against the rule restricted to every other node.
    """
    if not (0 < a < b):
        raise ValueError("need 0 < a < b")
    if n < 2:
        raise ValueError("need at least two nodes")
    x = np.logspace(math.log10(a), math.log10(b), n)
    y = np.asarray(f(x), dtype=float)
    fine = float(np.trapezoid(y, x))
    idx = np.arange(0, n, 2)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    coarse = float(np.trapezoid(y[idx], x[idx]))
    return Quadrature(fine, abs(fine - coarse))
