"""Radial bandwidth ``beta(l)``: the root of ``int_0^l t^(n-1) K(beta t) dt = alpha``.

The solver runs Newton-Raphson in the closed form that follows from
integrating ``dF/dbeta`` by parts, safeguarded by a bracket so that every
iterate stays inside the kernel domain.  :class:`BetaTable` caches the root
on a log-spaced grid and interpolates it monotonically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .exceptions import ConvergenceError, KernelNotAdmissible, ParameterError
from .kernels import (
    Kernel,
    log_tail_integral,
    profile,
    radial_integral,
    radial_integral_derivative,
)

DEFAULT_TOL = 1e-10
MAX_ITER = 200


def _check_admissible(kernel: Kernel, n: int):
    if kernel.family == "gaussian":
        raise KernelNotAdmissible("the gaussian profile is integrable at -inf and cannot define beta(l)")
    log_tail_integral(kernel, n)  # raises NotIntegrable for rational k <= n


def solve_beta_at_infinity(kernel: Kernel, n: int, alpha: float) -> float:
    """Horizontal asymptote ``(int_0^inf t^(n-1) K(t) dt / alpha)^(1/n)``."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    return math.exp((log_tail_integral(kernel, n) - math.log(alpha)) / n)


def zero_length(n: int, alpha: float) -> float:
    """Ray length ``(n alpha)^(1/n)`` at which ``beta`` vanishes."""
    return (n * alpha) ** (1.0 / n)


def newton_step(kernel: Kernel, n: int, alpha: float, l, beta):
    """One Newton iterate written in the closed form free of ``K'``.

    ``beta + (beta/n) (1 - (l^n K(beta l) - n alpha) / (l^n K(beta l) - n I(beta)))``
    """
    beta = np.asarray(beta, dtype=float)
    l = np.asarray(l, dtype=float)
    edge = l**n * profile(kernel, beta * l)
    integral = radial_integral(kernel, beta, l, n)
    return beta + beta / n * (1.0 - (edge - n * alpha) / (edge - n * integral))


def generic_newton_step(kernel: Kernel, n: int, alpha: float, l, beta):
    """``beta - F(beta) / F'(beta)`` with ``F'`` from the analytic derivative integral."""
    f = np.asarray(radial_integral(kernel, beta, l, n)) - alpha
    return beta - f / radial_integral_derivative(kernel, beta, l, n)


def _lower_bracket(kernel, n, alpha, l):
    """Finite lower ends with ``F(lo) > 0`` for every entry of ``l``."""
    if kernel.family == "rational":
        gap = np.full(l.shape, 1e-6)
        lo = (-1.0 + gap) / l
        f = radial_integral(kernel, lo, l, n) - alpha
        for _ in range(60):
            short = f <= 0
            if not np.any(short):
                break
            gap[short] *= 1e-3
            lo[short] = (-1.0 + gap[short]) / l[short]
            f[short] = radial_integral(kernel, lo[short], l[short], n) - alpha
        return lo
    lo = -1.0 / l
    f = radial_integral(kernel, lo, l, n) - alpha
    for _ in range(1100):
        short = f <= 0
        if not np.any(short):
            break
        lo[short] *= 2.0
        with np.errstate(over="ignore"):
            f[short] = radial_integral(kernel, lo[short], l[short], n) - alpha
    return lo


def _midpoint(kernel, lo, hi, l):
    if kernel.family != "rational":
        return 0.5 * (lo + hi)
    # geometric in the distance to the domain bound -1/l, where roots crowd
    bound = -1.0 / l
    return bound + np.sqrt((lo - bound) * (hi - bound))


def _bracket_width(kernel, lo, hi, l):
    if kernel.family != "rational":
        return hi - lo
    bound = -1.0 / l
    return np.log((hi - bound) / (lo - bound))


def _solve(kernel, n, alpha, l, tol, beta0=None, max_iter=MAX_ITER):
    """Vectorized safeguarded Newton; returns ``(beta, residual, iterations)``.

    A bisection step replaces the Newton step whenever the latter leaves the
    bracket or the previous iteration failed to halve it.
    """
    asym = solve_beta_at_infinity(kernel, n, alpha)
    target = tol * alpha
    hi = np.full(l.shape, asym)
    lo = _lower_bracket(kernel, n, alpha, l)
    beta = np.full(l.shape, asym) if beta0 is None else np.clip(np.asarray(beta0, float) + 0 * l, lo, hi)
    best = beta.copy()
    best_res = np.full(l.shape, np.inf)
    iters = np.zeros(l.shape, dtype=int)
    active = np.ones(l.shape, dtype=bool)
    width = np.full(l.shape, np.inf)
    eps = np.finfo(float).eps
    for it in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        b, ll = beta[idx], l[idx]
        with np.errstate(over="ignore"):
            f = radial_integral(kernel, b, ll, n) - alpha
        res = np.abs(f)
        better = res < best_res[idx]
        best[idx[better]] = b[better]
        best_res[idx[better]] = res[better]
        lo[idx] = np.where(f > 0, b, lo[idx])
        hi[idx] = np.where(f < 0, b, hi[idx])
        iters[idx] = it
        collapsed = hi[idx] - lo[idx] <= 4 * eps * np.maximum(np.abs(lo[idx]), np.abs(hi[idx]))
        done = (res <= target) | collapsed
        active[idx[done]] = False
        go = ~done
        if not np.any(go):
            continue
        idx, b, ll = idx[go], b[go], ll[go]
        new_width = _bracket_width(kernel, lo[idx], hi[idx], ll)
        stalled = new_width > 0.5 * width[idx]
        width[idx] = new_width
        s = b * ll
        with np.errstate(all="ignore"):
            step = np.empty_like(b)
            far = np.abs(s) > 0.1
            if np.any(far):
                step[far] = newton_step(kernel, n, alpha, ll[far], b[far])
            if np.any(~far):
                step[~far] = generic_newton_step(kernel, n, alpha, ll[~far], b[~far])
        ok = np.isfinite(step) & (step > lo[idx]) & (step < hi[idx]) & ~stalled
        beta[idx] = np.where(ok, step, _midpoint(kernel, lo[idx], hi[idx], ll))
    else:
        if np.any(active):
            i = np.flatnonzero(active)[0]
            raise ConvergenceError(
                f"beta solver stalled at l={l[i]!r}", beta=float(best[i]), residual=float(best_res[i])
            )
    return _polish(kernel, n, alpha, l, best, best_res, lo, hi), best_res, iters


def _polish(kernel, n, alpha, l, beta, res, lo, hi):
    # one extra Newton step: a small residual does not pin beta when dI/dbeta is tiny (small l)
    with np.errstate(all="ignore"):
        far = np.abs(beta * l) > 0.1
        step = np.empty_like(beta)
        if np.any(far):
            step[far] = newton_step(kernel, n, alpha, l[far], beta[far])
        if np.any(~far):
            step[~far] = generic_newton_step(kernel, n, alpha, l[~far], beta[~far])
        ok = np.isfinite(step) & (step >= lo) & (step <= hi)
        trial = np.where(ok, step, beta)
        new_res = np.abs(radial_integral(kernel, trial, l, n) - alpha)
    keep = ok & (new_res <= res)
    return np.where(keep, trial, beta)


def solve_beta(kernel: Kernel, n: int, alpha: float, l, tol: float = DEFAULT_TOL, beta0=None,
               return_iterations: bool = False):
    """Radial bandwidth at ray length(s) ``l``.

    Newton iterations start from ``beta0`` (default: the asymptote, an upper
    bound) and are safeguarded by bisection whenever a step leaves the
    current bracket.  The residual reached is ``|I(beta) - alpha| <= tol * alpha``.

    Parameters
    ----------
    kernel : Kernel
        Exponential or rational profile.
    n : int
        Ambient dimension.
    alpha : float
        Mass per unit solid angle, ``> 0``.
    l : float or ndarray
        Ray lengths ``> 0``; ``inf`` maps to the asymptote.
    """
    _check_admissible(kernel, n)
    if not alpha > 0 or not math.isfinite(alpha):
        raise ParameterError("alpha must be a positive finite number")
    arr = np.asarray(l, dtype=float)
    if np.any(~(arr > 0)):
        raise ParameterError("ray lengths must be positive")
    flat = arr.ravel()
    out = np.empty(flat.shape)
    iters = np.zeros(flat.shape, dtype=int)
    inf = np.isinf(flat)
    out[inf] = solve_beta_at_infinity(kernel, n, alpha)
    if np.any(~inf):
        b0 = None if beta0 is None else np.broadcast_to(np.asarray(beta0, float), arr.shape).ravel()[~inf]
        out[~inf], _, iters[~inf] = _solve(kernel, n, alpha, flat[~inf], tol, b0)
    out = out.reshape(arr.shape)
    if return_iterations:
        return (out if out.ndim else float(out)), iters.reshape(arr.shape)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BetaTable:
    """``beta(l)`` tabulated on a log-spaced grid for one ``(kernel, n, alpha)``."""

    kernel: Kernel
    n: int
    alpha: float
    grid_l: np.ndarray
    grid_beta: np.ndarray
    asymptote: float
    zero_l: float
    tolerance: float = DEFAULT_TOL
    _interp: CubicHermiteSpline = field(default=None, repr=False, compare=False)

    def __call__(self, l):
        return lookup_beta(self, l)


def _length_at(kernel, n, alpha, beta):
    """Ray length at which ``beta(l)`` equals a given positive ``beta``."""
    def g(logl):
        return math.log(radial_integral(kernel, beta, math.exp(logl), n)) - math.log(alpha)

    a = math.log(zero_length(n, alpha))
    b = a + 1.0
    while g(b) < 0:
        b += 2.0 * (b - a)
    return math.exp(brentq(g, a, b, xtol=1e-14, rtol=1e-14))


def build_beta_table(kernel: Kernel, n: int, alpha: float, grid_size: int = 256,
                     tol: float = DEFAULT_TOL) -> BetaTable:
    """Tabulate ``beta`` from ``zero_l / 100`` up to where it reaches 99.9% of the asymptote."""
    if grid_size < 16:
        raise ParameterError("grid_size must be at least 16")
    _check_admissible(kernel, n)
    asym = solve_beta_at_infinity(kernel, n, alpha)
    zero_l = zero_length(n, alpha)
    top = _length_at(kernel, n, alpha, 0.999 * asym)
    grid = np.geomspace(zero_l / 100.0, top, grid_size)
    grid[np.argmin(np.abs(np.log(grid / zero_l)))] = zero_l
    betas = solve_beta(kernel, n, alpha, grid, tol=tol)
    betas[grid == zero_l] = 0.0
    if np.any(np.diff(betas) <= 0):
        raise ConvergenceError("tabulated beta is not strictly increasing")
    interp = CubicHermiteSpline(np.log(grid), betas, _monotone_slopes(grid, betas, beta_slope(kernel, n, grid, betas)),
                                extrapolate=False)
    grid.setflags(write=False)
    betas.setflags(write=False)
    return BetaTable(kernel, n, float(alpha), grid, betas, asym, zero_l, tol, interp)


def beta_slope(kernel: Kernel, n: int, l, beta):
    """``d beta / d l`` by implicit differentiation of the defining equation."""
    l = np.asarray(l, dtype=float)
    return -(l ** (n - 1)) * profile(kernel, beta * l) / radial_integral_derivative(kernel, beta, l, n)


def _monotone_slopes(grid, betas, slopes):
    """Slopes in ``log l`` limited so the Hermite cubic stays monotone (Fritsch-Carlson)."""
    u = np.log(grid)
    d = slopes * grid
    secant = np.diff(betas) / np.diff(u)
    a = d[:-1] / secant
    b = d[1:] / secant
    r = np.hypot(a, b)
    over = r > 3.0
    if np.any(over):
        scale = np.ones_like(d)
        tau = 3.0 / r[over]
        idx = np.flatnonzero(over)
        scale[idx] = np.minimum(scale[idx], tau)
        scale[idx + 1] = np.minimum(scale[idx + 1], tau)
        d = d * scale
    return d


def lookup_beta(table: BetaTable, l):
    """Interpolated ``beta(l)``; outside the grid the root is solved directly."""
    arr = np.asarray(l, dtype=float)
    flat = arr.ravel()
    out = np.empty(flat.shape)
    inf = np.isinf(flat)
    out[inf] = table.asymptote
    inside = ~inf & (flat >= table.grid_l[0]) & (flat <= table.grid_l[-1])
    out[inside] = table._interp(np.log(flat[inside]))
    outside = ~inf & ~inside
    if np.any(outside):
        out[outside] = solve_beta(table.kernel, table.n, table.alpha, flat[outside], tol=table.tolerance)
    out = out.reshape(arr.shape)
    return out if out.ndim else float(out)
