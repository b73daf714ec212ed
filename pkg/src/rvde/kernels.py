"""Radial kernel profiles and their one-dimensional radial integrals.

A kernel here is a decreasing profile ``K`` on a half line ``(A, inf)`` with
``K(0) = 1``.  All estimators consume it through the cone integral

    I(beta, l) = int_0^l t^(n-1) K(beta t) dt

which is computed in closed form from the dimensionless quantity
``J(s) = int_0^1 u^(n-1) K(s u) du`` via ``I(beta, l) = l^n J(beta l)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .exceptions import DomainError, IntegrationError, NotIntegrable, ParameterError

FAMILIES = ("exponential", "rational", "gaussian")


@dataclass(frozen=True)
class Kernel:
    """Immutable kernel descriptor.

    Parameters
    ----------
    family : {"exponential", "rational", "gaussian"}
    k : int, optional
        Exponent of the rational profile ``(1 + t)^-k``.  Ignored by the
        other families.
    """

    family: str
    k: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown kernel family {self.family!r}")
        if self.family == "rational":
            if self.k is None or int(self.k) != self.k or self.k < 1:
                raise ParameterError("rational kernel needs a positive integer exponent k")
            object.__setattr__(self, "k", int(self.k))
        elif self.k is not None:
            object.__setattr__(self, "k", None)

    @property
    def domain_bound(self) -> float:
        return -1.0 if self.family == "rational" else -math.inf

    def to_config(self) -> dict:
        cfg = {"family": self.family}
        if self.k is not None:
            cfg["k"] = self.k
        return cfg

    def __str__(self):
        return f"rational(k={self.k})" if self.family == "rational" else self.family


def make_kernel(kernel, n: int, k: int | None = None) -> Kernel:
    """Resolve a family name, config dict or :class:`Kernel` for dimension ``n``.

    The rational exponent defaults to ``n + 1``.
    """
    if isinstance(kernel, Kernel):
        return kernel
    if isinstance(kernel, dict):
        family = kernel.get("family")
        k = kernel.get("k", k)
    else:
        family = kernel
    if family == "rational" and k is None:
        k = n + 1
    return Kernel(family, k)


def _check_domain(kernel: Kernel, t):
    if kernel.family == "rational" and np.any(np.asarray(t) <= -1.0):
        raise DomainError(f"{kernel} is only defined for t > -1")
    if np.any(np.isnan(t)):
        raise DomainError("kernel argument is NaN")


def log_profile(kernel: Kernel, t):
    """``log K(t)`` without domain validation (hot path)."""
    t = np.asarray(t, dtype=float)
    if kernel.family == "exponential":
        return -t
    if kernel.family == "rational":
        return -kernel.k * np.log1p(t)
    return -0.5 * t * t


def profile(kernel: Kernel, t):
    """Evaluate the kernel profile ``K(t)``."""
    _check_domain(kernel, t)
    t = np.asarray(t, dtype=float)
    if kernel.family == "exponential":
        out = np.exp(-t)
    elif kernel.family == "rational":
        out = (t + 1.0) ** (-kernel.k)
    else:
        out = np.exp(-0.5 * t * t)
    return out if out.ndim else float(out)


def profile_derivative(kernel: Kernel, t):
    """Analytic derivative ``K'(t)``."""
    _check_domain(kernel, t)
    t = np.asarray(t, dtype=float)
    if kernel.family == "exponential":
        out = -np.exp(-t)
    elif kernel.family == "rational":
        out = -kernel.k * (t + 1.0) ** (-kernel.k - 1)
    else:
        out = -t * np.exp(-0.5 * t * t)
    return out if out.ndim else float(out)


def log_unit_sphere_area(n: int) -> float:
    return math.log(2.0) + 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n)


def unit_sphere_area(n: int) -> float:
    """Surface area ``2 pi^(n/2) / Gamma(n/2)`` of the unit sphere in R^n."""
    if n < 1:
        raise ParameterError("dimension must be >= 1")
    return math.exp(log_unit_sphere_area(n))


def log_tail_integral(kernel: Kernel, n: int) -> float:
    if kernel.family == "exponential":
        return math.lgamma(n)
    if kernel.family == "rational":
        if kernel.k <= n:
            raise NotIntegrable(f"t^{n - 1} (1+t)^-{kernel.k} is not integrable at infinity")
        return math.lgamma(n) + math.lgamma(kernel.k - n) - math.lgamma(kernel.k)
    return (0.5 * n - 1.0) * math.log(2.0) + math.lgamma(0.5 * n)


def tail_integral(kernel: Kernel, n: int) -> float:
    """``int_0^inf t^(n-1) K(t) dt``."""
    return math.exp(log_tail_integral(kernel, n))


# --- dimensionless cone integral J(s) -------------------------------------


def _cone_exponential(s, n):
    out = np.empty_like(s)
    small = s <= 1.0
    out[small] = special.hyp1f1(n, n + 1.0, -s[small]) / n
    big = ~small
    if np.any(big):
        sb = s[big]
        out[big] = np.exp(math.lgamma(n) + np.log(special.gammainc(n, sb)) - n * np.log(sb))
    return out


def _cone_gaussian(s, n):
    a = 0.5 * s * s
    out = np.empty_like(s)
    small = a <= 1.0
    out[small] = special.hyp1f1(0.5 * n, 0.5 * n + 1.0, -a[small]) / n
    big = ~small
    if np.any(big):
        ab = a[big]
        out[big] = 0.5 * np.exp(
            math.lgamma(0.5 * n) + np.log(special.gammainc(0.5 * n, ab)) - 0.5 * n * np.log(ab)
        )
    return out


def _cone_rational(s, n, k):
    out = np.full_like(s, np.nan)
    neg = s < 0.0
    if np.any(neg):
        m = k - n - 1
        c = -s[neg]
        if m >= 0:
            # u -> v = c u / (1 - c u) turns the integrand into a polynomial
            v = c / (1.0 - c)
            acc = np.zeros_like(c)
            for j in range(m + 1):
                acc += math.comb(m, j) * v**j / (n + j)
            out[neg] = acc * (1.0 - c) ** (-n)
        else:
            out[neg] = special.hyp2f1(k, n, n + 1.0, c) / n
    small = (s >= 0.0) & (s < 0.5)
    out[small] = special.hyp2f1(k, n, n + 1.0, -s[small]) / n
    big = s >= 0.5
    if np.any(big):
        sb = s[big]
        if k > n:
            x = sb / (1.0 + sb)
            out[big] = np.exp(
                special.betaln(n, k - n) + np.log(special.betainc(n, k - n, x)) - n * np.log(sb)
            )
        else:
            out[big] = special.hyp2f1(k, n, n + 1.0, -sb) / n
    return out


def cone_integral(kernel: Kernel, s, n: int):
    """``J(s) = int_0^1 u^(n-1) K(s u) du`` for ``s > A`` (vectorized, unchecked)."""
    s = np.asarray(s, dtype=float)
    flat = np.atleast_1d(s).astype(float).ravel()
    if kernel.family == "exponential":
        out = _cone_exponential(flat, n)
    elif kernel.family == "rational":
        out = _cone_rational(flat, n, kernel.k)
    else:
        out = _cone_gaussian(flat, n)
    bad = ~np.isfinite(out) & np.isfinite(flat)
    if kernel.family == "rational":
        bad &= flat > -1.0
    if np.any(bad):
        out[bad] = [quad_radial_integral(kernel, v, 1.0, n) for v in flat[bad]]
    return out.reshape(s.shape)


def radial_integral(kernel: Kernel, beta, l, n: int):
    """``int_0^l t^(n-1) K(beta t) dt``.

    ``beta`` and ``l`` broadcast against each other; ``l`` may be ``inf``
    when ``beta > 0``.  Raises :class:`DomainError` when ``beta <= A / l``.
    """
    beta = np.asarray(beta, dtype=float)
    l = np.asarray(l, dtype=float)
    if np.any(l <= 0):
        raise DomainError("ray length must be positive")
    beta, l = np.broadcast_arrays(beta, l)
    inf = np.isinf(l)
    if kernel.family == "gaussian":
        bad_inf = inf & (beta == 0)
    else:
        bad_inf = inf & (beta <= 0)
    if np.any(bad_inf):
        raise DomainError("an infinite ray needs a positive bandwidth")
    if kernel.family == "rational" and np.any(~inf & (beta * l <= -1.0)):
        raise DomainError("beta must exceed A / l")
    out = np.empty(beta.shape)
    fin = ~inf
    if np.any(fin):
        lf = l[fin]
        out[fin] = lf**n * cone_integral(kernel, beta[fin] * lf, n)
    if np.any(inf):
        out[inf] = np.exp(log_tail_integral(kernel, n) - n * np.log(np.abs(beta[inf])))
    return out if out.ndim else float(out)


def radial_integral_derivative(kernel: Kernel, beta, l, n: int):
    """``d/dbeta`` of :func:`radial_integral`, i.e. ``int_0^l t^n K'(beta t) dt``."""
    if kernel.family == "exponential":
        return -np.asarray(radial_integral(kernel, beta, l, n + 1))
    if kernel.family == "rational":
        shifted = Kernel("rational", kernel.k + 1)
        return -kernel.k * np.asarray(radial_integral(shifted, beta, l, n + 1))
    return -np.asarray(beta) * np.asarray(radial_integral(kernel, beta, l, n + 2))


def quad_radial_integral(kernel: Kernel, beta: float, l: float, n: int, tol: float = 1e-12) -> float:
    """Adaptive-quadrature evaluation of :func:`radial_integral` (scalar)."""
    beta = float(beta)
    l = float(l)
    if kernel.family == "rational" and math.isfinite(l) and beta * l <= -1.0:
        raise DomainError("beta must exceed A / l")

    def f(t):
        return t ** (n - 1) * math.exp(float(log_profile(kernel, beta * t)))

    value, err = integrate.quad(f, 0.0, l, epsabs=0.0, epsrel=tol, limit=400)
    if err > max(1e-9 * abs(value), 1e-300):
        raise IntegrationError(f"quadrature reached only {err:.3g}", achieved=err)
    return value
