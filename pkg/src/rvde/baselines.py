"""Comparison estimators: KDE, adaptive KDE and the compactified Voronoi estimator.

All three reuse the radial profiles of :mod:`rvde.kernels`.  The multivariate
kernel is ``K(|v|) / (Vol(S^(n-1)) T_n)`` with ``T_n = int_0^inf t^(n-1) K(t) dt``,
which integrates to one over R^n.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_count, check_points, check_positive, check_queries
from .exceptions import PilotUnderflow
from .geometry import PointSet, ray_lengths
from .kernels import (
    Kernel,
    log_profile,
    log_tail_integral,
    log_unit_sphere_area,
    make_kernel,
    radial_integral,
    tail_integral,
)

_CHUNK = 2048


def alpha_from_bandwidth(kernel: Kernel, n: int, h: float) -> float:
    """Place a bandwidth on the alpha axis: ``h^n int_0^inf K(t) dt``.

    The integral is one-dimensional while the scale is ``h^n``; this is the
    conversion used to plot all estimators against a shared bandwidth axis.
    """
    h = check_positive(h, "h")
    return h**n * tail_integral(kernel, 1)


def bandwidth_from_alpha(kernel: Kernel, n: int, alpha: float) -> float:
    return (alpha / tail_integral(kernel, 1)) ** (1.0 / n)


def _log_kernel_norm(kernel: Kernel, n: int) -> float:
    return log_unit_sphere_area(n) + log_tail_integral(kernel, n)


def _pairwise_logsum(X, points, log_weights_fn):
    """``logsumexp_p`` of ``log_weights_fn(distances, slice)`` in row chunks."""
    out = np.empty(len(X))
    for a in range(0, len(X), _CHUNK):
        d = cdist(X[a:a + _CHUNK], points)
        out[a:a + _CHUNK] = logsumexp(log_weights_fn(d), axis=1)
    return out


class KDE(DensityMixin, BaseEstimator):
    """Fixed-bandwidth kernel density estimator with a radial profile.

    Evaluation is exact and costs ``O(m)`` per query.
    """

    def __init__(self, kernel="rational", k=None, bandwidth=1.0):
        self.kernel = kernel
        self.k = k
        self.bandwidth = bandwidth

    def fit(self, X, y=None):
        ps = X if isinstance(X, PointSet) else PointSet(check_points(X))
        self.kernel_ = make_kernel(self.kernel, ps.n, self.k)
        self.bandwidth_ = check_positive(self.bandwidth, "bandwidth")
        self.points_ = ps
        self.n_features_in_ = ps.n
        self.log_norm_ = -(math.log(ps.m) + ps.n * math.log(self.bandwidth_) + _log_kernel_norm(self.kernel_, ps.n))
        return self

    def score_samples(self, X):
        check_is_fitted(self, "points_")
        X = check_queries(X, self.n_features_in_)
        h = self.bandwidth_
        return self.log_norm_ + _pairwise_logsum(X, self.points_.points, lambda d: log_profile(self.kernel_, d / h))

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))


class AdaptiveKDE(DensityMixin, BaseEstimator):
    """KDE whose per-point bandwidth ``h * lambda_p`` shrinks where data is dense.

    ``lambda_p = sqrt(g / f(p))`` where ``f`` is a pilot KDE with the same
    global bandwidth and ``g`` the geometric mean of the pilot values.
    """

    def __init__(self, kernel="rational", k=None, bandwidth=1.0):
        self.kernel = kernel
        self.k = k
        self.bandwidth = bandwidth

    def fit(self, X, y=None):
        ps = X if isinstance(X, PointSet) else PointSet(check_points(X))
        pilot = KDE(self.kernel, self.k, self.bandwidth).fit(ps)
        log_pilot = pilot.score_samples(ps.points)
        bad = np.flatnonzero(~np.isfinite(log_pilot))
        if len(bad):
            raise PilotUnderflow(bad[0])
        self.pilot_ = pilot
        self.kernel_ = pilot.kernel_
        self.points_ = ps
        self.n_features_in_ = ps.n
        self.log_geometric_mean_ = float(np.mean(log_pilot))
        self.lambdas_ = np.exp(0.5 * (self.log_geometric_mean_ - log_pilot))
        self.local_bandwidths_ = pilot.bandwidth_ * self.lambdas_
        self._log_point_norm = -ps.n * np.log(self.local_bandwidths_)
        self.log_norm_ = -(math.log(ps.m) + _log_kernel_norm(self.kernel_, ps.n))
        return self

    def score_samples(self, X):
        check_is_fitted(self, "local_bandwidths_")
        X = check_queries(X, self.n_features_in_)
        hp = self.local_bandwidths_[None, :]
        lw = self._log_point_norm[None, :]
        return self.log_norm_ + _pairwise_logsum(
            X, self.points_.points, lambda d: log_profile(self.kernel_, d / hp) + lw
        )

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))


def cvde_ray_lengths(points: PointSet, mc_samples: int, random_state=0) -> np.ndarray:
    """Ray lengths along ``mc_samples`` uniform directions from every generator.

    Each generator draws its directions from its own child stream of
    ``random_state``.  Returns an ``(m, mc_samples)`` array.
    """
    m, n = points.m, points.n
    children = np.random.SeedSequence(random_state).spawn(m)
    dirs = np.empty((m, mc_samples, n))
    for i, child in enumerate(children):
        g = np.random.default_rng(child).standard_normal((mc_samples, n))
        dirs[i] = g / np.linalg.norm(g, axis=1, keepdims=True)
    ids = np.repeat(np.arange(m), mc_samples)
    return ray_lengths(points.points, ids, dirs.reshape(-1, n)).reshape(m, mc_samples)


class CVDE(DensityMixin, BaseEstimator):
    """Compactified Voronoi density estimator.

    Inside the cell of ``p`` the density is ``K(d(x,p)/h) / (m vol_p)`` with
    ``vol_p`` the kernel-weighted cell volume, estimated by averaging exact
    radial integrals over random directions.  The density jumps across cell
    boundaries.
    """

    def __init__(self, kernel="rational", k=None, bandwidth=1.0, mc_samples=100, random_state=0):
        self.kernel = kernel
        self.k = k
        self.bandwidth = bandwidth
        self.mc_samples = mc_samples
        self.random_state = random_state

    def fit(self, X, y=None, ray_lengths=None):
        """Estimate cell volumes.

        ``ray_lengths`` may carry the output of :func:`cvde_ray_lengths` for
        the same data and seed, which lets a bandwidth sweep skip ray casting.
        """
        ps = X if isinstance(X, PointSet) else PointSet(check_points(X))
        mc = check_count(self.mc_samples, "mc_samples")
        h = check_positive(self.bandwidth, "bandwidth")
        kernel = make_kernel(self.kernel, ps.n, self.k)
        if ray_lengths is None:
            ray_lengths = cvde_ray_lengths(ps, mc, self.random_state)
        if ray_lengths.shape != (ps.m, mc):
            raise ValueError("ray_lengths must have shape (n_points, mc_samples)")
        cone = radial_integral(kernel, 1.0 / h, ray_lengths, ps.n)
        self.volumes_ = math.exp(log_unit_sphere_area(ps.n)) * cone.mean(axis=1)
        self.ray_lengths_ = ray_lengths
        self.kernel_ = kernel
        self.bandwidth_ = h
        self.points_ = ps
        self.n_features_in_ = ps.n
        self._log_cell_norm = -(math.log(ps.m) + np.log(self.volumes_))
        return self

    def score_samples(self, X):
        check_is_fitted(self, "volumes_")
        X = check_queries(X, self.n_features_in_)
        ids, dist = self.points_.nearest(X)
        return log_profile(self.kernel_, dist / self.bandwidth_) + self._log_cell_norm[ids]

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))


# -- functional interface ---------------------------------------------------


def kde_log_density(model: KDE, x):
    return model.score_samples(np.atleast_1d(np.asarray(x, dtype=float)))


def adakde_fit(points, kernel, h) -> AdaptiveKDE:
    return AdaptiveKDE(kernel=kernel, bandwidth=h).fit(points)


def adakde_log_density(model: AdaptiveKDE, x):
    return model.score_samples(np.atleast_1d(np.asarray(x, dtype=float)))


def cvde_fit(points, kernel, h, mc_samples=100, seed=0) -> CVDE:
    return CVDE(kernel=kernel, bandwidth=h, mc_samples=mc_samples, random_state=seed).fit(points)


def cvde_log_density(model: CVDE, x):
    return model.score_samples(np.atleast_1d(np.asarray(x, dtype=float)))
