"""The radial Voronoi density estimator.

The density at ``x`` with nearest generator ``p`` is

    f(x) = K(beta(l(x)) d(x, p)) / (alpha m Vol(S^(n-1)))

where ``l(x)`` is the length of the ray from ``p`` through ``x`` inside the
Voronoi cell of ``p``.  Every cone from ``p`` carries the same mass, so each
cell integrates to ``1/m`` and the density stays continuous across cell
boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_count, check_points, check_positive, check_queries
from .beta import build_beta_table, lookup_beta
from .exceptions import KernelNotAdmissible, NeedsTwoPoints, ParameterError
from .geometry import PointSet, gabriel_graph, query_rays, ray_lengths
from .kernels import log_profile, log_tail_integral, log_unit_sphere_area, make_kernel, radial_integral

SAMPLE_CHUNK = 8192
SEGMENT_TOL = 1e-9


@dataclass(frozen=True)
class ModeSet:
    """Modes of a fitted model grouped by the three geometric cases."""

    point_modes: list
    midpoint_modes: list
    segment_modes: list
    epsilon: float

    def locations(self, points: np.ndarray) -> np.ndarray:
        """Isolated modes: the point modes followed by the midpoint modes."""
        locs = [points[p] for p in self.point_modes] + [mid for _, _, mid in self.midpoint_modes]
        return np.array(locs).reshape(len(locs), points.shape[1])

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "point_modes": [int(p) for p in self.point_modes],
            "midpoint_modes": [
                {"p": int(p), "q": int(q), "midpoint": [float(v) for v in mid]}
                for p, q, mid in self.midpoint_modes
            ],
            "segment_modes": [{"p": int(p), "q": int(q)} for p, q in self.segment_modes],
        }


def select_alpha(points) -> float:
    """Gabriel-graph heuristic for ``alpha``.

    Twice the mode threshold ``eps`` is set to the ``(m-1)/|E|`` quantile of
    the Gabriel edge lengths (linear interpolation between order
    statistics), which keeps modes from closing cycles in the graph.  Returns
    ``eps^n / n``.  The cost is cubic in the number of points.
    """
    ps = points if isinstance(points, PointSet) else PointSet(check_points(points))
    if ps.m < 2:
        raise NeedsTwoPoints("the alpha heuristic needs at least two points")
    graph = gabriel_graph(ps)
    ratio = min(1.0, max(0.0, (ps.m - 1) / len(graph)))
    eps = 0.5 * float(np.quantile(graph.lengths, ratio))
    return eps**ps.n / ps.n


class RVDE(DensityMixin, BaseEstimator):
    """Radial Voronoi density estimator.

    Parameters
    ----------
    kernel : {"rational", "exponential"} or dict
        Radial profile.  A dict may carry ``{"family": ..., "k": ...}``.
    k : int, optional
        Rational exponent; defaults to ``n_features + 1``.
    alpha : float or "heuristic", default="heuristic"
        Mass carried by each unit of solid angle.  ``"heuristic"`` picks it
        from the Gabriel graph of the training data (see :func:`select_alpha`).
    beta_grid_size : int, default=256
    beta_tol : float, default=1e-10
        Relative residual of the bandwidth solver.

    Attributes
    ----------
    points_ : PointSet
    kernel_ : Kernel
    alpha_ : float
    beta_table_ : BetaTable
    """

    def __init__(self, kernel="rational", k=None, alpha="heuristic", beta_grid_size=256, beta_tol=1e-10):
        self.kernel = kernel
        self.k = k
        self.alpha = alpha
        self.beta_grid_size = beta_grid_size
        self.beta_tol = beta_tol

    def fit(self, X, y=None):
        ps = X if isinstance(X, PointSet) else PointSet(check_points(X))
        kernel = make_kernel(self.kernel, ps.n, self.k)
        if kernel.family == "gaussian":
            raise KernelNotAdmissible("the gaussian kernel does not define a radial Voronoi estimator")
        log_tail_integral(kernel, ps.n)
        if isinstance(self.alpha, str):
            if self.alpha != "heuristic":
                raise ParameterError(f"alpha must be a number or 'heuristic', got {self.alpha!r}")
            alpha = select_alpha(ps)
        else:
            alpha = check_positive(self.alpha, "alpha")
        check_count(self.beta_grid_size, "beta_grid_size", 16)
        self.points_ = ps
        self.kernel_ = kernel
        self.alpha_ = alpha
        self.n_features_in_ = ps.n
        self.beta_table_ = build_beta_table(kernel, ps.n, alpha, self.beta_grid_size, self.beta_tol)
        self.log_norm_ = -(math.log(alpha) + math.log(ps.m) + log_unit_sphere_area(ps.n))
        return self

    @property
    def epsilon_(self) -> float:
        check_is_fitted(self, "alpha_")
        return (self.n_features_in_ * self.alpha_) ** (1.0 / self.n_features_in_)

    def score_samples(self, X):
        """Log density at each row of ``X``."""
        check_is_fitted(self, "beta_table_")
        X = check_queries(X, self.n_features_in_)
        _, dist, lengths = query_rays(self.points_, X)
        out = np.full(len(X), self.log_norm_)
        moved = dist > 0
        if np.any(moved):
            d = dist[moved]
            beta = lookup_beta(self.beta_table_, np.maximum(lengths[moved], d))
            out[moved] += log_profile(self.kernel_, beta * d)
        return out

    def score(self, X, y=None):
        """Mean log-likelihood of ``X``."""
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples=1, random_state=None):
        """Draw exact samples.

        A generator is picked uniformly, a direction uniformly on the sphere,
        and the radius by inverting the radial CDF ``I(beta, t) / alpha`` on
        ``[0, l]`` with bisection.  Chunks of 8192 samples use independent
        child streams of ``random_state``, so output depends only on the seed
        and the count.
        """
        check_is_fitted(self, "beta_table_")
        n_samples = check_count(n_samples, "n_samples")
        seed = random_state if random_state is not None else np.random.SeedSequence().entropy
        chunks = -(-n_samples // SAMPLE_CHUNK)
        children = np.random.SeedSequence(seed).spawn(chunks)
        parts = []
        for i, child in enumerate(children):
            size = min(SAMPLE_CHUNK, n_samples - i * SAMPLE_CHUNK)
            parts.append(self._sample_chunk(np.random.default_rng(child), size))
        return np.concatenate(parts, axis=0)

    def _sample_chunk(self, rng, size):
        ps, n = self.points_, self.n_features_in_
        ids = rng.integers(ps.m, size=size)
        g = rng.standard_normal((size, n))
        sigma = g / np.linalg.norm(g, axis=1, keepdims=True)
        u = rng.random(size)
        lengths = ray_lengths(ps.points, ids, sigma)
        beta = lookup_beta(self.beta_table_, lengths)
        t = self._invert_radial_cdf(beta, lengths, u)
        return ps.points[ids] + t[:, None] * sigma

    def _invert_radial_cdf(self, beta, lengths, u):
        kernel, n, alpha = self.kernel_, self.n_features_in_, self.alpha_
        target = u * alpha
        lo = np.zeros_like(beta)
        hi = lengths.copy()
        inf = np.isinf(hi)
        if np.any(inf):
            # unbounded ray: grow until the CDF exceeds the target
            top = 1.0 / beta[inf]
            for _ in range(200):
                low = radial_integral(kernel, beta[inf], top, n) < target[inf]
                if not np.any(low):
                    break
                top[low] *= 2.0
            hi[inf] = top
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = radial_integral(kernel, beta, mid, n) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def modes(self) -> ModeSet:
        """Classify the modes through the Gabriel graph truncated at ``2 eps``.

        Generators without a Gabriel edge of length ``<= 2 eps`` are modes;
        shorter edges carry a mode at their midpoint; edges of length exactly
        ``2 eps`` make the whole segment a plateau of maximal density.
        """
        check_is_fitted(self, "beta_table_")
        eps = self.epsilon_
        graph = gabriel_graph(self.points_)
        pts = self.points_.points
        tol = SEGMENT_TOL * (1.0 + 2.0 * eps)
        short = graph.lengths < 2.0 * eps - tol
        tie = np.abs(graph.lengths - 2.0 * eps) <= tol
        touched = np.zeros(self.points_.m, dtype=bool)
        touched[graph.edges[short | tie].ravel()] = True
        midpoints = [
            (int(p), int(q), 0.5 * (pts[p] + pts[q])) for (p, q) in graph.edges[short]
        ]
        segments = [(int(p), int(q)) for (p, q) in graph.edges[tie]]
        return ModeSet(np.flatnonzero(~touched).tolist(), midpoints, segments, eps)


# -- functional interface ---------------------------------------------------


def fit(points, kernel="rational", alpha="heuristic", **params) -> RVDE:
    return RVDE(kernel=kernel, alpha=alpha, **params).fit(points)


def log_density(model: RVDE, x):
    """Log density at ``x``; a single point returns a float."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and x.shape[0] == model.n_features_in_)
    out = model.score_samples(np.atleast_1d(x))
    return float(out[0]) if single else out


def sample(model: RVDE, seed, count: int) -> np.ndarray:
    return model.sample(count, random_state=seed)


def modes(model: RVDE) -> ModeSet:
    return model.modes()
