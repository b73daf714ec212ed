"""Point storage, nearest-neighbour queries, Voronoi ray casting and Gabriel graphs.

Voronoi cells are never built explicitly.  Everything is expressed through the
length of the segment of a ray cast from a generator that stays inside its cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .exceptions import DegenerateDirection, DimensionError, DuplicatePoints, EmptyDataset, ParameterError

_CANDIDATES = 8


class PointSet:
    """An immutable ``m x n`` generator set with a k-d tree index.

    Parameters
    ----------
    points : array-like of shape (m, n)
        A 1-D input is read as ``m`` points on the line.
    """

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise EmptyDataset("point set must be a non-empty m x n matrix")
        if not np.all(np.isfinite(pts)):
            bad = np.argwhere(~np.isfinite(pts))[0]
            raise ParameterError(f"non-finite coordinate at row {bad[0]}, column {bad[1]}")
        tree = cKDTree(pts)
        pairs = tree.query_pairs(0.0, output_type="ndarray")
        if len(pairs):
            pairs = np.sort(pairs, axis=1)
            first = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))[0]]
            raise DuplicatePoints(first[0], first[1])
        pts.setflags(write=False)
        self.points = pts
        self.tree = tree

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.m

    def __repr__(self):
        return f"PointSet(m={self.m}, n={self.n})"

    def check_queries(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :] if X.shape[0] == self.n else X[:, None]
        if X.ndim != 2 or X.shape[1] != self.n:
            raise DimensionError(f"expected queries of dimension {self.n}, got shape {np.shape(X)}")
        if not np.all(np.isfinite(X)):
            raise ParameterError("query points must be finite")
        return X

    def nearest(self, X):
        """Indices and distances of the closest generators to each row of ``X``.

        Ties are broken by the lowest row id, reproducing ``argmin`` over a
        linear scan of squared distances.
        """
        X = self.check_queries(X)
        k = min(self.m, _CANDIDATES)
        _, cand = self.tree.query(X, k=k)
        cand = np.asarray(cand).reshape(len(X), k)
        cand = np.sort(cand, axis=1)
        d2 = np.sum((self.points[cand] - X[:, None, :]) ** 2, axis=2)
        pick = np.argmin(d2, axis=1)
        rows = np.arange(len(X))
        return cand[rows, pick], np.sqrt(d2[rows, pick])


def build_point_set(points) -> PointSet:
    return PointSet(points)


def nearest(ps: PointSet, x):
    """Closest generator ``(p_id, distance)`` to a single query ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != ps.n:
        raise DimensionError(f"expected a {ps.n}-vector, got {x.shape[0]} coordinates")
    ids, dist = ps.nearest(x[None, :])
    return int(ids[0]), float(dist[0])


def ray_lengths(points: np.ndarray, origin_ids, directions) -> np.ndarray:
    """Vectorized ray casting; ``directions`` must already be unit vectors.

    For each ray from generator ``p`` along ``u`` returns the minimum over
    ``q`` with ``<u, q - p> > 0`` of ``|q - p|^2 / (2 <u, q - p>)``, or
    ``inf`` when no generator bounds the ray.
    """
    origin_ids = np.asarray(origin_ids)
    directions = np.asarray(directions, dtype=float)
    out = np.full(len(origin_ids), np.inf)
    order = np.argsort(origin_ids, kind="stable")
    sorted_ids = origin_ids[order]
    starts = np.flatnonzero(np.r_[True, sorted_ids[1:] != sorted_ids[:-1]])
    bounds = np.r_[starts, len(sorted_ids)]
    for a, b in zip(bounds[:-1], bounds[1:]):
        p = sorted_ids[a]
        rows = order[a:b]
        diff = points - points[p]
        num = np.einsum("ij,ij->i", diff, diff)
        den = 2.0 * (directions[rows] @ diff.T)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.where(den > 0.0, num[None, :] / den, np.inf)
        out[rows] = cand.min(axis=1)
    return out


def ray_length(ps: PointSet, p_id: int, direction) -> float:
    """Distance from generator ``p_id`` along ``direction`` to the boundary of its cell."""
    u = np.asarray(direction, dtype=float).reshape(-1)
    if u.shape[0] != ps.n:
        raise DimensionError(f"expected a {ps.n}-vector direction")
    norm = float(np.linalg.norm(u))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateDirection("direction must be a non-zero finite vector")
    if abs(norm - 1.0) > 1e-9:
        raise DegenerateDirection(f"direction must have unit norm, got {norm}")
    if not 0 <= p_id < ps.m:
        raise ParameterError(f"invalid generator id {p_id}")
    return float(ray_lengths(ps.points, [p_id], u[None, :])[0])


def query_rays(ps: PointSet, X):
    """Nearest generator, distance and ray length for every row of ``X``.

    Rows that coincide with their generator get ray length ``nan``.
    """
    X = ps.check_queries(X)
    ids, dist = ps.nearest(X)
    lengths = np.full(len(X), np.nan)
    moved = dist > 0
    if np.any(moved):
        u = (X[moved] - ps.points[ids[moved]]) / dist[moved, None]
        lengths[moved] = ray_lengths(ps.points, ids[moved], u)
    return ids, dist, lengths


@dataclass(frozen=True)
class GabrielGraph:
    """Edges ``(p, q)`` with ``p < q`` whose midpoint lies in both Voronoi cells."""

    edges: np.ndarray
    lengths: np.ndarray
    vertex_count: int

    def __len__(self):
        return len(self.edges)

    def edge_list(self):
        return [(int(p), int(q), float(d)) for (p, q), d in zip(self.edges, self.lengths)]

    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.vertex_count)


def gabriel_graph(ps: PointSet, rtol: float = 1e-9) -> GabrielGraph:
    """Gabriel graph by the cubic-time squared-distance test.

    A point ``r`` lies strictly inside the ball with diameter ``pq`` iff
    ``|r-p|^2 + |r-q|^2 < |p-q|^2``.  Boundary ties keep the edge.
    """
    pts = ps.points
    m = ps.m
    d2 = cdist(pts, pts, "sqeuclidean")
    edges = []
    for p in range(m - 1):
        q = np.arange(p + 1, m)
        target = d2[p, q]
        inside = d2[p][None, :] + d2[q] < (target - rtol * (1.0 + target))[:, None]
        keep = ~inside.any(axis=1)
        edges.extend((p, int(j)) for j in q[keep])
    edges = np.array(edges, dtype=int).reshape(-1, 2)
    lengths = np.linalg.norm(pts[edges[:, 0]] - pts[edges[:, 1]], axis=1) if len(edges) else np.zeros(0)
    return GabrielGraph(edges, lengths, m)
