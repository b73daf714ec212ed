"""Synthetic benchmark distributions, their exact log densities, and CSV ingestion.

Dirichlet data are generated as ``n + 1`` component vectors whose last
coordinate is dropped, so the stored points live in ``n`` dimensions and have
a proper density on ``{x > 0, sum(x) < 1}``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from ._validation import check_count
from .exceptions import ParameterError, ParseError
from .geometry import PointSet

FAMILIES = ("gaussian", "laplace", "dirichlet", "mixture")
MIXTURE_SCALES = (0.1, 10.0)
MIXTURE_WEIGHTS = (0.5, 0.5)


@dataclass(frozen=True)
class SyntheticSpec:
    """A named synthetic density in ``n`` dimensions."""

    family: str
    n: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        family = "mixture" if self.family == "gaussian_mixture" else self.family
        object.__setattr__(self, "family", family)
        if family not in FAMILIES:
            raise ParameterError(f"unknown synthetic family {self.family!r}")
        check_count(self.n, "n")
        if family == "dirichlet":
            conc = self.params.get("concentration", 1.0 / (self.n + 1))
            if not conc > 0:
                raise ParameterError("dirichlet concentration must be positive")
        if family == "mixture":
            weights = self.params.get("weights", MIXTURE_WEIGHTS)
            scales = self.params.get("scales", MIXTURE_SCALES)
            if abs(sum(weights) - 1.0) > 1e-12 or min(weights) <= 0 or min(scales) <= 0:
                raise ParameterError("mixture weights must be positive and sum to 1; scales positive")

    @property
    def concentration(self) -> float:
        return float(self.params.get("concentration", 1.0 / (self.n + 1)))

    def mixture(self):
        """``(means, scales, weights)`` of the two-component mixture."""
        means = np.zeros((2, self.n))
        means[0, 0], means[1, 0] = -0.5, 0.5
        return (
            means,
            np.asarray(self.params.get("scales", MIXTURE_SCALES), dtype=float),
            np.asarray(self.params.get("weights", MIXTURE_WEIGHTS), dtype=float),
        )


@dataclass(frozen=True)
class LabeledSample:
    train: PointSet
    test: PointSet
    spec: object
    seed: int | None


def draw(spec: SyntheticSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    n = spec.n
    if spec.family == "gaussian":
        return rng.standard_normal((size, n))
    if spec.family == "laplace":
        return rng.laplace(size=(size, n))
    if spec.family == "dirichlet":
        full = rng.dirichlet(np.full(n + 1, spec.concentration), size=size)
        return full[:, :n]
    means, scales, weights = spec.mixture()
    comp = rng.choice(2, size=size, p=weights)
    return means[comp] + scales[comp, None] * rng.standard_normal((size, n))


def generate(spec: SyntheticSpec, m_train: int, m_test: int, seed) -> LabeledSample:
    """Independent train and test draws; each split has its own child stream."""
    check_count(m_train, "m_train")
    check_count(m_test, "m_test")
    train_ss, test_ss = np.random.SeedSequence(seed).spawn(2)
    train = draw(spec, m_train, np.random.default_rng(train_ss))
    test = draw(spec, m_test, np.random.default_rng(test_ss))
    return LabeledSample(PointSet(train), PointSet(test), spec, seed)


def true_log_density(spec: SyntheticSpec, X) -> np.ndarray:
    """Exact log density; ``-inf`` outside the support."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if spec.n == 1 else X[None, :]
    n = spec.n
    if spec.family == "gaussian":
        return -0.5 * np.sum(X * X, axis=1) - 0.5 * n * math.log(2 * math.pi)
    if spec.family == "laplace":
        return -np.sum(np.abs(X), axis=1) - n * math.log(2.0)
    if spec.family == "dirichlet":
        a = spec.concentration
        last = 1.0 - X.sum(axis=1)
        inside = np.all(X > 0, axis=1) & (last > 0)
        out = np.full(len(X), -np.inf)
        log_norm = gammaln((n + 1) * a) - (n + 1) * gammaln(a)
        Xi = X[inside]
        out[inside] = log_norm + (a - 1.0) * (np.log(Xi).sum(axis=1) + np.log(last[inside]))
        return out
    means, scales, weights = spec.mixture()
    comps = []
    for mu, s, w in zip(means, scales, weights):
        d2 = np.sum((X - mu) ** 2, axis=1)
        comps.append(math.log(w) - 0.5 * d2 / s**2 - n * math.log(s) - 0.5 * n * math.log(2 * math.pi))
    return logsumexp(np.stack(comps), axis=0)


def _parse_float(cell):
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path, minmax: bool = False) -> PointSet:
    """Read a rectangular numeric CSV; a non-numeric first row is a header.

    Parameters
    ----------
    minmax : bool
        Rescale every column to ``[0, 1]``.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty CSV file")
    start = 1 if any(_parse_float(c) is None for c in rows[0]) else 0
    width = len(rows[start]) if start < len(rows) else 0
    data = []
    for i, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", row=i)
        vals = []
        for j, cell in enumerate(row, start=1):
            v = _parse_float(cell)
            if v is None:
                raise ParseError(f"non-numeric cell {cell!r}", row=i, column=j)
            if not math.isfinite(v):
                raise ParseError("non-finite value", row=i, column=j)
            vals.append(v)
        data.append(vals)
    if not data:
        raise ParseError("CSV holds a header but no data rows")
    X = np.array(data, dtype=float)
    if minmax:
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        X = (X - lo) / span
    return PointSet(X)


def write_csv(path, X, header=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        for row in np.asarray(X):
            w.writerow([repr(float(v)) for v in row])


def subsample_split(ps, fraction: float, seed):
    """Uniform split without replacement into ``(part, rest)``."""
    X = ps.points if isinstance(ps, PointSet) else np.asarray(ps, dtype=float)
    if not 0 < fraction < 1:
        raise ParameterError("fraction must lie strictly between 0 and 1")
    m = len(X)
    k = int(round(fraction * m))
    if k == 0 or k == m:
        raise ParameterError(f"fraction {fraction} of {m} rows leaves an empty part")
    perm = np.random.default_rng(seed).permutation(m)
    return PointSet(X[np.sort(perm[:k])]), PointSet(X[np.sort(perm[k:])])
