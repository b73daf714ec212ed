"""Evaluation metrics and the bandwidth-sweep benchmark.

A sweep fits every estimator at every bandwidth of a shared grid for several
runs and records test log-likelihoods, optional empirical Hellinger
distances and wall-clock times.  The radial estimator is placed on the same
axis through :func:`~rvde.baselines.alpha_from_bandwidth` and is also run once
per repetition at its Gabriel-graph heuristic ``alpha``.
"""
from __future__ import annotations

import copy
import csv
import datetime as _dt
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .baselines import CVDE, KDE, AdaptiveKDE, alpha_from_bandwidth, bandwidth_from_alpha, cvde_ray_lengths
from .datasets import SyntheticSpec, generate, load_csv, subsample_split, true_log_density
from .estimator import RVDE, select_alpha
from .exceptions import ConfigError
from .geometry import PointSet
from .kernels import make_kernel

RESULTS_VERSION = "# rvde-sweep-results v1"
COLUMNS = (
    "estimator", "kernel", "h", "alpha", "run", "seed", "loglik_mean", "loglik_std_over_test",
    "underflows", "hellinger", "fit_sec", "eval_sec", "error",
)
METRIC_COLUMNS = ("loglik_mean", "loglik_std_over_test", "underflows", "hellinger", "alpha", "error")
ESTIMATORS = ("rvde", "kde", "adakde", "cvde")
HEURISTIC = "rvde-heuristic"

_KERNEL_SCHEMA = {
    "type": "object",
    "properties": {
        "family": {"enum": ["exponential", "rational", "gaussian"]},
        "k": {"type": ["integer", "null"], "minimum": 1},
    },
    "required": ["family"],
    "additionalProperties": False,
}

_DATASET_SCHEMA = {
    "type": "object",
    "properties": {
        "dataset": {"enum": ["gaussian", "laplace", "dirichlet", "mixture", "csv", "inline"]},
        "n": {"type": "integer", "minimum": 1},
        "m_train": {"type": "integer", "minimum": 1},
        "m_test": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "path": {"type": "string"},
        "test_path": {"type": "string"},
        "test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "subsample": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "minmax": {"type": "boolean"},
        "points": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 1}},
        "test_points": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 1}},
    },
    "required": ["dataset"],
    "allOf": [
        {"if": {"properties": {"dataset": {"enum": ["gaussian", "laplace", "dirichlet", "mixture"]}}},
         "then": {"required": ["n"]}},
        {"if": {"properties": {"dataset": {"const": "csv"}}}, "then": {"required": ["path"]}},
        {"if": {"properties": {"dataset": {"const": "inline"}}}, "then": {"required": ["points"]}},
    ],
    "additionalProperties": False,
}

_ESTIMATOR_SCHEMA = {
    "type": "object",
    "properties": {
        "estimator": {"enum": list(ESTIMATORS)},
        "kernel": _KERNEL_SCHEMA,
        "alpha": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "heuristic"}]},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "mc_samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "beta_grid_size": {"type": "integer", "minimum": 16},
        "beta_tol": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["estimator"],
    "additionalProperties": False,
}

_GRID_SCHEMA = {
    "oneOf": [
        {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        {
            "type": "object",
            "properties": {
                "min": {"type": "number", "exclusiveMinimum": 0},
                "max": {"type": "number", "exclusiveMinimum": 0},
                "count": {"type": "integer", "minimum": 1},
            },
            "required": ["min", "max", "count"],
            "additionalProperties": False,
        },
    ]
}

_SWEEP_SCHEMA = {
    "type": "object",
    "properties": {
        "estimators": {"type": "array", "items": {"enum": list(ESTIMATORS)}, "minItems": 1, "uniqueItems": True},
        "kernel": _KERNEL_SCHEMA,
        "bandwidths": _GRID_SCHEMA,
        "alphas": _GRID_SCHEMA,
        "runs": {"type": "integer", "minimum": 1},
        "metrics": {"type": "array", "items": {"enum": ["loglik", "hellinger"]}, "uniqueItems": True},
        "mc_samples": {"type": "integer", "minimum": 1},
        "heuristic": {"type": "boolean"},
        "beta_grid_size": {"type": "integer", "minimum": 16},
    },
    "required": ["estimators", "kernel"],
    "oneOf": [{"required": ["bandwidths"]}, {"required": ["alphas"]}],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "properties": {
        "dataset": _DATASET_SCHEMA,
        "estimator": _ESTIMATOR_SCHEMA,
        "sweep": _SWEEP_SCHEMA,
        "sample": {
            "type": "object",
            "properties": {"count": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
    },
    "required": ["dataset"],
    "additionalProperties": False,
}


def validate_config(config: dict, require=()) -> dict:
    """Check ``config`` against :data:`CONFIG_SCHEMA`; errors carry a JSON pointer."""
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "".join(f"/{p}" for p in err.absolute_path)
        raise ConfigError(err.message, pointer)
    for key in require:
        if key not in config:
            raise ConfigError(f"'{key}' section is required for this command", "")
    return config


# -- metrics ------------------------------------------------------------------


def evaluate_loglik(log_density_fn, test, return_std=False):
    """Mean test log-likelihood and the number of points of zero density.

    ``log_density_fn`` maps an ``(N, n)`` array to log densities.  Any
    underflow makes the mean ``-inf``; nothing is clipped.
    """
    X = test.points if isinstance(test, PointSet) else np.asarray(test, dtype=float)
    if len(X) == 0:
        raise ValueError("test set is empty")
    logs = np.asarray(log_density_fn(X), dtype=float)
    under = int(np.sum(np.isneginf(logs)))
    if under:
        mean, std = -math.inf, math.nan
    else:
        mean, std = float(np.mean(logs)), float(np.std(logs))
    if return_std:
        return mean, under, std
    return mean, under


def evaluate_hellinger(log_density_fn, true_log_density_fn, test) -> float:
    """Test-set average ``(1/2N) sum (sqrt f - sqrt rho)^2``.

    This is an empirical average over the test points, not the integral
    Hellinger distance.
    """
    X = test.points if isinstance(test, PointSet) else np.asarray(test, dtype=float)
    f = np.exp(0.5 * np.asarray(log_density_fn(X), dtype=float))
    rho = np.exp(0.5 * np.asarray(true_log_density_fn(X), dtype=float))
    return float(np.sum((f - rho) ** 2) / (2 * len(X)))


# -- configuration helpers -----------------------------------------------------


def _grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        if spec["max"] < spec["min"]:
            raise ConfigError("max must be >= min", "/sweep/bandwidths")
        return np.geomspace(spec["min"], spec["max"], spec["count"])
    return np.asarray(spec, dtype=float)


def _synthetic(ds: dict):
    if ds["dataset"] in ("csv", "inline"):
        return None
    return SyntheticSpec(ds["dataset"], ds["n"])


class DataSource:
    """Produces the train/test pair of every run from a dataset config."""

    def __init__(self, ds: dict):
        self.config = ds
        self.spec = _synthetic(ds)
        self.base_seed = int(ds.get("seed", 0))
        self._fixed = None
        if self.spec is None:
            if ds["dataset"] == "inline":
                train = PointSet(ds["points"])
                test = PointSet(ds["test_points"]) if "test_points" in ds else train
            else:
                train = load_csv(ds["path"], ds.get("minmax", False))
                if "test_path" in ds:
                    test = load_csv(ds["test_path"], ds.get("minmax", False))
                else:
                    test, train = subsample_split(train, ds.get("test_fraction", 0.1), self.base_seed)
            self._fixed = (train, test)

    @property
    def n(self) -> int:
        return self.spec.n if self.spec is not None else self._fixed[0].n

    def run_seed(self, run: int) -> int:
        return self.base_seed + run

    def draw(self, run: int):
        seed = self.run_seed(run)
        ds = self.config
        if self.spec is not None:
            sample = generate(self.spec, ds.get("m_train", 1000), ds.get("m_test", 1000), seed)
            return sample.train, sample.test
        train, test = self._fixed
        frac = ds.get("subsample", 1.0)
        if frac < 1.0:
            train, _ = subsample_split(train, frac, seed)
        return train, test

    def true_log_density(self):
        if self.spec is None:
            return None
        spec = self.spec
        return lambda X: true_log_density(spec, X)


def build_estimator(name: str, kernel, n: int, h=None, alpha=None, mc_samples=100, seed=0,
                    beta_grid_size=256, beta_tol=1e-10):
    kernel = make_kernel(kernel, n)
    if name == "rvde":
        if alpha is None and h is None:
            alpha = "heuristic"
        elif alpha is None:
            alpha = alpha_from_bandwidth(kernel, n, h)
        return RVDE(kernel=kernel, alpha=alpha, beta_grid_size=beta_grid_size, beta_tol=beta_tol)
    if h is None:
        if alpha is None or alpha == "heuristic":
            raise ConfigError(f"estimator {name!r} needs a bandwidth 'h'", "/estimator/h")
        h = bandwidth_from_alpha(kernel, n, alpha)
    if name == "kde":
        return KDE(kernel=kernel, bandwidth=h)
    if name == "adakde":
        return AdaptiveKDE(kernel=kernel, bandwidth=h)
    if name == "cvde":
        return CVDE(kernel=kernel, bandwidth=h, mc_samples=mc_samples, random_state=seed)
    raise ConfigError(f"unknown estimator {name!r}", "/estimator/estimator")


def estimator_from_config(cfg: dict, n: int):
    return build_estimator(
        cfg["estimator"], cfg.get("kernel", {"family": "rational"}), n,
        h=cfg.get("h"), alpha=cfg.get("alpha"), mc_samples=cfg.get("mc_samples", 100),
        seed=cfg.get("seed", 0), beta_grid_size=cfg.get("beta_grid_size", 256),
        beta_tol=cfg.get("beta_tol", 1e-10),
    )


def fit_and_score(model, train, test, truth=None, fit_kwargs=None, extra_fit_sec=0.0):
    """Fit, evaluate and time one model; returns a metrics dict."""
    t0 = time.perf_counter()
    model.fit(train, **(fit_kwargs or {}))
    t1 = time.perf_counter()
    mean, under, std = evaluate_loglik(model.score_samples, test, return_std=True)
    hell = evaluate_hellinger(model.score_samples, truth, test) if truth is not None else math.nan
    t2 = time.perf_counter()
    return {
        "loglik_mean": mean,
        "loglik_std_over_test": std,
        "underflows": under,
        "hellinger": hell,
        "fit_sec": t1 - t0 + extra_fit_sec,
        "eval_sec": t2 - t1,
    }


# -- sweep ---------------------------------------------------------------------


@dataclass
class SweepResult:
    """Per-cell rows, their aggregates and provenance."""

    rows: list
    heuristic_rows: list
    aggregates: list
    best: dict
    config: dict
    created: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat())

    def all_rows(self):
        return self.rows + self.heuristic_rows

    def to_json(self) -> dict:
        return {
            "schema": "rvde-sweep-aggregate/1",
            "created": self.created,
            "config": self.config,
            "aggregates": self.aggregates,
            "best": self.best,
            "heuristic": aggregate_rows(self.heuristic_rows) if self.heuristic_rows else [],
        }


def _mean_std(values):
    vals = np.asarray(values, dtype=float)
    if len(vals) == 0:
        return math.nan, math.nan
    if np.any(np.isnan(vals)):
        return math.nan, math.nan
    if np.any(np.isneginf(vals)):
        return -math.inf, math.nan
    mean = float(np.mean(vals))
    std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
    return mean, std


def aggregate_rows(rows) -> list:
    """Mean and standard deviation across runs for every ``(estimator, h)`` cell."""
    groups = {}
    for r in rows:
        groups.setdefault((r["estimator"], r["h"]), []).append(r)
    out = []
    for (est, h), rs in groups.items():
        rs = sorted(rs, key=lambda r: r["run"])
        ll_mean, ll_std = _mean_std([r["loglik_mean"] for r in rs])
        he_mean, he_std = _mean_std([r["hellinger"] for r in rs])
        out.append({
            "estimator": est,
            "h": h,
            "alpha": float(np.mean([r["alpha"] for r in rs])),
            "runs": len(rs),
            "loglik_mean": ll_mean,
            "loglik_std": ll_std,
            "hellinger_mean": he_mean,
            "hellinger_std": he_std,
            "underflows": int(sum(r["underflows"] for r in rs if r["underflows"] is not None)),
            "errors": sum(1 for r in rs if r["error"]),
            "fit_sec": float(np.mean([r["fit_sec"] for r in rs])),
            "eval_sec": float(np.mean([r["eval_sec"] for r in rs])),
        })
    return out


def best_cells(aggregates) -> dict:
    """Per estimator, the bandwidth with the highest mean test log-likelihood."""
    best = {}
    for a in aggregates:
        if not np.isfinite(a["loglik_mean"]):
            continue
        cur = best.get(a["estimator"])
        if cur is None or a["loglik_mean"] > cur["loglik_mean"]:
            best[a["estimator"]] = a
    return best


def _error_row(exc):
    return {
        "loglik_mean": math.nan, "loglik_std_over_test": math.nan, "underflows": 0,
        "hellinger": math.nan, "fit_sec": 0.0, "eval_sec": 0.0, "error": f"{type(exc).__name__}: {exc}",
    }


def run_sweep(config: dict, threads: int = 1, progress=None) -> SweepResult:
    """Fit every estimator on every grid value for every run.

    All randomness derives from the dataset seed and the run index, so the
    metric columns do not depend on ``threads``.
    """
    validate_config(config, require=("sweep",))
    sw = config["sweep"]
    source = DataSource(config["dataset"])
    n = source.n
    kernel = make_kernel(sw["kernel"], n)
    if "bandwidths" in sw:
        hs = _grid(sw["bandwidths"])
    else:
        hs = np.array([bandwidth_from_alpha(kernel, n, a) for a in _grid(sw["alphas"])])
    runs = sw.get("runs", 1)
    metrics = sw.get("metrics", ["loglik"])
    mc = sw.get("mc_samples", 100)
    grid_size = sw.get("beta_grid_size", 256)
    truth = source.true_log_density() if "hellinger" in metrics else None
    if "hellinger" in metrics and truth is None:
        raise ConfigError("hellinger needs a synthetic dataset with a known density", "/sweep/metrics")
    estimators = sw["estimators"]

    data = [source.draw(r) for r in range(runs)]
    cvde_rays = {}
    if "cvde" in estimators:
        for r, (train, _) in enumerate(data):
            t0 = time.perf_counter()
            cvde_rays[r] = (cvde_ray_lengths(train, mc, source.run_seed(r)), time.perf_counter() - t0)

    tasks = [(r, est, float(h)) for r in range(runs) for est in estimators for h in hs]

    def cell(task):
        r, est, h = task
        train, test = data[r]
        seed = source.run_seed(r)
        row = {"estimator": est, "kernel": str(kernel), "h": h,
               "alpha": alpha_from_bandwidth(kernel, n, h), "run": r, "seed": seed}
        try:
            model = build_estimator(est, kernel, n, h=h, mc_samples=mc, seed=seed, beta_grid_size=grid_size)
            fit_kwargs, extra = None, 0.0
            if est == "cvde":
                rays, extra = cvde_rays[r]
                fit_kwargs = {"ray_lengths": rays}
            row.update(fit_and_score(model, train, test, truth, fit_kwargs, extra))
            row["error"] = ""
        except Exception as exc:  # noqa: BLE001 - recorded per row, sweep continues
            row.update(_error_row(exc))
        if progress:
            progress(row)
        return row

    def heuristic(r):
        train, test = data[r]
        row = {"estimator": HEURISTIC, "kernel": str(kernel), "run": r, "seed": source.run_seed(r)}
        try:
            t0 = time.perf_counter()
            alpha = select_alpha(train)
            extra = time.perf_counter() - t0
            row["alpha"] = alpha
            row["h"] = bandwidth_from_alpha(kernel, n, alpha)
            model = RVDE(kernel=kernel, alpha=alpha, beta_grid_size=grid_size)
            row.update(fit_and_score(model, train, test, truth, None, extra))
            row["error"] = ""
        except Exception as exc:  # noqa: BLE001
            row.setdefault("alpha", math.nan)
            row.setdefault("h", math.nan)
            row.update(_error_row(exc))
        return row

    want_heuristic = "rvde" in estimators and sw.get("heuristic", True)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(cell, tasks))
            heur = list(pool.map(heuristic, range(runs))) if want_heuristic else []
    else:
        rows = [cell(t) for t in tasks]
        heur = [heuristic(r) for r in range(runs)] if want_heuristic else []
    rows = [{c: row[c] for c in COLUMNS} for row in rows]
    heur = [{c: row[c] for c in COLUMNS} for row in heur]
    aggregates = aggregate_rows(rows)
    return SweepResult(rows, heur, aggregates, best_cells(aggregates), copy.deepcopy(config))


# -- output ----------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results_csv(path, rows):
    """Rows in the fixed column order, preceded by a schema version comment."""
    with open(path, "w", newline="") as fh:
        fh.write(RESULTS_VERSION + "\n")
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])


def read_results_csv(path) -> list:
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != RESULTS_VERSION:
            raise ValueError(f"unexpected results header {first!r}")
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            row = dict(rec)
            for c in ("h", "alpha", "loglik_mean", "loglik_std_over_test", "hellinger", "fit_sec", "eval_sec"):
                row[c] = float(row[c])
            for c in ("run", "seed", "underflows"):
                row[c] = int(row[c])
            rows.append(row)
    return rows


def write_curves_csv(path, aggregates):
    """Long-format table ``estimator, h, alpha, metric, mean, std`` for plotting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["estimator", "h", "alpha", "metric", "mean", "std"])
        for a in aggregates:
            w.writerow([a["estimator"], repr(a["h"]), repr(a["alpha"]), "loglik", repr(a["loglik_mean"]),
                        repr(a["loglik_std"])])
            if not math.isnan(a["hellinger_mean"]):
                w.writerow([a["estimator"], repr(a["h"]), repr(a["alpha"]), "hellinger",
                            repr(a["hellinger_mean"]), repr(a["hellinger_std"])])


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def dump_json(obj, fh=None, **kw):
    text = json.dumps(_json_safe(obj), indent=2, sort_keys=False, **kw)
    if fh is not None:
        fh.write(text + "\n")
    return text


def write_sweep(result: SweepResult, out_dir):
    """Write ``results.csv``, ``aggregate.json`` and ``curves.csv`` into ``out_dir``."""
    import pathlib

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(out / "results.csv", result.all_rows())
    with open(out / "aggregate.json", "w") as fh:
        dump_json(result.to_json(), fh)
    write_curves_csv(out / "curves.csv", result.aggregates + (aggregate_rows(result.heuristic_rows)
                                                             if result.heuristic_rows else []))
