"""Radial Voronoi density estimation with kernel-based baselines."""
from .baselines import CVDE, KDE, AdaptiveKDE, alpha_from_bandwidth, bandwidth_from_alpha
from .beta import BetaTable, build_beta_table, lookup_beta, solve_beta, solve_beta_at_infinity
from .datasets import SyntheticSpec, generate, load_csv, subsample_split, true_log_density
from .estimator import RVDE, ModeSet, log_density, modes, sample, select_alpha
from .estimator import fit as fit
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    DomainError,
    DuplicatePoints,
    EmptyDataset,
    KernelNotAdmissible,
    ParameterError,
    ParseError,
    RvdeError,
)
from .geometry import PointSet, gabriel_graph, nearest, ray_length
from .harness import evaluate_hellinger, evaluate_loglik, run_sweep
from .kernels import Kernel, make_kernel, radial_integral

__version__ = "0.1.0"

__all__ = [
    "RVDE", "KDE", "AdaptiveKDE", "CVDE", "Kernel", "PointSet", "ModeSet", "BetaTable", "SyntheticSpec",
    "make_kernel", "radial_integral", "solve_beta", "solve_beta_at_infinity", "build_beta_table",
    "lookup_beta", "select_alpha", "fit", "log_density", "sample", "modes", "nearest", "ray_length",
    "gabriel_graph", "alpha_from_bandwidth", "bandwidth_from_alpha", "generate", "true_log_density",
    "load_csv", "subsample_split", "evaluate_loglik", "evaluate_hellinger", "run_sweep",
    "RvdeError", "ParameterError", "EmptyDataset", "DuplicatePoints", "DimensionError", "DomainError",
    "KernelNotAdmissible", "ConvergenceError", "ParseError", "ConfigError",
]
