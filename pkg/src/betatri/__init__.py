"""Triangle counts in the sparse beta-model: exact moments, Berry-Esseen rate
terms, exhaustive Malliavin checks and a reproducible Monte Carlo harness."""

__version__ = "0.1.0"

from .errors import DomainError, MuParseError, ResourceCapError
from .vecnorm import HeterogeneityVector, norm, norm_pow
from .model import BlockDesign, ModelSpec, block_mu, load_mu, sample_graph
from .graph import GraphSample, count_triangles_wedge
from .moments import MomentReport, exact_mean, exact_variance, moment_report
from .bounds import BoundReport, bound_report, eta, kolmogorov_rate
from .experiment import CltReport, ExperimentConfig, run_experiment

__all__ = [
    "BlockDesign",
    "BoundReport",
    "CltReport",
    "DomainError",
    "ExperimentConfig",
    "GraphSample",
    "HeterogeneityVector",
    "ModelSpec",
    "MomentReport",
    "MuParseError",
    "ResourceCapError",
    "block_mu",
    "bound_report",
    "count_triangles_wedge",
    "eta",
    "exact_mean",
    "exact_variance",
    "kolmogorov_rate",
    "load_mu",
    "moment_report",
    "norm",
    "norm_pow",
    "run_experiment",
    "sample_graph",
]
