"""Bayesian optimization with Lipschitz envelopes."""

from .acquisition import AcquisitionSpec, accept_reject, ei, pi, tei, tpi, tucb, ucb
from .benchmarks import REGISTRY, BenchmarkFn, lookup
from .direct import BoxDomain, direct_maximize
from .gp import KernelParams, build_posterior, fit_hyperparams, predict, rank_one_update, sample_joint
from .harness import RunConfig, aggregate, run_experiment, run_single
from .lipschitz import envelope, estimate_L_lb, estimate_true_L, growing_L

__version__ = "0.1.0"

__all__ = [
    "AcquisitionSpec", "BenchmarkFn", "BoxDomain", "KernelParams", "REGISTRY", "RunConfig",
    "accept_reject", "aggregate", "build_posterior", "direct_maximize", "ei", "envelope",
    "estimate_L_lb", "estimate_true_L", "fit_hyperparams", "growing_L", "lookup", "pi", "predict",
    "rank_one_update", "run_experiment", "run_single", "sample_joint", "tei", "tpi", "tucb", "ucb",
]
