"""Fourier-series surrogates sampled along geodesic circles, optimized with a conformal Ricci flow."""

from .benchmarks import BENCHMARKS, BenchmarkSpec, NoiseModel, NoisyOracle, get_benchmark, sample_stochastic
from .bounds import BoundParams, empirical_decay_check, gap_sampling_bound, total_error_bound
from .config import RunConfig, load_config, parse_config
from .errors import (ConfigError, DegenerateMetricError, IllConditionedError, StageError,
                     UnstableStepError, ValidationError)
from .flow import FlowConfig, optimize
from .hybrid import refine_hybrid
from .pipeline import reproduce_tables, run_pipeline
from .samples import SampleSet
from .sampling import SamplingConfig, build_surrogate
from .surrogate import FourierSurrogate, approximation_error, fit_coefficients_ls, fit_grid_ls

__version__ = "0.1.0"

__all__ = [
    "BENCHMARKS", "BenchmarkSpec", "NoiseModel", "NoisyOracle", "get_benchmark", "sample_stochastic",
    "BoundParams", "empirical_decay_check", "gap_sampling_bound", "total_error_bound",
    "RunConfig", "load_config", "parse_config",
    "ConfigError", "DegenerateMetricError", "IllConditionedError", "StageError", "UnstableStepError",
    "ValidationError", "FlowConfig", "optimize", "refine_hybrid", "reproduce_tables", "run_pipeline",
    "SampleSet", "SamplingConfig", "build_surrogate",
    "FourierSurrogate", "approximation_error", "fit_coefficients_ls", "fit_grid_ls",
]
