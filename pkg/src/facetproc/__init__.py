"""Exponential-family facet processes: simulation and numerical checks."""

from .correlation import (RhoBoundResult, RhoQuery, RhoSeriesResult,
                          correlation_provider, rho_bounds, rho_decay_rate,
                          rho_limit, rho_limit_from_counts, rho_mcmc,
                          rho_series_counts, rho_series_full_order)
from .geometry import (Facet, Window, facet_measure, general_position,
                       intersection_measure)
from .harness import (ExperimentConfig, RunManifest, build_experiment_config,
                      config_model, parse_config, poisson_mean_interaction,
                      run_experiment)
from .model import (CenterIntensity, ModelParams, OrientationLaw, SizeLaw,
                    conditional_intensity, local_stability_bound,
                    log_conditional_intensity, log_density_unnorm,
                    validate_params)
from .moments import (GroupedPartition, MomentSpec, ScalingLimits,
                      asymptotic_covariance, centered_moment_leading,
                      enumerate_partitions, expected_increment, i_k_integrals,
                      interaction_kernel, measure_kernel, mixed_moment,
                      scaling_limit_constants, unit_kernel)
from .sampler import (ChainConfig, ChainDiagnostics, batch_means_se,
                      bdmh_step, export_trace, make_rng, run_chain,
                      sample_poisson)
from .ustat import FacetPattern, g_increment, g_vector, u_statistic

__all__ = [
    "CenterIntensity",
    "ChainConfig",
    "ChainDiagnostics",
    "ExperimentConfig",
    "Facet",
    "FacetPattern",
    "GroupedPartition",
    "ModelParams",
    "MomentSpec",
    "OrientationLaw",
    "RhoBoundResult",
    "RhoQuery",
    "RhoSeriesResult",
    "RunManifest",
    "ScalingLimits",
    "SizeLaw",
    "Window",
    "asymptotic_covariance",
    "batch_means_se",
    "bdmh_step",
    "build_experiment_config",
    "centered_moment_leading",
    "conditional_intensity",
    "config_model",
    "correlation_provider",
    "enumerate_partitions",
    "expected_increment",
    "export_trace",
    "facet_measure",
    "g_increment",
    "g_vector",
    "general_position",
    "i_k_integrals",
    "interaction_kernel",
    "intersection_measure",
    "local_stability_bound",
    "log_conditional_intensity",
    "log_density_unnorm",
    "make_rng",
    "measure_kernel",
    "mixed_moment",
    "parse_config",
    "poisson_mean_interaction",
    "rho_bounds",
    "rho_decay_rate",
    "rho_limit",
    "rho_limit_from_counts",
    "rho_mcmc",
    "rho_series_counts",
    "rho_series_full_order",
    "run_chain",
    "run_experiment",
    "sample_poisson",
    "scaling_limit_constants",
    "u_statistic",
    "unit_kernel",
    "validate_params",
]

__version__ = "0.1.0"
