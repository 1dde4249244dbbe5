"""Discrete-time TSIR model with supplementary immunization activities."""
__version__ = "0.1.0"

from .kernels import BACKEND
from .model import (
    PARAM_NAMES,
    DemographicSeries,
    DomainError,
    LatentPath,
    ModelParams,
    RealizabilityError,
    ReportingRate,
    SiaCalendar,
    adjusted_births,
    check_realizable,
    conditional_mean,
    reconstruct_susceptibles,
)
from .simulate import REFERENCE_TRUTH, SimConfig, Simulation, simulate
from .stage1 import Stage1Fit, bias_experiment, fit_reporting, rho_interval
from .mcmc import McmcConfig, PosteriorDraws, PriorSpec, run_chain, run_chains
from .diagnostics import gelman_rubin, psrf_table
from .forecast import Scenario, predictive_summary, project, project_ensemble, rmse_forecast

__all__ = [
    "BACKEND", "PARAM_NAMES", "DemographicSeries", "DomainError", "LatentPath", "ModelParams",
    "RealizabilityError", "ReportingRate", "SiaCalendar", "adjusted_births", "check_realizable",
    "conditional_mean", "reconstruct_susceptibles", "REFERENCE_TRUTH", "SimConfig", "Simulation",
    "simulate", "Stage1Fit", "bias_experiment", "fit_reporting", "rho_interval", "McmcConfig",
    "PosteriorDraws", "PriorSpec", "run_chain", "run_chains", "gelman_rubin", "psrf_table",
    "Scenario", "predictive_summary", "project", "project_ensemble", "rmse_forecast",
]
