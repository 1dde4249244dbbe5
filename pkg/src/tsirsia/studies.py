"""Simulation-recovery sweep over reporting rates, with and without propagation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .forecast import Scenario, coverage, predictive_summary, project_ensemble, rmse_forecast
from .mcmc import McmcConfig, PriorSpec, run_chain
from .model import PARAM_NAMES
from .simulate import SimConfig, simulate
from .stage1 import fit_reporting, month_window_for

log = logging.getLogger(__name__)

RHO_GRID = (0.01, 0.1, 0.3, 0.5, 0.7)
ARMS = ("propagated", "fixed")


@dataclass(frozen=True)
class StudyConfig:
    rhos: tuple = RHO_GRID
    arms: tuple = ARMS
    sim: SimConfig = field(default_factory=SimConfig)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    priors: PriorSpec = field(default_factory=PriorSpec)
    train_months: int = 72
    window: tuple | None = None   # stage-1 months; default: up to the first SIA
    forecast_seed: int = 0

    def __post_init__(self):
        unknown = set(self.arms) - set(ARMS)
        if unknown:
            raise ValueError(f"unknown arm(s) {sorted(unknown)}")
        if not 0 < self.train_months < 12 * self.sim.years:
            raise ValueError("training window must leave a forecast period")


@dataclass
class ArmResult:
    rho: float
    arm: str
    stage1_rho: float
    summary: dict
    rmse: float
    coverage95: float
    band_width: float
    draws: object = field(repr=False, default=None)


def run_arm(sim, rho_true, arm, stage1, cfg: StudyConfig) -> ArmResult:
    T = 2 * cfg.train_months
    tr = sim.training(cfg.train_months)
    if arm == "propagated":
        mc = replace(cfg.mcmc, propagate_uncertainty=True, fixed_rho=None)
    else:
        mc = replace(cfg.mcmc, propagate_uncertainty=False, fixed_rho=rho_true)
    draws = run_chain(tr.C, tr.demography, sim.config.calendar, cfg.priors, stage1, mc)
    H = len(sim.demography) - T
    scen = Scenario(H, sim.demography.slice(T, T + H))
    ens = project_ensemble(draws, scen, seed=cfg.forecast_seed)
    s = predictive_summary(ens.I, n_paths=0)
    truth = sim.path.I[T:]
    lo, hi = s.band(0.95)
    return ArmResult(rho_true, arm, stage1.rho_hat, draws.summary(),
                     rmse_forecast(s.median, truth), coverage((lo, hi), truth),
                     float(np.mean(hi - lo)), draws)


def replicate_study(cfg: StudyConfig | None = None, keep_draws: bool = False) -> list[ArmResult]:
    """Simulate, estimate and forecast once per reporting rate and arm."""
    cfg = cfg or StudyConfig()
    out = []
    for rho in cfg.rhos:
        sim = simulate(replace(cfg.sim, rho=rho))
        window = cfg.window or month_window_for(sim.config.calendar)
        stage1 = fit_reporting(sim.demography.monthly_births()[:cfg.train_months],
                               sim.C[:cfg.train_months], window, sim.config.calendar)
        for arm in cfg.arms:
            res = run_arm(sim, rho, arm, stage1, cfg)
            log.info("rho=%g %s: rmse %.1f", rho, arm, res.rmse)
            if not keep_draws:
                res.draws = None
            out.append(res)
    return out


def parameter_table(results: Sequence[ArmResult], truth) -> list[dict]:
    rows = []
    truth = truth.as_dict()
    for r in results:
        for name in (*PARAM_NAMES, "rho"):
            med, lo, hi = r.summary[name]
            true = r.rho if name == "rho" else truth[name]
            rows.append({"rho_true": r.rho, "arm": r.arm, "parameter": name, "truth": true,
                         "median": med, "lower95": lo, "upper95": hi,
                         "covers": int(lo <= true <= hi)})
    return rows


def rmse_table(results: Sequence[ArmResult]) -> list[dict]:
    return [{"rho_true": r.rho, "arm": r.arm, "stage1_rho_hat": r.stage1_rho, "rmse_f": r.rmse,
             "coverage95": r.coverage95, "mean_band_width": r.band_width} for r in results]
