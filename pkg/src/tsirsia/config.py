"""Translate JSON config objects into the library's configuration types.

Every key is optional; the defaults reproduce the reference simulation
settings. Unknown keys are rejected so typos do not pass silently.
"""
from __future__ import annotations

import os
from dataclasses import fields

from .io import ValidationError
from .mcmc import ConfigurationError, McmcConfig, PriorSpec
from .model import ModelParams, SiaCalendar
from .simulate import REFERENCE_TRUTH, SimConfig, reference_calendar

SIM_KEYS = {f.name for f in fields(SimConfig)} - {"truth", "calendar"}
MCMC_KEYS = {f.name for f in fields(McmcConfig)}


def check_keys(section: str, cfg: dict, allowed) -> None:
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ValidationError(f"{section}: unknown key(s) {', '.join(unknown)}")


def params_from(d, base: ModelParams = REFERENCE_TRUTH) -> ModelParams:
    check_keys("truth", d, base.as_dict())
    try:
        return base.replace(**{k: float(v) for k, v in d.items()})
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"truth: {exc}") from None


def calendar_from(campaigns) -> SiaCalendar:
    """``[[[t, delta], ...], ...]`` with one inner list per campaign."""
    try:
        return SiaCalendar.from_campaigns([[(int(t), float(d)) for t, d in camp] for camp in campaigns])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"campaigns: {exc}") from None


def sim_config_from(cfg: dict, seed=None, extra=()) -> SimConfig:
    check_keys("simulation config", cfg, SIM_KEYS | {"truth", "campaigns", "start"} | set(extra))
    kw = {k: cfg[k] for k in SIM_KEYS if k in cfg}
    if "truth" in cfg:
        kw["truth"] = params_from(cfg["truth"])
    kw["calendar"] = calendar_from(cfg["campaigns"]) if "campaigns" in cfg else reference_calendar()
    if seed is not None:
        kw["seed"] = seed
    try:
        return SimConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"simulation config: {exc}") from None


def mcmc_config_from(d: dict, seed=None) -> McmcConfig:
    check_keys("mcmc", d, MCMC_KEYS - {"init_I"})
    kw = dict(d)
    if "freeze" in kw:
        kw["freeze"] = frozenset(kw["freeze"])
    if "init" in kw and kw["init"] is not None:
        kw["init"] = params_from(kw["init"])
    if "block_sd" in kw:
        kw["block_sd"] = tuple(kw["block_sd"])
    if seed is not None:
        kw["seed"] = seed
    try:
        return McmcConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"mcmc: {exc}") from None


def priors_from(d: dict) -> PriorSpec:
    try:
        return PriorSpec.from_dict(d or {})
    except ConfigurationError:
        raise
    except (TypeError, KeyError, ValueError) as exc:
        raise ValidationError(f"priors: {exc}") from None


def resolve(base_dir: str, path):
    if path is None:
        return None
    return path if os.path.isabs(path) else os.path.join(base_dir, path)
