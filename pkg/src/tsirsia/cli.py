"""Command-line entry point.

Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import config as C
from . import io
from .diagnostics import psrf_table
from .forecast import (
    Scenario,
    predictive_summary,
    project_arrays,
    scaled_observed_projection,
    write_paths_csv,
    write_summary_csv,
)
from .mcmc import ConfigurationError, read_draws_jsonl, run_chain
from .model import DomainError, SiaCalendar
from .simulate import simulate
from .stage1 import Stage1Fit, bias_experiment, fit_reporting, month_window_for, rho_interval
from .studies import StudyConfig, parameter_table, replicate_study, rmse_table

log = logging.getLogger("tsirsia")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise io.ValidationError(f"{self.prog}: {message}")


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


class Run:
    """Shared plumbing: config, seed, output directory and file bookkeeping."""

    def __init__(self, args, command):
        self.command = command
        self.cfg = io.load_config(args.config)
        self.base = os.path.dirname(os.path.abspath(args.config)) if args.config else os.getcwd()
        self.seed = args.seed if args.seed is not None else self.cfg.get("seed", 0)
        if not isinstance(self.seed, int) or self.seed < 0:
            raise io.ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)
        self.files = []

    def path(self, key, required=True):
        p = C.resolve(self.base, self.cfg.get(key))
        if p is None and required:
            raise io.ValidationError(f"config needs '{key}'")
        if p is not None and not os.path.exists(p):
            raise io.ValidationError(f"{key}: file not found: {p}")
        return p

    def target(self, name):
        self.files.append(name)
        return os.path.join(self.out, name)

    def finish(self):
        record = dict(self.cfg)
        record.pop("seed", None)
        io.write_manifest(self.out, self.command, record, self.seed, self.files)
        print(f"wrote {len(self.files)} file(s) and manifest.txt to {self.out}")


def _training_inputs(run: Run):
    inc = io.read_incidence(run.path("incidence"))
    demog = io.load_demography(run.path("demography"))
    origin = tuple(run.cfg.get("origin", inc.start))
    cal_path = run.path("calendar", required=False)
    calendar = io.load_calendar(cal_path, origin) if cal_path else SiaCalendar.empty()
    T = 2 * len(inc)
    if len(demog) < T:
        raise io.ValidationError(f"demography covers {len(demog)} semi-months, incidence needs {T}")
    return inc.counts, demog.slice(0, T), calendar


# --------------------------------------------------------------------------
# subcommands

def cmd_simulate(args):
    run = Run(args, "simulate")
    start = tuple(run.cfg.get("start", (2000, 1)))
    sim = simulate(C.sim_config_from(run.cfg, run.seed))
    io.write_series(run.target("series.csv"), sim.demography, sim.path, sim.C)
    io.write_demography(run.target("demography.csv"), sim.demography)
    io.write_incidence(run.target("incidence.csv"), sim.C, start)
    io.write_calendar(run.target("calendar.csv"), sim.config.calendar)
    _dump_json(run.target("truth.json"), {**sim.truth.as_dict(), "rho": sim.config.rho})
    run.finish()


def cmd_stage1(args):
    run = Run(args, "stage1")
    C.check_keys("stage1 config", run.cfg, {"demography", "incidence", "calendar", "origin", "window",
                                            "cov_type", "n_draws", "seed"})
    counts, demog, calendar = _training_inputs(run)
    window = run.cfg.get("window")
    if window is None and calendar.phases:
        window = month_window_for(calendar)
    fit = fit_reporting(demog.monthly_births(), counts, window, calendar, run.cfg.get("cov_type", "HC1"))
    iv = rho_interval(fit, run.cfg.get("n_draws", 10000), seed=run.seed)
    _dump_json(run.target("stage1.json"), {**fit.as_dict(), "rho_lower95": iv.lower,
                                           "rho_upper95": iv.upper, "kappa_draws_rejected": iv.n_rejected})
    print(f"rho_hat = {fit.rho_hat:.6g}  95% interval ({iv.lower:.6g}, {iv.upper:.6g})")
    run.finish()


def cmd_fit(args):
    run = Run(args, "fit")
    C.check_keys("fit config", run.cfg, {"demography", "incidence", "calendar", "origin", "stage1",
                                         "fixed_rho", "priors", "mcmc", "chains", "seed"})
    counts, demog, calendar = _training_inputs(run)
    stage1 = None
    s1 = run.path("stage1", required=False)
    if s1:
        with open(s1) as fh:
            stage1 = Stage1Fit.from_dict(json.load(fh))
    mc = dict(run.cfg.get("mcmc", {}))
    if run.cfg.get("fixed_rho") is not None:
        mc["fixed_rho"] = run.cfg["fixed_rho"]
    # propagate stage-1 uncertainty unless a fixed rate was requested
    mc.setdefault("propagate_uncertainty", stage1 is not None and mc.get("fixed_rho") is None)
    if stage1 is None and mc.get("fixed_rho") is None:
        raise ConfigurationError("fit needs a stage-1 result ('stage1') or a fixed reporting rate ('fixed_rho')")
    priors = C.priors_from(run.cfg.get("priors"))
    seeds = run.cfg.get("chains", [run.seed, run.seed + 1])
    chains = []
    for s in seeds:
        draws = run_chain(counts, demog, calendar, priors, stage1, C.mcmc_config_from(mc, s))
        draws.to_jsonl(run.target(f"draws_chain{s}.jsonl"))
        io.write_csv(run.target(f"trace_chain{s}.csv"), list(draws.trace_rows()))
        chains.append(draws)
    pooled = replace(chains[0], params=np.concatenate([d.params for d in chains]),
                     rho=np.concatenate([d.rho for d in chains]))
    rows = [{"parameter": k, "median": m, "lower95": lo, "upper95": hi}
            for k, (m, lo, hi) in pooled.summary().items()]
    io.write_csv(run.target("summary.csv"), rows)
    if len(chains) > 1:
        psrf = psrf_table(chains)
        io.write_csv(run.target("psrf.csv"), [{"parameter": k, "psrf": v} for k, v in psrf.items()])
    _dump_json(run.target("acceptance.json"), {str(s): d.acceptance for s, d in zip(seeds, chains)})
    for r in rows:
        print(f"{r['parameter']:>8s} {r['median']:12.5g} ({r['lower95']:.5g}, {r['upper95']:.5g})")
    run.finish()


def cmd_forecast(args):
    run = Run(args, "forecast")
    C.check_keys("forecast config", run.cfg, {"draws", "demography", "horizon", "calendar", "origin",
                                              "seed", "binomial", "n_paths"})
    draw_files = run.cfg.get("draws")
    if not draw_files:
        raise io.ValidationError("config needs 'draws' (one or more JSON-lines files)")
    if isinstance(draw_files, str):
        draw_files = [draw_files]
    parts = []
    for f in draw_files:
        p = C.resolve(run.base, f)
        if not os.path.exists(p):
            raise io.ValidationError(f"draws: file not found: {p}")
        parts.append(read_draws_jsonl(p))
    params = np.concatenate([x[0] for x in parts])
    I = np.concatenate([x[1] for x in parts])
    S = np.concatenate([x[2] for x in parts])
    rho = np.concatenate([x[3] for x in parts])
    T = I.shape[1]
    demog = io.load_demography(run.path("demography"))
    horizon = int(run.cfg.get("horizon", len(demog) - T))
    if horizon <= 0 or len(demog) < T + horizon:
        raise io.ValidationError(f"demography ({len(demog)} semi-months) must extend past the training "
                                 f"window (T={T}) by the horizon ({horizon})")
    cal_path = run.path("calendar", required=False)
    origin = run.cfg.get("origin")
    calendar = io.load_calendar(cal_path, tuple(origin) if origin else None) if cal_path else SiaCalendar.empty()
    scen = Scenario(horizon, demog.slice(T, T + horizon), calendar)
    ens = project_arrays(params, S, I[:, -1], demog.N[T - 1], scen, seed=run.seed)
    n_paths = run.cfg.get("n_paths", 200)
    sI = predictive_summary(ens.I, n_paths=n_paths, seed=run.seed)
    sS = predictive_summary(ens.S, n_paths=n_paths, seed=run.seed)
    write_summary_csv(run.target("forecast_I.csv"), sI, T + 1)
    write_summary_csv(run.target("forecast_S.csv"), sS, T + 1)
    write_paths_csv(run.target("paths_I.csv"), sI, T + 1)
    if horizon % 2 == 0:
        obs = scaled_observed_projection(ens.I, rho, binomial=run.cfg.get("binomial", False), seed=run.seed)
        write_summary_csv(run.target("forecast_reported.csv"), predictive_summary(obs, n_paths=0), T // 2 + 1)
    run.finish()


def cmd_bias_study(args):
    run = Run(args, "bias-study")
    extra = {"rhos", "windows", "replicates"}
    base = C.sim_config_from(run.cfg, run.seed, extra=extra)
    rows = []
    for rho in run.cfg.get("rhos", [0.01, 0.1]):
        table = bias_experiment(replace(base, rho=rho), run.cfg.get("windows", [12, 24, 36]),
                                run.cfg.get("replicates", 100))
        rows += [{"rho_true": rho, **r} for r in table.rows()]
    io.write_csv(run.target("bias.csv"), rows)
    for r in rows:
        print(f"rho={r['rho_true']:<5g} window={r['window_months']:>3d} mean rho_hat={r['mean_rho_hat']:.5g}")
    run.finish()


def cmd_replicate_study(args):
    run = Run(args, "replicate-study")
    extra = {"rhos", "arms", "mcmc", "priors", "train_months", "window"}
    sim = C.sim_config_from(run.cfg, run.seed, extra=extra)
    kw = {}
    for key in ("rhos", "arms", "window"):
        if key in run.cfg:
            kw[key] = tuple(run.cfg[key])
    if "train_months" in run.cfg:
        kw["train_months"] = run.cfg["train_months"]
    try:
        study = StudyConfig(sim=sim, mcmc=C.mcmc_config_from(run.cfg.get("mcmc", {}), run.seed),
                            priors=C.priors_from(run.cfg.get("priors")), forecast_seed=run.seed, **kw)
    except (TypeError, ValueError) as exc:
        raise io.ValidationError(f"replicate-study config: {exc}") from None
    results = replicate_study(study)
    io.write_csv(run.target("parameter_summary.csv"), parameter_table(results, sim.truth))
    io.write_csv(run.target("rmse.csv"), rmse_table(results))
    for r in results:
        print(f"rho={r.rho:<5g} {r.arm:>10s} RMSE_f={r.rmse:.6g}")
    run.finish()


COMMANDS = {
    "simulate": (cmd_simulate, "simulate a synthetic series"),
    "stage1": (cmd_stage1, "estimate the reporting rate"),
    "fit": (cmd_fit, "run the MCMC sampler"),
    "forecast": (cmd_forecast, "project posterior draws under a scenario"),
    "bias-study": (cmd_bias_study, "stage-1 bias over simulated replicates"),
    "replicate-study": (cmd_replicate_study, "recovery sweep over reporting rates"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tsirsia", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except io.ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command][0](args)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
