"""Metropolis-Hastings sampler for the parameters and latent incidence path.

Each iteration plugs in a reporting rate (a fresh ``1/kappa`` draw from the
stage-1 fit, or a fixed value), sweeps every latent ``I_t`` in random order,
updates the scalar parameters one at a time and finally proposes
``(theta, gamma1, gamma2)`` as one block.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import kernels
from .model import (
    PARAM_NAMES,
    DemographicSeries,
    DomainError,
    LatentPath,
    ModelParams,
    SiaCalendar,
    check_realizable,
    reconstruct_susceptibles,
    to_monthly,
)
from .stage1 import Stage1Fit

log = logging.getLogger(__name__)

SCALAR_PARAMS = ("gamma3", "gamma4", "beta_en", "phi", "p")
BLOCK_PARAMS = ("theta", "gamma1", "gamma2")
_IDX = {n: i for i, n in enumerate(PARAM_NAMES)}


class InitializationError(RuntimeError):
    """No realizable starting state could be constructed."""


class ConfigurationError(ValueError):
    pass


# --------------------------------------------------------------------------
# priors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Normal:
    mu: float
    sd: float

    def logpdf(self, x: float) -> float:
        z = (x - self.mu) / self.sd
        return -0.5 * z * z - math.log(self.sd) - 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def logpdf(self, x: float) -> float:
        if self.lo <= x <= self.hi:
            return -math.log(self.hi - self.lo)
        return -math.inf


@dataclass(frozen=True)
class Beta:
    a: float
    b: float

    def logpdf(self, x: float) -> float:
        if not 0 < x < 1:
            return -math.inf
        return ((self.a - 1) * math.log(x) + (self.b - 1) * math.log1p(-x)
                - (math.lgamma(self.a) + math.lgamma(self.b) - math.lgamma(self.a + self.b)))


_FAMILIES = {"normal": Normal, "uniform": Uniform, "beta": Beta}


@dataclass(frozen=True)
class PriorSpec:
    gamma1: object = Normal(0.0, 10.0)
    gamma2: object = Normal(0.0, 10.0)
    gamma3: object = Normal(0.0, 10.0)
    gamma4: object = Normal(0.0, 10.0)
    beta_en: object = Normal(-10.0, 5.0)
    phi: object = Uniform(0.1, 100.0)
    theta: object = Uniform(0.0, 0.5)
    p: object = Uniform(0.0, 1.0)

    def logpdf(self, values) -> float:
        total = 0.0
        for name, v in zip(PARAM_NAMES, values):
            total += getattr(self, name).logpdf(float(v))
            if total == -math.inf:
                break
        return total

    @classmethod
    def from_dict(cls, spec: Mapping[str, Mapping]) -> "PriorSpec":
        """``{"phi": {"family": "uniform", "lo": 0.1, "hi": 50}, ...}``"""
        kw = {}
        for name, d in spec.items():
            if name not in PARAM_NAMES:
                raise ConfigurationError(f"unknown parameter {name!r} in priors")
            d = dict(d)
            family = d.pop("family").lower()
            if family not in _FAMILIES:
                raise ConfigurationError(f"unknown prior family {family!r}")
            kw[name] = _FAMILIES[family](**d)
        return cls(**kw)

    def as_dict(self) -> dict:
        out = {}
        for name in PARAM_NAMES:
            pr = getattr(self, name)
            out[name] = {"family": type(pr).__name__.lower(), **pr.__dict__}
        return out


# --------------------------------------------------------------------------
# configuration and output
# --------------------------------------------------------------------------

DEFAULT_STEPS = {"gamma3": 0.05, "gamma4": 0.05, "beta_en": 0.1, "phi": 0.1, "p": 0.3}
DEFAULT_BLOCK_SD = (0.05, 0.05, 0.0005)  # logit(theta), gamma1, gamma2


@dataclass(frozen=True)
class McmcConfig:
    n_iter: int = 20000
    n_burnin: int = 10000
    latent_width: int | None = None
    adapt_interval: int = 100
    step_sizes: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_STEPS))
    block_sd: tuple[float, float, float] = DEFAULT_BLOCK_SD
    propagate_uncertainty: bool = True
    fixed_rho: float | None = None
    seed: int = 0
    thin: int = 1
    freeze: frozenset = frozenset()
    init: ModelParams | None = None
    init_I: tuple | None = None
    backend: str | None = None

    def __post_init__(self):
        if self.n_iter < 0 or self.n_burnin < 0:
            raise ConfigurationError("iteration counts must be non-negative")
        if self.n_iter > 0 and not self.n_burnin < self.n_iter:
            raise ConfigurationError("n_burnin must be smaller than n_iter")
        if self.thin < 1:
            raise ConfigurationError("thin must be >= 1")
        if self.fixed_rho is not None and not 0 < self.fixed_rho <= 1:
            raise ConfigurationError("fixed_rho must lie in (0, 1]")
        unknown = set(self.freeze) - set(PARAM_NAMES) - {"latent"}
        if unknown:
            raise ConfigurationError(f"cannot freeze unknown names {sorted(unknown)}")
        object.__setattr__(self, "freeze", frozenset(self.freeze))
        steps = dict(DEFAULT_STEPS)
        steps.update(self.step_sizes)
        object.__setattr__(self, "step_sizes", steps)


@dataclass(frozen=True)
class DrawRecord:
    """One retained iteration: enough state to continue the process forward."""

    params: ModelParams
    I: np.ndarray
    S: np.ndarray
    rho: float
    N_last: float

    @property
    def T(self) -> int:
        return len(self.I)


@dataclass
class PosteriorDraws:
    params: np.ndarray      # retained x 8, natural scale
    I: np.ndarray           # retained x T
    S: np.ndarray           # retained x T
    rho: np.ndarray         # retained
    iterations: np.ndarray  # iteration number of each retained draw
    trace: np.ndarray       # (n_iter + 1) x 8, including the initial state
    trace_rho: np.ndarray
    trace_loglik: np.ndarray
    acceptance: dict
    demography: DemographicSeries
    calendar: SiaCalendar
    C: np.ndarray
    widths: np.ndarray = None

    def __len__(self) -> int:
        return len(self.params)

    def param(self, name: str) -> np.ndarray:
        return self.params[:, _IDX[name]]

    def record(self, i: int) -> DrawRecord:
        return DrawRecord(ModelParams.from_array(self.params[i]), self.I[i].copy(), self.S[i].copy(),
                          float(self.rho[i]), float(self.demography.N[-1]))

    def records(self):
        return (self.record(i) for i in range(len(self)))

    def summary(self, level: float = 0.95) -> dict[str, tuple[float, float, float]]:
        """Posterior median and equal-tailed interval per parameter."""
        tail = 100 * (1 - level) / 2
        out = {}
        for name in PARAM_NAMES:
            lo, med, hi = np.percentile(self.param(name), [tail, 50, 100 - tail])
            out[name] = (float(med), float(lo), float(hi))
        lo, med, hi = np.percentile(self.rho, [tail, 50, 100 - tail])
        out["rho"] = (float(med), float(lo), float(hi))
        return out

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for i in range(len(self)):
                rec = {"iteration": int(self.iterations[i]), "rho": float(self.rho[i]),
                       "params": dict(zip(PARAM_NAMES, map(float, self.params[i]))),
                       "I": self.I[i].tolist(), "S": self.S[i].tolist()}
                fh.write(json.dumps(rec) + "\n")

    def trace_rows(self):
        for it in range(len(self.trace)):
            row = {"iteration": it, **dict(zip(PARAM_NAMES, map(float, self.trace[it])))}
            row["rho"] = float(self.trace_rho[it])
            row["loglik"] = float(self.trace_loglik[it])
            yield row


def read_draws_jsonl(path):
    """``(params, I, S, rho, iterations)`` arrays from a draws file."""
    params, I, S, rho, its = [], [], [], [], []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            params.append([rec["params"][n] for n in PARAM_NAMES])
            I.append(rec["I"])
            S.append(rec["S"])
            rho.append(rec["rho"])
            its.append(rec["iteration"])
    return (np.array(params), np.array(I, dtype=np.int64), np.array(S), np.array(rho),
            np.array(its, dtype=np.int64))


# --------------------------------------------------------------------------
# likelihood
# --------------------------------------------------------------------------

class _Model:
    """Precomputed data arrays shared by the likelihood and the sampler."""

    def __init__(self, C, demog: DemographicSeries, calendar: SiaCalendar, backend=None):
        C = np.ascontiguousarray(C, dtype=np.int64)
        T = len(demog)
        if T != 2 * len(C):
            raise DomainError(f"{len(C)} months of counts need {2 * len(C)} semi-months of "
                              f"demography, got {T}")
        if np.any(C < 0):
            raise DomainError("reported counts must be non-negative")
        self.C = C
        self.T = T
        self.demog = demog
        self.calendar = calendar
        self.N = np.ascontiguousarray(demog.N, dtype=float)
        self.B = np.ascontiguousarray(demog.B, dtype=float)
        self.delta = np.ascontiguousarray(calendar.delta(T))
        self.kidx = np.ascontiguousarray(calendar.k_index(T))
        t = np.arange(1, T + 1, dtype=float)
        self.t = t
        self.sin = np.sin(2 * np.pi * t / 24)
        self.cos = np.cos(2 * np.pi * t / 24)
        self.k = kernels.get_backend(backend)

    def ar(self, v) -> np.ndarray:
        return np.exp(v[0] + v[1] * self.t + v[2] * self.sin + v[3] * self.cos)

    def evaluate(self, v, I, rho, S, Sstar, nbll, binll) -> float:
        """Fill ``S``/``Sstar`` from ``I`` and return the log-likelihood."""
        theta, p = v[6], v[7]
        self.k.balance(I, self.B, self.delta, self.kidx, theta * self.N[0], p, S, Sstar, 0)
        return self.k.loglik(I, S, self.N, self.C, self.ar(v), math.exp(v[4]), v[5],
                             math.log(rho), math.log1p(-rho) if rho < 1 else -math.inf,
                             nbll, binll)


def joint_loglik(params: ModelParams, path: LatentPath, rho: float, data, demog: DemographicSeries,
                 calendar: SiaCalendar, backend=None) -> float:
    """NegBin transition terms plus Binomial reporting terms; ``-inf`` when
    any realizability constraint fails."""
    model = _Model(data, demog, calendar, backend)
    if len(path) != model.T:
        raise DomainError(f"path has {len(path)} semi-months, data need {model.T}")
    if not 0 < rho <= 1:
        raise DomainError("rho must lie in (0, 1]")
    I = np.ascontiguousarray(path.I, dtype=np.int64).copy()
    S = np.empty(model.T)
    Sstar = np.empty(model.T)
    ll = model.evaluate(params.as_array(), I, rho, S, Sstar, np.empty(model.T), np.empty(model.T // 2))
    if not np.allclose(S, path.S, rtol=1e-12, atol=1e-6):
        raise DomainError("path susceptibles are inconsistent with the balancing equation")
    return ll


# --------------------------------------------------------------------------
# reporting-rate plug-in
# --------------------------------------------------------------------------

def plug_rho(iteration: int, stage1: Stage1Fit | None, config: McmcConfig, rng,
             max_tries: int = 10000) -> float:
    """Reporting rate used throughout one iteration."""
    if config.propagate_uncertainty and stage1 is not None:
        if stage1.kappa_se == 0:
            return 1.0 / stage1.kappa_hat
        for _ in range(max_tries):
            kappa = rng.normal(stage1.kappa_hat, stage1.kappa_se)
            if kappa >= 1.0:
                return 1.0 / kappa
        raise RuntimeError(f"no kappa >= 1 in {max_tries} draws at iteration {iteration}")
    if config.fixed_rho is not None:
        return config.fixed_rho
    if stage1 is not None:
        return 1.0 / stage1.kappa_hat
    raise ConfigurationError("need a stage-1 fit or a fixed reporting rate")


# --------------------------------------------------------------------------
# initial state
# --------------------------------------------------------------------------

def _split_counts(C, kappa):
    """Scale monthly counts by ``kappa`` and split each month into halves."""
    C = np.asarray(C, dtype=np.int64)
    n = np.maximum(np.round(C * kappa).astype(np.int64), C)
    I = np.empty(2 * len(C), dtype=np.int64)
    I[0::2] = n // 2
    I[1::2] = n - n // 2
    return I


def _theta_range(model: _Model, I, p, hi=0.5, tol=1e-10):
    """Feasible ``(theta_min, theta_max)`` for fixed ``I``, or None.

    Susceptibles are increasing in theta, so both ends are found by bisection.
    """
    def lower_ok(theta):
        S = np.empty(model.T)
        Sstar = np.empty(model.T)
        model.k.balance(I, model.B, model.delta, model.kidx, theta * model.N[0], p, S, Sstar, 0)
        return I[0] <= S[0] and np.all(S >= 0) and np.all(I[1:] <= S[:-1])

    def upper_ok(theta):
        S = np.empty(model.T)
        Sstar = np.empty(model.T)
        model.k.balance(I, model.B, model.delta, model.kidx, theta * model.N[0], p, S, Sstar, 0)
        return np.all(S <= model.N)

    if not lower_ok(hi):
        return None
    lo_a, hi_a = 0.0, hi
    while hi_a - lo_a > tol:
        mid = 0.5 * (lo_a + hi_a)
        lo_a, hi_a = (lo_a, mid) if lower_ok(mid) else (mid, hi_a)
    theta_min = hi_a
    if not upper_ok(theta_min):
        return None
    lo_b, hi_b = theta_min, hi
    if upper_ok(hi):
        return theta_min, hi
    while hi_b - lo_b > tol:
        mid = 0.5 * (lo_b + hi_b)
        lo_b, hi_b = (mid, hi_b) if upper_ok(mid) else (lo_b, mid)
    return theta_min, lo_b


def _tsir_regression(I, S, N):
    """Least-squares seasonal coefficients from log incidence ratios."""
    T = len(I)
    t = np.arange(2, T + 1, dtype=float)
    ok = (I[1:] > 0) & (I[:-1] > 0)
    if ok.sum() < 8:
        return None
    y = np.log(I[1:]) - 0.975 * np.log(I[:-1]) - np.log(S[:-1] / N[:-1])
    X = np.column_stack([np.ones_like(t), t, np.sin(2 * np.pi * t / 24), np.cos(2 * np.pi * t / 24)])
    coef, *_ = np.linalg.lstsq(X[ok], y[ok], rcond=None)
    return coef


def initial_state(model: _Model, kappa: float, config: McmcConfig, priors: PriorSpec,
                  attempts: int = 6):
    """Realizable ``(param_vector, I)`` to start the chain from.

    Monthly counts are scaled by ``kappa`` and split evenly; theta starts at
    1.5 times the smallest realizable value. If no theta works, the latent
    path is shrunk toward the reported counts.
    """
    C = model.C
    if config.init_I is not None:
        I_candidates = [np.ascontiguousarray(config.init_I, dtype=np.int64)]
    else:
        base = _split_counts(C, kappa)
        floor = _split_counts(C, 1.0)
        I_candidates = []
        for a in range(attempts):
            f = 1.0 - a / (attempts - 1) if attempts > 1 else 1.0
            I_candidates.append(floor + np.floor(f * (base - floor)).astype(np.int64))
    p0 = config.init.p if config.init is not None else 0.5
    theta_hi = min(0.5, getattr(priors.theta, "hi", 0.5)) if isinstance(priors.theta, Uniform) else 0.5
    for I in I_candidates:
        if np.any(to_monthly(I) < C):
            continue
        rng_ = _theta_range(model, I, p0, hi=theta_hi * (1 - 1e-9))
        if rng_ is None:
            continue
        tmin, tmax = rng_
        if config.init is not None and tmin <= config.init.theta <= tmax:
            theta0 = config.init.theta
        else:
            theta0 = 1.5 * tmin
            if theta0 >= tmax:
                theta0 = 0.5 * (tmin + tmax)
        if config.init is not None:
            v = config.init.replace(theta=theta0).as_array()
        else:
            v = _default_params(model, I, theta0, p0)
        S = np.empty(model.T)
        Sstar = np.empty(model.T)
        ll = model.evaluate(v, I, min(1.0, 1.0 / kappa), S, Sstar,
                            np.empty(model.T), np.empty(model.T // 2))
        if np.isfinite(ll) and np.isfinite(priors.logpdf(v)):
            return v, I.copy()
    raise InitializationError("could not construct a realizable starting state")


def _default_params(model: _Model, I, theta0, p0) -> np.ndarray:
    S = np.empty(model.T)
    Sstar = np.empty(model.T)
    model.k.balance(I, model.B, model.delta, model.kidx, theta0 * model.N[0], p0, S, Sstar, 0)
    coef = _tsir_regression(I, S, model.N)
    g = [-math.log(theta0), 0.0, 0.0, 0.0] if coef is None else list(coef)
    pos = I[I > 0]
    base = np.percentile(pos, 5) if pos.size else 1.0
    beta_en = math.log(max(base, 1.0) / model.N.mean()) - 1.0
    return np.array([g[0], g[1], g[2], g[3], beta_en, 5.0, theta0, p0])


# --------------------------------------------------------------------------
# transformations for the random walks
# --------------------------------------------------------------------------

def _to_z(name, v):
    if name == "phi":
        return math.log(v)
    if name in ("theta", "p"):
        v = min(max(v, 1e-12), 1 - 1e-12)
        return math.log(v) - math.log1p(-v)
    return v


def _from_z(name, z):
    if name == "phi":
        return math.exp(z)
    if name in ("theta", "p"):
        return 1.0 / (1.0 + math.exp(-z)) if z > -700 else 0.0
    return z


def _log_jac(name, v):
    if name == "phi":
        return math.log(v)
    if name in ("theta", "p"):
        if not 0 < v < 1:
            return -math.inf
        return math.log(v) + math.log1p(-v)
    return 0.0


# --------------------------------------------------------------------------
# the chain
# --------------------------------------------------------------------------

class _Chain:
    def __init__(self, model: _Model, priors: PriorSpec, stage1, config: McmcConfig):
        self.model = model
        self.priors = priors
        self.stage1 = stage1
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        T = model.T
        kappa = stage1.kappa_hat if stage1 is not None else 1.0 / config.fixed_rho
        self.v, self.I = initial_state(model, kappa, config, priors)
        self.S = np.empty(T)
        self.Sstar = np.empty(T)
        self.nbll = np.empty(T)
        self.binll = np.empty(T // 2)
        self._S2 = np.empty(T)
        self._Sstar2 = np.empty(T)
        self._nb2 = np.empty(T)
        self._bin2 = np.empty(T // 2)
        self.work = (np.empty(T), np.empty(T), np.empty(T))
        if config.latent_width is not None:
            w = np.full(T, int(config.latent_width), dtype=np.int64)
        else:
            w = np.maximum(1, np.sqrt(self.I + 1.0).astype(np.int64))
        self.widths = np.ascontiguousarray(w)
        self.lat_acc = np.zeros(T, dtype=np.int64)
        self.lat_try = np.zeros(T, dtype=np.int64)
        self.steps = {n: float(config.step_sizes[n]) for n in SCALAR_PARAMS}
        self.block = [n for n in BLOCK_PARAMS if n not in config.freeze]
        sd = dict(zip(BLOCK_PARAMS, config.block_sd))
        self.block_cov = np.diag([sd[n] ** 2 for n in self.block]) if self.block else None
        self.block_scale = 1.0
        self.counts = {n: [0, 0] for n in (*SCALAR_PARAMS, "block")}
        self.ll = -math.inf

    # -- evaluation --------------------------------------------------------
    def refresh(self, rho):
        self.ll = self.model.evaluate(self.v, self.I, rho, self.S, self.Sstar, self.nbll, self.binll)
        if not np.isfinite(self.ll):
            raise RuntimeError("current state lost realizability")

    def log_target_z(self, v, ll, names):
        lp = self.priors.logpdf(v)
        if lp == -math.inf:
            return -math.inf
        return ll + lp + sum(_log_jac(n, v[_IDX[n]]) for n in names)

    def try_params(self, v_new, names, rho, key):
        self.counts[key][1] += 1
        lp_new = self.priors.logpdf(v_new)
        if lp_new == -math.inf:
            return False
        ll_new = self.model.evaluate(v_new, self.I, rho, self._S2, self._Sstar2, self._nb2, self._bin2)
        if ll_new == -math.inf:
            return False
        logr = (self.log_target_z(v_new, ll_new, names) - self.log_target_z(self.v, self.ll, names))
        if logr >= 0 or math.log(1.0 - self.rng.random()) < logr:
            self.v = v_new
            self.ll = ll_new
            self.S, self._S2 = self._S2, self.S
            self.Sstar, self._Sstar2 = self._Sstar2, self.Sstar
            self.nbll, self._nb2 = self._nb2, self.nbll
            self.binll, self._bin2 = self._bin2, self.binll
            self.counts[key][0] += 1
            return True
        return False

    # -- updates -----------------------------------------------------------
    def update_latent(self, rho):
        m = self.model
        T = m.T
        order = np.ascontiguousarray(self.rng.permutation(T).astype(np.int64))
        u_prop = self.rng.random(T)
        u_acc = 1.0 - self.rng.random(T)
        v = self.v
        m.k.latent_sweep(order, u_prop, u_acc, self.I, self.S, self.Sstar, self.nbll, self.binll,
                         m.C, m.N, m.B, m.delta, m.kidx, m.ar(v), math.exp(v[4]), v[5],
                         math.log(rho), math.log1p(-rho) if rho < 1 else -math.inf, v[7],
                         self.widths, self.lat_acc, self.lat_try, *self.work)
        self.ll = float(self.nbll.sum() + self.binll.sum())

    def update_scalars(self, rho):
        for name in SCALAR_PARAMS:
            if name in self.config.freeze:
                continue
            i = _IDX[name]
            z = _to_z(name, self.v[i]) + self.steps[name] * self.rng.normal()
            v_new = self.v.copy()
            v_new[i] = _from_z(name, z)
            self.try_params(v_new, (name,), rho, name)

    def update_block(self, rho):
        if not self.block:
            return
        z = np.array([_to_z(n, self.v[_IDX[n]]) for n in self.block])
        chol = np.linalg.cholesky(self.block_cov * self.block_scale ** 2)
        z_new = z + chol @ self.rng.normal(size=len(z))
        v_new = self.v.copy()
        for n, zi in zip(self.block, z_new):
            v_new[_IDX[n]] = _from_z(n, zi)
        self.try_params(v_new, tuple(self.block), rho, "block")

    # -- adaptation during burn-in -----------------------------------------
    def adapt(self, history, it):
        cfg = self.config
        rate = np.divide(self.lat_acc, self.lat_try, out=np.full(self.model.T, 0.4),
                         where=self.lat_try > 0)
        grow = rate > 0.5
        shrink = rate < 0.3
        self.widths[grow] = np.ceil(self.widths[grow] * 1.5).astype(np.int64)
        self.widths[shrink] = np.maximum(1, np.floor(self.widths[shrink] / 1.5)).astype(np.int64)
        self.lat_acc[:] = 0
        self.lat_try[:] = 0
        for name in SCALAR_PARAMS:
            acc, tried = self._window_counts(name)
            if tried:
                self.steps[name] *= math.exp(acc / tried - 0.44)
        if self.block:
            acc, tried = self._window_counts("block")
            if tried:
                self.block_scale *= math.exp(acc / tried - 0.234)
            if it >= 5 * cfg.adapt_interval:
                recent = history[it // 2: it + 1]
                z = np.array([[_to_z(n, row[_IDX[n]]) for n in self.block] for row in recent])
                if len(z) > 2 * len(self.block):
                    cov = np.atleast_2d(np.cov(z, rowvar=False))
                    cov += np.diag(np.maximum(np.diag(cov), 1e-12)) * 1e-3
                    if np.all(np.linalg.eigvalsh(cov) > 0):
                        self.block_cov = cov * 2.38 ** 2 / len(self.block)
                        self.block_scale = 1.0
        self._mark = {k: list(v) for k, v in self.counts.items()}

    def _window_counts(self, key):
        prev = getattr(self, "_mark", {}).get(key, [0, 0])
        return self.counts[key][0] - prev[0], self.counts[key][1] - prev[1]


def run_chain(data, demog: DemographicSeries, calendar: SiaCalendar, priors: PriorSpec | None = None,
              stage1: Stage1Fit | None = None, config: McmcConfig | None = None) -> PosteriorDraws:
    """Run one chain and return its retained draws and traces."""
    priors = priors or PriorSpec()
    config = config or McmcConfig()
    if stage1 is None and config.fixed_rho is None:
        raise ConfigurationError("fit needs a stage-1 result or a fixed reporting rate")
    if not config.propagate_uncertainty and config.fixed_rho is None and stage1 is None:
        raise ConfigurationError("fixed mode needs fixed_rho")
    model = _Model(data, demog, calendar, config.backend)
    chain = _Chain(model, priors, stage1, config)
    n_iter = config.n_iter
    T = model.T

    trace = np.empty((n_iter + 1, len(PARAM_NAMES)))
    trace_rho = np.empty(n_iter + 1)
    trace_ll = np.empty(n_iter + 1)
    rho0 = plug_rho(0, stage1, config, chain.rng)
    chain.refresh(rho0)
    trace[0] = chain.v
    trace_rho[0] = rho0
    trace_ll[0] = chain.ll

    keep = [] if n_iter > 0 else [0]
    kept_I, kept_S, kept_v, kept_rho = [], [], [], []
    if n_iter == 0:
        kept_I.append(chain.I.copy())
        kept_S.append(chain.S.copy())
        kept_v.append(chain.v.copy())
        kept_rho.append(rho0)

    for it in range(1, n_iter + 1):
        rho = plug_rho(it, stage1, config, chain.rng)
        chain.refresh(rho)
        if "latent" not in config.freeze:
            chain.update_latent(rho)
        chain.update_scalars(rho)
        chain.update_block(rho)
        trace[it] = chain.v
        trace_rho[it] = rho
        trace_ll[it] = chain.ll
        if it <= config.n_burnin and it % config.adapt_interval == 0:
            chain.adapt(trace, it)
        if it > config.n_burnin and (it - config.n_burnin) % config.thin == 0:
            keep.append(it)
            kept_I.append(chain.I.copy())
            kept_S.append(chain.S.copy())
            kept_v.append(chain.v.copy())
            kept_rho.append(rho)
        if it % 5000 == 0:
            log.info("iteration %d/%d loglik %.2f", it, n_iter, chain.ll)

    acceptance = {n: (a / t if t else float("nan")) for n, (a, t) in chain.counts.items()}
    lat_total = chain.lat_try.sum()
    acceptance["latent"] = float(chain.lat_acc.sum() / lat_total) if lat_total else float("nan")
    return PosteriorDraws(
        params=np.array(kept_v).reshape(-1, len(PARAM_NAMES)),
        I=np.array(kept_I, dtype=np.int64).reshape(-1, T),
        S=np.array(kept_S).reshape(-1, T),
        rho=np.array(kept_rho, dtype=float),
        iterations=np.array(keep, dtype=np.int64),
        trace=trace, trace_rho=trace_rho, trace_loglik=trace_ll,
        acceptance=acceptance, demography=demog, calendar=calendar,
        C=np.asarray(data, dtype=np.int64), widths=chain.widths.copy(),
    )


def verify_draws(draws: PosteriorDraws) -> None:
    """Raise if any retained draw breaks balance or realizability."""
    B = draws.demography.B
    for i in range(len(draws)):
        v = ModelParams.from_array(draws.params[i])
        path = reconstruct_susceptibles(draws.I[i], B, v.theta * draws.demography.N[0],
                                        draws.calendar, v.p, N=draws.demography.N)
        if not np.array_equal(path.S, draws.S[i]):
            raise DomainError(f"draw {i}: stored susceptibles differ from the balancing equation")
        check_realizable(path, draws.demography.N, draws.C)


def run_chains(data, demog, calendar, priors=None, stage1=None, config: McmcConfig | None = None,
               seeds=(0, 1)) -> list[PosteriorDraws]:
    config = config or McmcConfig()
    return [run_chain(data, demog, calendar, priors, stage1, replace(config, seed=s)) for s in seeds]
