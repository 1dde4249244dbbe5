"""Synthetic demography and forward simulation of the stochastic model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .model import (
    DemographicSeries,
    DomainError,
    LatentPath,
    ModelParams,
    RealizabilityError,
    SiaCalendar,
    adjusted_births,
    check_realizable,
    conditional_mean,
    to_monthly,
)

REFERENCE_TRUTH = ModelParams(gamma1=3.0, gamma2=0.0, gamma3=0.2, gamma4=0.5,
                          beta_en=-12.0, phi=10.0, theta=0.056, p=0.4)

# semi-months between birth and loss of maternal immunity (9 months)
MATERNAL_LAG = 18


def reference_calendar(start_year: int = 4, fraction: float = 0.5) -> SiaCalendar:
    """One campaign at the start of ``start_year``, two half-target phases."""
    t0 = 24 * (start_year - 1) + 1
    return SiaCalendar.from_campaigns([[(t0, fraction), (t0 + 1, 1.0 - fraction)]])


@dataclass(frozen=True)
class SimConfig:
    years: int = 8
    population: float = 1e7
    pop_growth: float = 0.025
    birth_rate: float = 0.04
    ri_coverage: float = 0.70
    mcv1_efficacy: float = 0.87
    truth: ModelParams = REFERENCE_TRUTH
    calendar: SiaCalendar = field(default_factory=reference_calendar)
    rho: float = 0.1
    seed: int = 0
    burn_in_years: int = 1
    initial_incidence: int | None = None

    def __post_init__(self):
        if self.years < 1:
            raise DomainError("years must be >= 1")
        if self.burn_in_years < 0:
            raise DomainError("burn_in_years must be >= 0")
        if self.population <= 0:
            raise DomainError("population must be positive")
        for name in ("pop_growth", "birth_rate"):
            if not 0 <= getattr(self, name) < 1:
                raise DomainError(f"{name} must lie in [0, 1)")
        for name in ("ri_coverage", "mcv1_efficacy"):
            if not 0 <= getattr(self, name) <= 1:
                raise DomainError(f"{name} must lie in [0, 1]")
        if not 0 < self.rho <= 1:
            raise DomainError("rho must lie in (0, 1]")

    @property
    def T(self) -> int:
        return 24 * self.years


@dataclass(frozen=True)
class Simulation:
    config: SimConfig
    demography: DemographicSeries
    path: LatentPath
    C: np.ndarray

    @property
    def truth(self) -> ModelParams:
        return self.config.truth

    def training(self, months: int) -> "Simulation":
        """The first ``months`` months, as if nothing later were observed."""
        T = 2 * months
        d = self.demography.slice(0, T)
        p = LatentPath(self.path.I[:T], self.path.S[:T], self.path.S_star[:T])
        return Simulation(self.config, d, p, self.C[:months])


def synth_demography(config: SimConfig, burn_in: bool = False) -> DemographicSeries:
    """Geometric population growth at semi-monthly resolution.

    ``L_t`` is the birth cohort of ``MATERNAL_LAG`` semi-months earlier; with
    ``burn_in=True`` the burn-in years are prepended before ``t=1``.
    """
    g = (1.0 + config.pop_growth) ** (1.0 / 24.0)
    lead = 24 * config.burn_in_years if burn_in else 0
    offsets = np.arange(-lead, config.T, dtype=float)
    N = config.population * g ** offsets
    L = config.birth_rate / 24.0 * config.population * g ** (offsets - MATERNAL_LAG)
    R = np.full_like(N, config.ri_coverage)
    return DemographicSeries(N=N, L=L, R=R, B=adjusted_births(L, R, config.mcv1_efficacy))


def truncated_negbin(u, lam, phi, upper):
    """Inverse-CDF draw from NegBin(lam, phi) restricted to ``0..upper``.

    ``u`` in (0, 1]; identical ``u`` gives a draw monotone in ``lam``.
    """
    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)
    upper = np.floor(np.asarray(upper, dtype=float))
    prob = phi / (phi + lam)
    cap = stats.nbinom.cdf(upper, phi, prob)
    x = stats.nbinom.ppf(u * cap, phi, prob)
    # cap underflow: all mass sits beyond the bound
    x = np.where(cap > 0, x, upper)
    x = np.clip(x, 0, upper)
    return x.astype(np.int64) if x.ndim else int(x)


def sample_negbin(lam, phi, size=None, rng=None):
    """Unconstrained NegBin(lam, phi) draws (gamma-Poisson)."""
    rng = np.random.default_rng(rng)
    return rng.negative_binomial(phi, phi / (phi + np.asarray(lam, dtype=float)), size=size)


def _initial_incidence(config: SimConfig, N0: float, B0: float, t0: int) -> int:
    if config.initial_incidence is not None:
        return int(config.initial_incidence)
    lam = conditional_mean(B0, config.truth.theta * N0, N0, t0, config.truth)
    return max(1, int(round(lam)))


def simulate_path(demog: DemographicSeries, config: SimConfig, rng=None) -> LatentPath:
    """Forward-simulate incidence and susceptibles on ``demog``'s grid.

    A burn-in of ``config.burn_in_years`` (on a backward geometric extension
    of ``demog``) sets the incidence phase; the emitted pool then starts at
    exactly ``theta * N_1``.
    """
    truth = config.truth
    rng = np.random.default_rng(config.seed if rng is None else rng)
    T = len(demog)
    lead = 24 * config.burn_in_years
    g = (1.0 + config.pop_growth) ** (1.0 / 24.0)
    back = g ** np.arange(-lead, 0, dtype=float)
    N = np.concatenate([demog.N[0] * back, demog.N])
    B = np.concatenate([demog.B[0] * back, demog.B])
    delta = np.concatenate([np.zeros(lead), config.calendar.delta(T)])
    kidx = np.concatenate([np.zeros(lead, dtype=np.int64), config.calendar.k_index(T) + lead])
    t_abs = np.arange(1 - lead, T + 1)
    u = 1.0 - rng.random(lead + T)

    I = np.zeros(lead + T, dtype=np.int64)
    S = np.zeros(lead + T)
    S_star = np.zeros(lead + T)
    I[0] = _initial_incidence(config, N[0], B[0], int(t_abs[0]) - 1)
    S[0] = truth.theta * N[0]
    if I[0] > S[0]:
        raise DomainError(f"initial incidence {I[0]} exceeds initial susceptibles {S[0]:.1f}")
    for j in range(1, lead + T):
        if delta[j] > 0:
            S_star[j] = truth.p * S[kidx[j]] * delta[j]
        lam = conditional_mean(I[j - 1], S[j - 1], N[j - 1], t_abs[j], truth)
        upper = min(S[j - 1], S[j - 1] + B[j] - S_star[j])
        if j == lead:
            upper = min(upper, truth.theta * N[j])
        if upper < 0:
            raise RealizabilityError("no feasible incidence", int(t_abs[j]))
        I[j] = truncated_negbin(u[j], lam, truth.phi, upper)
        S[j] = ((S[j - 1] + B[j]) - I[j]) - S_star[j]
        if j == lead:
            S[j] = truth.theta * N[j]
            S_star[j] = 0.0
    path = LatentPath(I[lead:], S[lead:], S_star[lead:])
    check_realizable(path, demog.N)
    return path


def observe_monthly(path, rho: float, seed=None) -> np.ndarray:
    """Binomially thinned monthly counts of the true semi-monthly incidence."""
    I = path.I if isinstance(path, LatentPath) else np.asarray(path, dtype=np.int64)
    if len(I) % 2:
        raise DomainError("path length must be even to form months")
    if not 0 < rho <= 1:
        raise DomainError("rho must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    return rng.binomial(to_monthly(I), rho).astype(np.int64)


def simulate(config: SimConfig) -> Simulation:
    """Demography, latent path and reported counts for one configuration."""
    path_seq, obs_seq = np.random.SeedSequence(config.seed).spawn(2)
    demog = synth_demography(config)
    path = simulate_path(demog, config, rng=np.random.default_rng(path_seq))
    C = observe_monthly(path, config.rho, np.random.default_rng(obs_seq))
    return Simulation(config, demog, path, C)


def one_step(I_prev, S_prev, N_prev, B_t, t, params: ModelParams, size: int, rng=None,
             s_star: float = 0.0) -> np.ndarray:
    """``size`` independent draws of ``I_t`` from a fixed previous state."""
    rng = np.random.default_rng(rng)
    lam = conditional_mean(I_prev, S_prev, N_prev, t, params)
    upper = min(S_prev, S_prev + B_t - s_star)
    return truncated_negbin(1.0 - rng.random(size), np.full(size, lam), params.phi,
                            np.full(size, math.floor(upper)))
