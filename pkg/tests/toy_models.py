"""Tiny models whose posteriors can be enumerated or integrated on a grid."""
import itertools

import numpy as np
from scipy import integrate, stats

from tsirsia.mcmc import McmcConfig
from tsirsia.model import PARAM_NAMES, DemographicSeries, ModelParams, SiaCalendar

TOY_PARAMS = ModelParams(gamma1=0.5, gamma2=0.0, gamma3=0.0, gamma4=0.0,
                         beta_en=float(np.log(0.5 / 60.0)), phi=5.0, theta=0.3, p=0.4)
TOY_RHO = 0.5
FROZEN = frozenset(PARAM_NAMES)


def toy_inputs(T=4):
    N = np.full(T, 60.0)
    L = np.full(T, 3.0)
    L[0] = 0.0
    demog = DemographicSeries(N=N, L=L, R=np.zeros(T), B=L.copy())
    C = np.array([4, 3] + [2] * (T // 2 - 2), dtype=np.int64)[: T // 2]
    start = np.array([4] + [2] * (T - 1), dtype=np.int64)
    return demog, C, SiaCalendar.empty(), start


def toy_config(**kw):
    """Latent-only chain on the toy model with every parameter held at the truth."""
    _, _, _, start = toy_inputs()
    base = dict(n_iter=2000, n_burnin=0, latent_width=1, fixed_rho=TOY_RHO, propagate_uncertainty=False,
                freeze=FROZEN, init=TOY_PARAMS, init_I=tuple(start), seed=3)
    base.update(kw)
    return McmcConfig(**base)


def _lam(I_prev, S_prev, N_prev, t, params):
    ar = np.exp(params.gamma1 + params.gamma2 * t + params.gamma3 * np.sin(2 * np.pi * t / 24)
                + params.gamma4 * np.cos(2 * np.pi * t / 24))
    return ar * np.power(I_prev, 0.975) * S_prev / N_prev + np.exp(params.beta_en) * N_prev


def enumerate_posterior(params=TOY_PARAMS, rho=TOY_RHO, T=4):
    """Exact posterior over every realizable latent path of the toy model.

    Returns ``(paths, probabilities)``; the target is the NegBin transition
    product times the Binomial reporting terms, flat in ``I_1`` and zero on
    any path breaking realizability.
    """
    demog, C, _, _ = toy_inputs(T)
    N, B = demog.N, demog.B
    S1 = params.theta * N[0]
    top = int(S1 + B.sum()) + 1
    grid = np.array(list(itertools.product(range(top + 1), repeat=T)), dtype=np.int64)
    S = np.empty(grid.shape)
    S[:, 0] = S1
    for j in range(1, T):
        S[:, j] = S[:, j - 1] + B[j] - grid[:, j]
    ok = (grid[:, 0] <= S1) & np.all(S >= 0, axis=1) & np.all(S <= N, axis=1)
    ok &= np.all(grid[:, 1:] <= S[:, :-1], axis=1)
    monthly = grid.reshape(len(grid), T // 2, 2).sum(axis=2)
    ok &= np.all(monthly >= C, axis=1)
    grid, S, monthly = grid[ok], S[ok], monthly[ok]
    logp = np.zeros(len(grid))
    for j in range(1, T):
        lam = _lam(grid[:, j - 1].astype(float), S[:, j - 1], N[j - 1], j + 1, params)
        logp += stats.nbinom.logpmf(grid[:, j], params.phi, params.phi / (params.phi + lam))
    logp += stats.binom.logpmf(C, monthly, rho).sum(axis=1)
    w = np.exp(logp - logp.max())
    return grid, w / w.sum()


def marginal(paths, probs, t):
    """Exact marginal pmf of ``I_t`` (0-based ``t``) as a dict."""
    out = {}
    for v, pr in zip(paths[:, t], probs):
        out[int(v)] = out.get(int(v), 0.0) + pr
    return out


def total_variation(pmf_a: dict, pmf_b: dict) -> float:
    keys = set(pmf_a) | set(pmf_b)
    return 0.5 * sum(abs(pmf_a.get(k, 0.0) - pmf_b.get(k, 0.0)) for k in keys)


def empirical_pmf(values) -> dict:
    vals, counts = np.unique(np.asarray(values), return_counts=True)
    return {int(v): c / counts.sum() for v, c in zip(vals, counts)}


def gamma1_grid_posterior(I, demog, params, prior_sd=10.0, grid=None):
    """Conditional posterior of gamma1 on a dense grid with everything else fixed."""
    grid = np.linspace(-4, 4, 8001) if grid is None else grid
    T = len(I)
    S = np.empty(T)
    S[0] = params.theta * demog.N[0]
    for j in range(1, T):
        S[j] = S[j - 1] + demog.B[j] - I[j]
    logp = stats.norm.logpdf(grid, 0.0, prior_sd)
    for j in range(1, T):
        p = params.replace(gamma1=0.0)
        lam0 = _lam(float(I[j - 1]), S[j - 1], demog.N[j - 1], j + 1, p)
        endemic = np.exp(params.beta_en) * demog.N[j - 1]
        lam = (lam0 - endemic) * np.exp(grid) + endemic
        logp = logp + stats.nbinom.logpmf(I[j], params.phi, params.phi / (params.phi + lam))
    w = np.exp(logp - logp.max())
    return grid, w / integrate.trapezoid(w, grid)
