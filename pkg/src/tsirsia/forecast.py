"""Posterior predictive projections under hypothetical SIA scenarios."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ALPHA, DemographicSeries, DomainError, LatentPath, SiaCalendar, to_monthly
from .simulate import truncated_negbin


@dataclass(frozen=True)
class Scenario:
    """Forecast horizon after a training window of ``T`` semi-months.

    ``future_calendar`` uses absolute semi-month indices (``t > T``); a
    campaign's ``k(t)`` may point back into the training window.
    """

    horizon: int
    future_demography: DemographicSeries
    future_calendar: SiaCalendar = field(default_factory=SiaCalendar.empty)

    def __post_init__(self):
        if self.horizon <= 0:
            raise DomainError("horizon must be positive")
        if len(self.future_demography) < self.horizon:
            raise DomainError(f"future demography covers {len(self.future_demography)} "
                              f"semi-months, horizon needs {self.horizon}")


@dataclass(frozen=True)
class Trajectories:
    """Ensemble of projected paths; row ``i`` comes from posterior draw ``i``."""

    I: np.ndarray       # draws x horizon
    S: np.ndarray
    S_star: np.ndarray
    start: int          # absolute index of the first projected semi-month

    def __len__(self) -> int:
        return len(self.I)


def project_arrays(params, S_hist, I_last, N_last: float, scenario: Scenario, seed=None) -> Trajectories:
    """Vectorised forward simulation, one trajectory per parameter row.

    ``params`` is ``(n, 8)`` in the order of ``PARAM_NAMES``; ``S_hist``
    holds each draw's training susceptibles ``(n, T)``.
    """
    params = np.atleast_2d(np.asarray(params, dtype=float))
    S_hist = np.atleast_2d(np.asarray(S_hist, dtype=float))
    I_last = np.atleast_1d(np.asarray(I_last, dtype=float))
    n, T = S_hist.shape
    H = scenario.horizon
    for t in scenario.future_calendar.phases:
        if t[0] <= T:
            raise DomainError(f"future SIA phase t={t[0]} lies inside the training window (T={T})")
    g1, g2, g3, g4, ben, phi, _, p = params.T
    N = scenario.future_demography.N[:H]
    B = scenario.future_demography.B[:H]
    cal = scenario.future_calendar
    delta = cal.delta(H, offset=T)

    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random((n, H))
    I = np.zeros((n, H), dtype=np.int64)
    S = np.zeros((n, H))
    S_star = np.zeros((n, H))
    I_prev, S_prev, N_prev = I_last, S_hist[:, -1], float(N_last)
    for h in range(H):
        t = T + h + 1
        if delta[h] > 0:
            k = cal.campaign_start[t]
            S_k = S_hist[:, k - 1] if k <= T else S[:, k - T - 1]
            S_star[:, h] = p * S_k * delta[h]
        w = 2 * math.pi * t / 24
        ar = np.exp(g1 + g2 * t + g3 * math.sin(w) + g4 * math.cos(w))
        lam = ar * np.power(I_prev, ALPHA) * S_prev / N_prev + np.exp(ben) * N_prev
        upper = np.minimum(S_prev, S_prev + B[h] - S_star[:, h])
        if np.any(upper < 0):
            raise DomainError(f"no feasible incidence at t={t} for some draws")
        I[:, h] = truncated_negbin(u[:, h], lam, phi, upper)
        S[:, h] = ((S_prev + B[h]) - I[:, h]) - S_star[:, h]
        I_prev, S_prev, N_prev = I[:, h].astype(float), S[:, h], N[h]
    return Trajectories(I, S, S_star, start=T + 1)


def project_ensemble(draws, scenario: Scenario, seed=None) -> Trajectories:
    """Project every retained draw of a ``PosteriorDraws``."""
    return project_arrays(draws.params, draws.S, draws.I[:, -1], draws.demography.N[-1], scenario, seed)


def project(draw, scenario: Scenario, seed=None) -> LatentPath:
    """One trajectory for a single ``DrawRecord``."""
    tr = project_arrays(draw.params.as_array()[None, :], draw.S[None, :], [draw.I[-1]],
                        draw.N_last, scenario, seed)
    return LatentPath(tr.I[0], tr.S[0], tr.S_star[0])


@dataclass(frozen=True)
class PredictiveSummary:
    median: np.ndarray
    bands: dict            # level -> (lower, upper)
    paths: np.ndarray      # thinned sample paths
    path_index: np.ndarray

    def band(self, level: float = 0.95):
        return self.bands[level]

    def rows(self, start: int = 1):
        for h in range(len(self.median)):
            row = {"t": start + h, "median": float(self.median[h])}
            for level, (lo, hi) in sorted(self.bands.items()):
                pct = int(round(100 * level))
                row[f"lower{pct}"] = float(lo[h])
                row[f"upper{pct}"] = float(hi[h])
            yield row


def predictive_summary(trajectories, levels=(0.5, 0.95), n_paths: int = 200, seed=None) -> PredictiveSummary:
    """Pointwise median and equal-tailed predictive bands of an ensemble."""
    X = np.atleast_2d(np.asarray(trajectories, dtype=float))
    if X.shape[0] == 0:
        raise DomainError("empty ensemble")
    median = np.percentile(X, 50, axis=0)
    bands = {}
    for level in levels:
        tail = 100 * (1 - level) / 2
        lo, hi = np.percentile(X, [tail, 100 - tail], axis=0)
        bands[level] = (lo, hi)
    rng = np.random.default_rng(seed)
    if X.shape[0] <= n_paths:
        idx = np.arange(X.shape[0])
    else:
        idx = np.sort(rng.choice(X.shape[0], size=n_paths, replace=False))
    return PredictiveSummary(median, bands, X[idx], idx)


def rmse_forecast(median_path, truth) -> float:
    """Root mean squared error of the predicted median against the truth."""
    a = np.asarray(median_path, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def coverage(band, truth) -> float:
    """Fraction of points where ``truth`` lies inside ``(lower, upper)``."""
    lo, hi = band
    truth = np.asarray(truth, dtype=float)
    return float(np.mean((truth >= lo) & (truth <= hi)))


def scaled_observed_projection(trajectories, rho_draws, binomial: bool = False, seed=None) -> np.ndarray:
    """Monthly totals on the reported scale, one row per draw.

    Deterministic ``rho * monthly sum`` by default; ``binomial=True`` draws
    reported counts instead.
    """
    X = np.atleast_2d(np.asarray(trajectories))
    rho = np.asarray(rho_draws, dtype=float).reshape(-1)
    if rho.size == 1:
        rho = np.full(X.shape[0], rho[0])
    if rho.size != X.shape[0]:
        raise DomainError("need one reporting rate per trajectory")
    monthly = to_monthly(X)
    if binomial:
        rng = np.random.default_rng(seed)
        return rng.binomial(monthly.astype(np.int64), rho[:, None])
    return monthly * rho[:, None]


def write_summary_csv(path, summary: PredictiveSummary, start: int = 1) -> None:
    rows = list(summary.rows(start))
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def write_paths_csv(path, summary: PredictiveSummary, start: int = 1) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["draw", *[f"t{start + h}" for h in range(summary.paths.shape[1])]])
        for i, row in zip(summary.path_index, summary.paths):
            writer.writerow([int(i), *[repr(float(x)) for x in row]])
