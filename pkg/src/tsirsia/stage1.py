"""Reporting-rate estimation from cumulative births and cumulative cases.

Over an SIA-free window the susceptible balance gives
``Y_m = beta0 + kappa * X_m + U_m`` with ``Y`` cumulative adjusted births,
``X`` cumulative reported cases and ``kappa = 1 / rho``. The slope is fitted
by OLS with a heteroskedasticity-robust (sandwich) variance.
"""
from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import DomainError, SiaCalendar, month_of

log = logging.getLogger(__name__)

COV_TYPES = ("HC0", "HC1", "HC3")


class DegenerateRegressorError(DomainError):
    """Cumulative reported cases do not vary over the window."""


@dataclass(frozen=True)
class Stage1Fit:
    kappa_hat: float
    kappa_se: float
    beta0_hat: float
    window: tuple[int, int]
    n_months: int
    cov_type: str = "HC1"
    residuals: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kappa_se < 0:
            raise DomainError("kappa_se must be non-negative")

    @property
    def rho_hat(self) -> float:
        return 1.0 / self.kappa_hat

    def as_dict(self) -> dict:
        return {"kappa_hat": self.kappa_hat, "kappa_se": self.kappa_se,
                "beta0_hat": self.beta0_hat, "window": list(self.window),
                "n_months": self.n_months, "cov_type": self.cov_type,
                "rho_hat": self.rho_hat}

    @classmethod
    def from_dict(cls, d: dict) -> "Stage1Fit":
        return cls(kappa_hat=float(d["kappa_hat"]), kappa_se=float(d["kappa_se"]),
                   beta0_hat=float(d["beta0_hat"]), window=tuple(d["window"]),
                   n_months=int(d["n_months"]), cov_type=d.get("cov_type", "HC1"))


@dataclass(frozen=True)
class RhoInterval:
    point: float
    lower: float
    upper: float
    draws: np.ndarray = field(repr=False, compare=False)
    n_rejected: int = 0


def cumulate(series) -> np.ndarray:
    """Prefix sums."""
    a = np.asarray(series)
    if a.size == 0:
        raise DomainError("cannot cumulate an empty series")
    return np.cumsum(a)


def check_window(window: tuple[int, int], calendar: SiaCalendar | None, n_available: int) -> None:
    first, last = window
    if first < 1 or last > n_available or last < first:
        raise DomainError(f"window {window} outside the available months 1..{n_available}")
    if last - first + 1 < 3:
        raise DomainError("the regression window needs at least 3 months")
    if calendar is not None:
        inside = sorted(m for m in calendar.phase_months() if first <= m <= last)
        if inside:
            raise DomainError(f"window {window} contains SIA activity in month(s) {inside}")


def ols_robust(x, y, cov_type: str = "HC1"):
    """Simple linear regression with a sandwich covariance.

    Returns ``(intercept, slope, cov, residuals)``.
    """
    if cov_type not in COV_TYPES:
        raise ValueError(f"cov_type must be one of {COV_TYPES}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    xbar = x.mean()
    dx = x - xbar
    sxx = dx @ dx
    if not sxx > 0:
        raise DegenerateRegressorError("regressor has zero variance (no reported cases in window?)")
    slope = (dx @ (y - y.mean())) / sxx
    intercept = y.mean() - slope * xbar
    resid = y - (intercept + slope * x)

    Z = np.column_stack([np.ones(n), x])
    bread = np.linalg.inv(Z.T @ Z)
    w = resid ** 2
    if cov_type == "HC3":
        h = np.einsum("ij,jk,ik->i", Z, bread, Z)
        w = w / (1.0 - h) ** 2
    cov = bread @ (Z.T * w) @ Z @ bread
    # slope variance in centred form: exact zero for zero residuals
    cov[1, 1] = (dx ** 2 @ w) / sxx ** 2
    if cov_type == "HC1":
        cov = cov * n / (n - 2)
    return intercept, slope, cov, resid


def fit_reporting(B_monthly, C_monthly, window: tuple[int, int] | None = None,
                  calendar: SiaCalendar | None = None, cov_type: str = "HC1") -> Stage1Fit:
    """Regress cumulative adjusted births on cumulative reported cases.

    ``window`` is an inclusive 1-based month range (default: all months).
    """
    B_monthly = np.asarray(B_monthly, dtype=float)
    C_monthly = np.asarray(C_monthly, dtype=float)
    if B_monthly.shape != C_monthly.shape:
        raise DomainError("monthly births and counts must be aligned")
    if window is None:
        window = (1, len(C_monthly))
    window = (int(window[0]), int(window[1]))
    check_window(window, calendar, len(C_monthly))
    sl = slice(window[0] - 1, window[1])
    if C_monthly[sl].sum() <= 0:
        raise DegenerateRegressorError(f"no reported cases in window {window}")
    X = cumulate(C_monthly[sl])
    Y = cumulate(B_monthly[sl])
    b0, kappa, cov, resid = ols_robust(X, Y, cov_type)
    return Stage1Fit(kappa_hat=float(kappa), kappa_se=float(np.sqrt(max(cov[1, 1], 0.0))),
                     beta0_hat=float(b0), window=window, n_months=len(X),
                     cov_type=cov_type, residuals=resid)


def draw_kappa(fit: Stage1Fit, size: int, rng) -> tuple[np.ndarray, int]:
    """Normal draws of ``kappa`` with draws below 1 removed."""
    kappa = rng.normal(fit.kappa_hat, fit.kappa_se, size=size)
    keep = kappa >= 1.0
    return kappa[keep], int(size - keep.sum())


def rho_interval(fit: Stage1Fit, n_draws: int = 10000, seed=None, level: float = 0.95) -> RhoInterval:
    """Point estimate ``1/kappa_hat`` and percentile interval of inverted draws."""
    if n_draws < 1000:
        raise DomainError("n_draws must be at least 1000")
    rng = np.random.default_rng(seed)
    kappa, rejected = draw_kappa(fit, n_draws, rng)
    if rejected > 0.01 * n_draws:
        warnings.warn(f"{rejected} of {n_draws} kappa draws fell below 1 (rho > 1) and were rejected",
                      RuntimeWarning, stacklevel=2)
    if kappa.size == 0:
        raise DomainError("every kappa draw implied rho > 1")
    rho = 1.0 / kappa
    tail = 100 * (1 - level) / 2
    lo, hi = np.percentile(rho, [tail, 100 - tail])
    return RhoInterval(point=1.0 / fit.kappa_hat, lower=float(lo), upper=float(hi),
                       draws=rho, n_rejected=rejected)


@dataclass
class BiasTable:
    rho_true: float
    window_lengths: list[int]
    estimates: np.ndarray  # replicates x windows, rho_hat

    @property
    def bias(self) -> np.ndarray:
        return self.estimates - self.rho_true

    def rows(self) -> list[dict]:
        out = []
        for j, L in enumerate(self.window_lengths):
            b = self.bias[:, j]
            out.append({"window_months": L, "replicates": len(b),
                        "mean_rho_hat": float(self.estimates[:, j].mean()),
                        "mean_bias": float(b.mean()),
                        "sd_bias": float(b.std(ddof=1)) if len(b) > 1 else 0.0,
                        "relative_bias": float(b.mean() / self.rho_true)})
        return out

    def to_csv(self, path) -> None:
        rows = self.rows()
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)


def bias_experiment(config, window_lengths: Sequence[int], replicates: int,
                    generator: Callable | None = None) -> BiasTable:
    """Sampling distribution of ``rho_hat - rho`` per regression window length.

    Each replicate simulates a fresh series (seed ``config.seed + r``) and fits
    windows ``1..L`` for every ``L``. ``generator(config, r)`` may replace the
    simulator; it must return ``(B_monthly, C_monthly)``.
    """
    from dataclasses import replace

    from .simulate import simulate

    window_lengths = [int(L) for L in window_lengths]
    horizon = 12 * config.years
    for L in window_lengths:
        check_window((1, L), config.calendar, horizon)

    if generator is None:
        def generator(cfg, r):
            sim = simulate(replace(cfg, seed=cfg.seed + r))
            return sim.demography.monthly_births(), sim.C

    est = np.empty((replicates, len(window_lengths)))
    for r in range(replicates):
        B_m, C_m = generator(config, r)
        for j, L in enumerate(window_lengths):
            est[r, j] = fit_reporting(B_m, C_m, (1, L)).rho_hat
        log.debug("bias replicate %d done", r)
    return BiasTable(config.rho, window_lengths, est)


def month_window_for(calendar: SiaCalendar) -> tuple[int, int]:
    """Longest window starting at month 1 that ends before the first SIA phase."""
    if not calendar.phases:
        raise DomainError("calendar has no SIA; pass the window explicitly")
    first = min(month_of(t) for t, _ in calendar.phases)
    return 1, first - 1
