"""Domain types and deterministic equations of the TSIR-SIA model.

Semi-monthly index ``t`` is 1-based in the public API (month ``m`` owns
semi-months ``2m-1`` and ``2m``); arrays are 0-based, so ``arr[t - 1]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

ALPHA = 0.975
OMEGA = 24
MCV1_EFFICACY = 0.87

PARAM_NAMES = ("gamma1", "gamma2", "gamma3", "gamma4", "beta_en", "phi", "theta", "p")


class DomainError(ValueError):
    """Input outside the domain of a model equation."""


class RealizabilityError(ValueError):
    """A latent path violates the balancing or realizability constraints.

    ``index`` is the 1-based semi-month at which the violation occurs.
    """

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (t={index})")
        self.index = index


# --------------------------------------------------------------------------
# time grid
# --------------------------------------------------------------------------

def month_of(t: int) -> int:
    """Month owning semi-month ``t`` (both 1-based)."""
    if t < 1:
        raise DomainError(f"semi-month index must be >= 1, got {t}")
    return (t + 1) // 2


def semi_months(m: int) -> tuple[int, int]:
    """The two semi-month indices ``(2m-1, 2m)`` of month ``m``."""
    if m < 1:
        raise DomainError(f"month index must be >= 1, got {m}")
    return 2 * m - 1, 2 * m


@dataclass(frozen=True)
class TimeIndex:
    t: int

    def __post_init__(self):
        if self.t < 1:
            raise DomainError(f"semi-month index must be >= 1, got {self.t}")

    @property
    def m(self) -> int:
        return month_of(self.t)

    @classmethod
    def first_half(cls, m: int) -> "TimeIndex":
        return cls(semi_months(m)[0])


def to_monthly(x) -> np.ndarray:
    """Sum consecutive semi-month pairs. Length must be even."""
    x = np.asarray(x)
    if x.ndim == 0 or x.shape[-1] % 2:
        raise DomainError("semi-monthly series must have even length")
    return x.reshape(*x.shape[:-1], -1, 2).sum(axis=-1)


# --------------------------------------------------------------------------
# domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DemographicSeries:
    """Known semi-monthly inputs: population ``N``, 9-month-olds ``L``,
    RI MCV1 coverage ``R`` and adjusted births ``B``."""

    N: np.ndarray
    L: np.ndarray
    R: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        arrs = {}
        for f in fields(self):
            a = np.array(getattr(self, f.name), dtype=float)
            if a.ndim != 1:
                raise DomainError(f"{f.name} must be one-dimensional")
            a.setflags(write=False)
            object.__setattr__(self, f.name, a)
            arrs[f.name] = a
        lengths = {len(a) for a in arrs.values()}
        if len(lengths) != 1:
            raise DomainError(f"demographic vectors differ in length: {sorted(lengths)}")
        N, L, R, B = arrs["N"], arrs["L"], arrs["R"], arrs["B"]
        _check(np.all(N > 0), "N must be positive", N <= 0)
        _check(np.all(L >= 0), "L must be non-negative", L < 0)
        _check(np.all((R >= 0) & (R <= 1)), "R must lie in [0, 1]", (R < 0) | (R > 1))
        _check(np.all(B >= 0), "B must be non-negative", B < 0)
        _check(np.all(B <= L * (1 + 1e-12)), "B must not exceed L", B > L * (1 + 1e-12))

    def __len__(self) -> int:
        return len(self.N)

    @property
    def T(self) -> int:
        return len(self.N)

    @classmethod
    def from_coverage(cls, N, L, R, efficacy: float = MCV1_EFFICACY) -> "DemographicSeries":
        L = np.asarray(L, dtype=float)
        R = np.asarray(R, dtype=float)
        return cls(N=N, L=L, R=R, B=adjusted_births(L, R, efficacy))

    def slice(self, start: int, stop: int) -> "DemographicSeries":
        """Semi-months ``start..stop-1`` in 0-based array terms."""
        return DemographicSeries(self.N[start:stop], self.L[start:stop],
                                 self.R[start:stop], self.B[start:stop])

    def monthly_births(self) -> np.ndarray:
        return to_monthly(self.B)


def _check(ok, message, bad_mask):
    if not ok:
        idx = int(np.flatnonzero(bad_mask)[0]) + 1
        raise DomainError(f"{message} (first offending t={idx})")


@dataclass(frozen=True)
class SiaCalendar:
    """SIA phases ``(t, delta_t)`` and the pre-campaign index ``k(t)`` per phase.

    Phases of the same campaign share one ``k``: the semi-month right before
    the campaign's first phase.
    """

    phases: tuple[tuple[int, float], ...] = ()
    campaign_start: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        phases = tuple((int(t), float(d)) for t, d in self.phases)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "campaign_start", dict(self.campaign_start))
        seen = set()
        for t, d in phases:
            if t in seen:
                raise DomainError(f"duplicate SIA phase at t={t}")
            seen.add(t)
            if not 0.0 <= d <= 1.0:
                raise DomainError(f"delta at t={t} must lie in [0, 1], got {d}")
            if t not in self.campaign_start:
                raise DomainError(f"phase t={t} has no campaign start k(t)")
            k = self.campaign_start[t]
            if not 1 <= k < t:
                raise DomainError(f"campaign start k={k} must satisfy 1 <= k < t={t}")
        for k, members in self.campaigns().items():
            total = sum(d for _, d in members)
            if total > 1.0 + 1e-9:
                raise DomainError(f"campaign starting after t={k} covers {total:.6g} > 1 of its target")

    @classmethod
    def empty(cls) -> "SiaCalendar":
        return cls()

    @classmethod
    def from_campaigns(cls, campaigns: Iterable[Sequence[tuple[int, float]]]) -> "SiaCalendar":
        """Build from campaigns given as lists of ``(t, delta)`` phases."""
        phases, starts = [], {}
        for camp in campaigns:
            camp = sorted((int(t), float(d)) for t, d in camp)
            if not camp:
                continue
            k = camp[0][0] - 1
            for t, d in camp:
                phases.append((t, d))
                starts[t] = k
        return cls(tuple(phases), starts)

    def campaigns(self) -> dict[int, list[tuple[int, float]]]:
        out: dict[int, list[tuple[int, float]]] = {}
        for t, d in self.phases:
            out.setdefault(self.campaign_start[t], []).append((t, d))
        return out

    def delta(self, T: int, offset: int = 0) -> np.ndarray:
        """Dense ``delta`` over semi-months ``offset+1 .. offset+T``."""
        out = np.zeros(T)
        for t, d in self.phases:
            if offset < t <= offset + T:
                out[t - offset - 1] = d
        return out

    def k_index(self, T: int, offset: int = 0) -> np.ndarray:
        """Dense 0-based array index of ``S_{k(t)}`` (0 where no phase).

        Indices are relative to the start of the training series, so a
        forecast grid that starts at ``offset`` may point back into it.
        """
        out = np.zeros(T, dtype=np.int64)
        for t, _ in self.phases:
            if offset < t <= offset + T:
                out[t - offset - 1] = self.campaign_start[t] - 1
        return out

    def phase_months(self) -> set[int]:
        return {month_of(t) for t, _ in self.phases}

    def shifted(self, by: int) -> "SiaCalendar":
        return SiaCalendar(tuple((t + by, d) for t, d in self.phases),
                           {t + by: k + by for t, k in self.campaign_start.items()})

    def merged(self, other: "SiaCalendar") -> "SiaCalendar":
        return SiaCalendar(self.phases + other.phases,
                           {**self.campaign_start, **other.campaign_start})


@dataclass(frozen=True)
class ModelParams:
    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float
    beta_en: float
    phi: float
    theta: float
    p: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.phi <= 0:
            raise DomainError(f"phi must be positive, got {self.phi}")
        if not 0 < self.theta < 1:
            raise DomainError(f"theta must lie in (0, 1), got {self.theta}")
        if not 0 <= self.p <= 1:
            raise DomainError(f"p must lie in [0, 1], got {self.p}")

    alpha = ALPHA
    omega = OMEGA

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES])

    @classmethod
    def from_array(cls, values) -> "ModelParams":
        return cls(**dict(zip(PARAM_NAMES, map(float, values))))

    def as_dict(self) -> dict[str, float]:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @property
    def gammas(self) -> tuple[float, float, float, float]:
        return self.gamma1, self.gamma2, self.gamma3, self.gamma4


@dataclass(frozen=True)
class ReportingRate:
    kappa_hat: float
    kappa_se: float

    def __post_init__(self):
        if self.kappa_hat < 1:
            raise DomainError(f"kappa_hat must be >= 1, got {self.kappa_hat}")
        if self.kappa_se < 0:
            raise DomainError("kappa_se must be non-negative")

    @property
    def rho(self) -> float:
        return 1.0 / self.kappa_hat


@dataclass(frozen=True)
class LatentPath:
    """True incidence ``I`` (integers), susceptibles ``S`` and SIA removals."""

    I: np.ndarray
    S: np.ndarray
    S_star: np.ndarray

    def __post_init__(self):
        I = np.array(self.I, dtype=np.int64)
        S = np.array(self.S, dtype=float)
        S_star = np.array(self.S_star, dtype=float)
        if not (I.shape == S.shape == S_star.shape) or I.ndim != 1:
            raise DomainError("I, S and S_star must be aligned 1-d series")
        for a in (I, S, S_star):
            a.setflags(write=False)
        object.__setattr__(self, "I", I)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "S_star", S_star)

    def __len__(self) -> int:
        return len(self.I)

    def balance_residual(self, B) -> np.ndarray:
        """``S_t - (S_{t-1} + B_t - I_t - S*_t)`` for t >= 2, in the same
        evaluation order the path was built with."""
        B = np.asarray(B, dtype=float)
        return self.S[1:] - (((self.S[:-1] + B[1:]) - self.I[1:]) - self.S_star[1:])


# --------------------------------------------------------------------------
# equations
# --------------------------------------------------------------------------

def adjusted_births(L, R, efficacy: float = MCV1_EFFICACY):
    """Children losing maternal immunity who are not protected by RI."""
    L_arr = np.asarray(L, dtype=float)
    R_arr = np.asarray(R, dtype=float)
    if not 0 <= efficacy <= 1:
        raise DomainError(f"efficacy must lie in [0, 1], got {efficacy}")
    if np.any(~np.isfinite(L_arr)) or np.any(L_arr < 0):
        raise DomainError("L must be finite and non-negative")
    if np.any(~np.isfinite(R_arr)) or np.any((R_arr < 0) | (R_arr > 1)):
        raise DomainError("R must lie in [0, 1]")
    out = L_arr * (1.0 - R_arr * efficacy)
    return float(out) if out.ndim == 0 else out


def beta_ar(t, params: ModelParams):
    """Seasonal log transmission rate at semi-month ``t``."""
    t_arr = np.asarray(t, dtype=float)
    w = 2.0 * np.pi * t_arr / OMEGA
    out = params.gamma1 + params.gamma2 * t_arr + params.gamma3 * np.sin(w) + params.gamma4 * np.cos(w)
    return float(out) if out.ndim == 0 else out


def conditional_mean(I_prev, S_prev, N_prev, t, params: ModelParams):
    """Mean of ``I_t`` given the previous semi-month's state.

    ``0**alpha`` is taken as 0, so the endemic term alone keeps the mean
    positive after extinction.
    """
    I_prev = np.asarray(I_prev, dtype=float)
    S_prev = np.asarray(S_prev, dtype=float)
    N_prev = np.asarray(N_prev, dtype=float)
    if np.any(~(N_prev > 0)):
        raise DomainError("N_prev must be positive")
    if np.any(I_prev < 0) or np.any(S_prev < 0):
        raise DomainError("I_prev and S_prev must be non-negative")
    lam = (np.exp(beta_ar(t, params)) * np.power(I_prev, ALPHA) * S_prev / N_prev
           + math.exp(params.beta_en) * N_prev)
    return float(lam) if lam.ndim == 0 else lam


def sia_removal(S_at_k, delta_t, p):
    """Susceptibles immunised in one campaign phase: ``p * S_k * delta``."""
    S_at_k = np.asarray(S_at_k, dtype=float)
    if np.any(S_at_k < 0):
        raise DomainError("S_k must be non-negative")
    if np.any((np.asarray(delta_t) < 0) | (np.asarray(delta_t) > 1)):
        raise DomainError("delta must lie in [0, 1]")
    if np.any((np.asarray(p) < 0) | (np.asarray(p) > 1)):
        raise DomainError("p must lie in [0, 1]")
    out = p * S_at_k * delta_t
    return float(out) if np.ndim(out) == 0 else out


def negbin_logpmf(x, lam, phi):
    """Log-pmf of NegBin with mean ``lam`` and dispersion ``phi``.

    Variance is ``lam * (1 + lam / phi)``; equivalently ``size=phi`` and
    success probability ``phi / (phi + lam)``.
    """
    from scipy.special import gammaln, xlogy

    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam)) and np.all(np.isfinite(phi))):
        raise DomainError("negbin_logpmf inputs must be finite")
    if np.any(lam <= 0) or np.any(phi <= 0):
        raise DomainError("lam and phi must be positive")
    out = (gammaln(x + phi) - gammaln(phi) - gammaln(x + 1)
           + phi * (np.log(phi) - np.log(phi + lam)) + xlogy(x, lam) - x * np.log(phi + lam))
    out = np.where((x < 0) | (x != np.floor(x)), -np.inf, out)
    return float(out) if out.ndim == 0 else out


def binomial_logpmf(c, n, rho):
    """Exact log binomial probability via log-gamma."""
    from scipy.special import gammaln, xlog1py, xlogy

    c = np.asarray(c, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(c < 0) or np.any(n < 0):
        raise DomainError("counts must be non-negative")
    if np.any(c > n):
        raise DomainError("reported count exceeds true count")
    if not 0 < rho <= 1:
        raise DomainError(f"rho must lie in (0, 1], got {rho}")
    out = (gammaln(n + 1) - gammaln(c + 1) - gammaln(n - c + 1)
           + xlogy(c, rho) + xlog1py(n - c, -rho))
    return float(out) if out.ndim == 0 else out


def reconstruct_susceptibles(I, B, S1: float, calendar: SiaCalendar, p: float, N=None) -> LatentPath:
    """Run the balancing equation forward from ``S_1``.

    Raises :class:`RealizabilityError` at the first semi-month where the
    pool goes negative or (when ``N`` is given) exceeds the population.
    """
    I = np.asarray(I, dtype=np.int64)
    B = np.asarray(B, dtype=float)
    if I.shape != B.shape:
        raise DomainError("I and B must be aligned")
    if S1 < 0:
        raise DomainError("S1 must be non-negative")
    T = len(I)
    delta = calendar.delta(T)
    kidx = calendar.k_index(T)
    S = np.empty(T)
    S_star = np.zeros(T)
    S[0] = S1
    for j in range(1, T):
        if delta[j] > 0:
            S_star[j] = p * S[kidx[j]] * delta[j]
        S[j] = ((S[j - 1] + B[j]) - I[j]) - S_star[j]
    bad = np.flatnonzero(S < 0)
    if bad.size:
        raise RealizabilityError("negative susceptibles", int(bad[0]) + 1)
    if N is not None:
        over = np.flatnonzero(S > np.asarray(N, dtype=float))
        if over.size:
            raise RealizabilityError("susceptibles exceed population", int(over[0]) + 1)
    return LatentPath(I, S, S_star)


def check_realizable(path: LatentPath, N, C=None) -> None:
    """Raise unless ``I_{t+1} <= S_t <= N_t``, ``I_1 <= S_1`` and
    ``C_m <= I_{2m-1} + I_{2m}`` all hold."""
    S, I = path.S, path.I
    N = np.asarray(N, dtype=float)
    if I[0] > S[0]:
        raise RealizabilityError("initial incidence exceeds initial susceptibles", 1)
    bad = np.flatnonzero((S < 0) | (S > N))
    if bad.size:
        raise RealizabilityError("susceptibles outside [0, N]", int(bad[0]) + 1)
    bad = np.flatnonzero(I[1:] > S[:-1])
    if bad.size:
        raise RealizabilityError("incidence exceeds previous susceptibles", int(bad[0]) + 2)
    if C is not None:
        short = np.flatnonzero(np.asarray(C) > to_monthly(I))
        if short.size:
            raise RealizabilityError("reported count exceeds true monthly incidence",
                                     2 * int(short[0]) + 1)
