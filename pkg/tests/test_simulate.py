from dataclasses import replace

import numpy as np
import pytest

from tsirsia.model import (
    DomainError,
    LatentPath,
    RealizabilityError,
    SiaCalendar,
    check_realizable,
    conditional_mean,
    to_monthly,
)
from tsirsia.simulate import (
    REFERENCE_TRUTH,
    SimConfig,
    observe_monthly,
    one_step,
    reference_calendar,
    simulate,
    synth_demography,
    truncated_negbin,
)


def test_demography_growth_and_births():
    d = synth_demography(SimConfig(pop_growth=0.0))
    assert np.all(d.N == d.N[0])
    d = synth_demography(SimConfig())
    assert d.N[24] / d.N[0] == pytest.approx(1.025, abs=1e-12)
    np.testing.assert_allclose(d.B / d.L, 1 - 0.70 * 0.87, rtol=1e-12)
    assert d.N[0] == 1e7


def test_demography_burn_in_prefix():
    cfg = SimConfig(years=2)
    long = synth_demography(cfg, burn_in=True)
    short = synth_demography(cfg)
    assert len(long) == len(short) + 24
    np.testing.assert_allclose(long.N[24:], short.N, rtol=1e-12)


def test_reference_calendar():
    cal = reference_calendar()
    assert cal.phases == ((73, 0.5), (74, 0.5))
    assert cal.campaign_start == {73: 72, 74: 72}


def test_same_seed_bit_identical():
    a = simulate(SimConfig(years=3, seed=5))
    b = simulate(SimConfig(years=3, seed=5))
    c = simulate(SimConfig(years=3, seed=6))
    assert np.array_equal(a.path.I, b.path.I) and np.array_equal(a.path.S, b.path.S)
    assert np.array_equal(a.C, b.C)
    assert not np.array_equal(a.path.I, c.path.I)


@pytest.mark.parametrize("seed", range(6))
def test_paths_realizable_and_balanced(seed):
    sim = simulate(SimConfig(seed=seed, rho=0.2))
    check_realizable(sim.path, sim.demography.N, sim.C)
    assert np.all(sim.path.balance_residual(sim.demography.B) == 0)
    assert sim.path.S[0] == REFERENCE_TRUTH.theta * sim.demography.N[0]


def test_no_campaign_equals_zero_efficacy():
    base = SimConfig(years=5, seed=3)
    a = simulate(replace(base, calendar=SiaCalendar.empty()))
    b = simulate(replace(base, truth=REFERENCE_TRUTH.replace(p=0.0)))
    assert np.array_equal(a.path.I, b.path.I)
    assert np.array_equal(a.path.S, b.path.S)
    assert np.array_equal(a.C, b.C)


def test_full_efficacy_single_phase_removal():
    cal = SiaCalendar.from_campaigns([[(30, 1.0)]])
    sim = simulate(SimConfig(years=2, seed=1, calendar=cal, truth=REFERENCE_TRUTH.replace(p=1.0)))
    S, I, B = sim.path.S, sim.path.I, sim.demography.B
    # k = 29, so the whole pool at t=29 is removed at t=30
    assert sim.path.S_star[29] == S[28]
    assert S[29] == ((S[28] + B[29]) - I[29]) - S[28]


def test_qualitative_dynamics():
    """Seasonal outbreaks and a trough in the year after the campaign."""
    for seed in range(4):
        I = simulate(SimConfig(seed=seed)).path.I.astype(float)
        years = I.reshape(8, 24).sum(axis=1)
        assert years[3] < 0.5 * years[2]
        profile = I.reshape(8, 24).mean(axis=0)
        assert profile.max() > 3 * profile.min()


def test_infeasible_initial_state():
    with pytest.raises(DomainError):
        simulate(SimConfig(years=1, burn_in_years=0, initial_incidence=10**9))


def test_one_step_mean_matches_conditional_mean():
    rng = np.random.default_rng(0)
    I_prev, S_prev, N_prev = 300, 5e5, 1e7
    draws = one_step(I_prev, S_prev, N_prev, 5000.0, 10, REFERENCE_TRUTH, 10_000, rng)
    lam = conditional_mean(I_prev, S_prev, N_prev, 10, REFERENCE_TRUTH)
    assert draws.mean() == pytest.approx(lam, rel=0.02)


def test_truncated_negbin_bounds_and_monotone():
    u = np.linspace(0.01, 1.0, 50)
    lo = truncated_negbin(u, np.full(50, 10.0), 5.0, np.full(50, 1e6))
    hi = truncated_negbin(u, np.full(50, 20.0), 5.0, np.full(50, 1e6))
    assert np.all(hi >= lo)
    capped = truncated_negbin(u, np.full(50, 500.0), 5.0, np.full(50, 30.0))
    assert capped.max() <= 30 and capped.min() >= 0
    # all mass beyond the bound
    assert truncated_negbin(0.5, 1e12, 100.0, 3.0) <= 3


def test_observe_full_reporting():
    path = simulate(SimConfig(years=2, seed=2)).path
    np.testing.assert_array_equal(observe_monthly(path, 1.0, seed=1), to_monthly(path.I))


def test_observe_low_reporting_ratio():
    sim = simulate(SimConfig(years=6, seed=4))
    C = observe_monthly(sim.path, 0.01, seed=9)
    n = to_monthly(sim.path.I).sum()
    sd = np.sqrt(n * 0.01 * 0.99)
    assert abs(C.sum() - 0.01 * n) < 4 * sd


def test_observe_variance_monte_carlo():
    months = 100_000
    I = np.full(2 * months, 50, dtype=np.int64)
    path = LatentPath(I, np.zeros(2 * months), np.zeros(2 * months))
    C = observe_monthly(path, 0.3, seed=11)
    assert C.var(ddof=1) == pytest.approx(100 * 0.3 * 0.7, rel=0.05)
    assert np.all(C <= 100)


def test_observe_errors():
    with pytest.raises(DomainError):
        observe_monthly(np.array([1, 2, 3]), 0.5)
    with pytest.raises(DomainError):
        observe_monthly(np.array([1, 2]), 0.0)


def test_config_validation():
    for kw in ({"years": 0}, {"pop_growth": 1.5}, {"ri_coverage": 2.0}, {"rho": 0.0}, {"population": -1}):
        with pytest.raises(DomainError):
            SimConfig(**kw)


def test_training_window():
    sim = simulate(SimConfig(years=3, seed=0))
    tr = sim.training(24)
    assert len(tr.demography) == 48 and len(tr.C) == 24
    assert np.array_equal(tr.path.I, sim.path.I[:48])


def test_realizability_error_index():
    err = RealizabilityError("x", 7)
    assert err.index == 7 and "t=7" in str(err)
