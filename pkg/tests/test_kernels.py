import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsirsia import kernels
from tsirsia.mcmc import McmcConfig, run_chain
from tsirsia.model import (
    ModelParams,
    SiaCalendar,
    beta_ar,
    binomial_logpmf,
    negbin_logpmf,
    reconstruct_susceptibles,
    to_monthly,
)

needs_compiled = pytest.mark.skipif(kernels.compiled_backend is None, reason="extension not built")
BACKENDS = ["python"] + (["cython"] if kernels.compiled_backend is not None else [])


def test_default_backend_reported():
    assert kernels.BACKEND in ("python", "cython")
    assert kernels.get_backend("python") is kernels.python_backend
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def _toy(seed, T=12, campaign=True):
    rng = np.random.default_rng(seed)
    N = np.full(T, 2000.0) * 1.001 ** np.arange(T)
    B = rng.uniform(5, 15, T)
    I = rng.integers(0, 20, T).astype(np.int64)
    C = rng.binomial(to_monthly(I), 0.5).astype(np.int64)
    cal = SiaCalendar.from_campaigns([[(T // 2, 0.6), (T // 2 + 1, 0.4)]]) if campaign else SiaCalendar.empty()
    return N, B, I, C, cal


@pytest.mark.parametrize("backend", BACKENDS)
@given(seed=st.integers(0, 10_000), p=st.floats(0, 0.8))
def test_balance_matches_reconstruction(backend, seed, p):
    k = kernels.get_backend(backend)
    N, B, I, C, cal = _toy(seed)
    T = len(I)
    S = np.empty(T)
    Ss = np.empty(T)
    k.balance(I, B, cal.delta(T), cal.k_index(T), 1500.0, p, S, Ss, 0)
    ref = reconstruct_susceptibles(I, B, 1500.0, cal, p)
    assert np.array_equal(S, ref.S)
    assert np.array_equal(Ss, ref.S_star)


@pytest.mark.parametrize("backend", BACKENDS)
def test_loglik_matches_vectorised_oracle(backend):
    k = kernels.get_backend(backend)
    N, B, I, C, cal = _toy(3)
    T = len(I)
    params = ModelParams(1.0, 0.01, 0.2, 0.3, -8.0, 4.0, 0.3, 0.4)
    S = reconstruct_susceptibles(I, B, params.theta * N[0], cal, params.p).S
    ar = np.exp(beta_ar(np.arange(1, T + 1), params))
    nbll, binll = np.empty(T), np.empty(T // 2)
    got = k.loglik(I, S, N, C, ar, math.exp(params.beta_en), params.phi, math.log(0.5), math.log(0.5),
                   nbll, binll)
    lam = ar[1:] * I[:-1].astype(float) ** 0.975 * S[:-1] / N[:-1] + math.exp(params.beta_en) * N[:-1]
    want = negbin_logpmf(I[1:], lam, params.phi).sum() + binomial_logpmf(C, to_monthly(I), 0.5).sum()
    assert got == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_loglik_rejects_violations(backend):
    k = kernels.get_backend(backend)
    N, B, I, C, cal = _toy(4, campaign=False)
    T = len(I)
    S = np.full(T, 100.0)
    args = (N, C, np.ones(T), 1e-4, 5.0, math.log(0.5), math.log(0.5), np.empty(T), np.empty(T // 2))
    assert np.isfinite(k.loglik(I, S, *args))
    bad = I.copy()
    bad[0] = 101
    assert k.loglik(bad, S, *args) == -math.inf
    C2 = C.copy()
    C2[0] = I[0] + I[1] + 1
    assert k.loglik(I, S, N, C2, *args[2:]) == -math.inf
    # rho = 1 with an unreported case
    if C[0] < I[0] + I[1]:
        assert k.loglik(I, S, N, C, np.ones(T), 1e-4, 5.0, 0.0, -math.inf,
                        np.empty(T), np.empty(T // 2)) == -math.inf


@needs_compiled
@given(seed=st.integers(0, 10_000))
def test_sweep_backends_identical(seed):
    N, B, I0, C, cal = _toy(seed, T=16)
    T = len(I0)
    delta, kidx = cal.delta(T), cal.k_index(T)
    rng = np.random.default_rng(seed)
    order = rng.permutation(T).astype(np.int64)
    u_prop, u_acc = rng.random(T), 1.0 - rng.random(T)
    ar = np.exp(rng.normal(0, 0.5, T))
    out = {}
    for name in ("python", "cython"):
        k = kernels.get_backend(name)
        I = I0.copy()
        S, Ss = np.empty(T), np.empty(T)
        k.balance(I, B, delta, kidx, 900.0, 0.4, S, Ss, 0)
        nb, bn = np.empty(T), np.empty(T // 2)
        k.loglik(I, S, N, C, ar, 1e-3, 3.0, math.log(0.5), math.log(0.5), nb, bn)
        widths = np.full(T, 3, dtype=np.int64)
        acc, tried = np.zeros(T, np.int64), np.zeros(T, np.int64)
        g = k.latent_sweep(order, u_prop, u_acc, I, S, Ss, nb, bn, C, N, B, delta, kidx, ar, 1e-3, 3.0,
                           math.log(0.5), math.log(0.5), 0.4, widths, acc, tried,
                           np.empty(T), np.empty(T), np.empty(T))
        out[name] = (I, S, nb, bn, acc, g)
    a, b = out["python"], out["cython"]
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[4], b[4])
    np.testing.assert_allclose(a[1], b[1], rtol=0, atol=0)
    np.testing.assert_allclose(a[2], b[2], rtol=1e-12)
    np.testing.assert_allclose(a[3], b[3], rtol=1e-12)
    assert a[5] == pytest.approx(b[5], rel=1e-9, abs=1e-9)


@needs_compiled
def test_short_chain_identical_across_backends(sim03):
    tr = sim03.training(24)
    cfg = McmcConfig(n_iter=60, n_burnin=30, adapt_interval=10, fixed_rho=0.3,
                     propagate_uncertainty=False, seed=4)
    a = run_chain(tr.C, tr.demography, sim03.config.calendar, config=replace(cfg, backend="python"))
    b = run_chain(tr.C, tr.demography, sim03.config.calendar, config=replace(cfg, backend="cython"))
    np.testing.assert_array_equal(a.I, b.I)
    np.testing.assert_allclose(a.params, b.params, rtol=1e-10)
