"""Convergence diagnostics for multiple chains."""
import numpy as np


def gelman_rubin(chains) -> float:
    """Potential scale reduction factor for one parameter.

    ``chains`` has shape ``(n_chains, n_draws)``.
    """
    chains = np.asarray(chains, dtype=float)
    m, n = chains.shape
    if m < 2 or n < 2:
        raise ValueError("need at least two chains of length two")
    W = np.mean(np.var(chains, axis=1, ddof=1))
    B = n * np.var(np.mean(chains, axis=1), ddof=1)
    if W == 0:
        return 1.0 if B == 0 else float("inf")
    V = (n - 1) / n * W + B / n
    return float(np.sqrt(V / W))


def psrf_table(draws_list, names=None) -> dict:
    """Gelman-Rubin statistic per parameter across several ``PosteriorDraws``."""
    from .model import PARAM_NAMES

    names = names or PARAM_NAMES
    n = min(len(d) for d in draws_list)
    return {name: gelman_rubin(np.stack([d.param(name)[:n] for d in draws_list])) for name in names}
