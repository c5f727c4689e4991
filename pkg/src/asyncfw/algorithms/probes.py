"""Empirical check of the stale-gradient inexactness bound."""
from __future__ import annotations

import math

import numpy as np

from ..errors import ParameterError


def gradient_inexactness_probe(result, problem, schedule, constants, tau=None,
                               safety: float = 1.0) -> dict:
    """Measured vs. predicted gradient error along a run.

    For every accepted update k the probe is
    ``D * ||grad F(X_{k-1}) - g_k||_F`` where ``g_k`` is the minibatch
    gradient the worker actually used (possibly computed at a stale
    iterate). The bound is ``G D / sqrt(m_{k-tau}) + L tau eta_{k-tau} D^2``
    with indices below 1 clamped to 1; ``safety`` multiplies G and L.

    ``result`` must come from a run with ``keep_gradients=True``.
    """
    if not result.probe:
        raise ParameterError("run was not recorded with keep_gradients=True")
    tau = schedule.tau if tau is None else tau
    if not math.isfinite(tau):
        raise ParameterError("the bound needs a finite delay tolerance")
    G, L, D = safety * constants.G, safety * constants.L, constants.D
    iters, probe, bound = [], [], []
    for item in result.probe:
        k = item["iteration"]
        full = problem.gradient(item["X_prev"])
        probe.append(D * float(np.linalg.norm(full - item["gradient"])))
        j = max(k - int(tau), 1)
        m = min(schedule.batch(j), problem.n_samples)
        bound.append(G * D / math.sqrt(m) + L * tau * schedule.eta(j) * D ** 2)
        iters.append(k)
    return {"iteration": np.array(iters), "probe": np.array(probe),
            "bound": np.array(bound)}
