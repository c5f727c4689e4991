"""Single-process Frank-Wolfe, stochastic Frank-Wolfe and SVRF."""
from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..linalg import lmo_nuclear
from ..objectives import sample_indices
from ..schedules import fixed_schedule
from .core import (Recorder, RunResult, apply_update, initial_point, lmo_seed,
                   worker_rng)

DEFAULT_COST = (1.0, 10.0)


def _start(problem, seed, X0):
    if X0 is None:
        X0, _, _ = initial_point(problem.shape, problem.theta, seed)
    return np.array(X0, dtype=np.float64)


def run_sfw(problem, schedule, T: int, seed: int = 0, *, f_ref=None, target=None,
            keep_gradients: bool = False, X0=None, cost=DEFAULT_COST) -> RunResult:
    """Stochastic Frank-Wolfe with minibatch size ``schedule.batch(k)`` at step k.

    The trace's ``simulated_time`` is the serial cost in the simulator's
    units (``len(batch) * C_grad + C_svd`` per step), which is what a single
    worker with no straggling would take.
    """
    if T < 1:
        raise ParameterError("T must be at least 1")
    X0 = _start(problem, seed, X0)
    rec = Recorder(problem, X0, f_ref, target, keep_gradients)
    rng = worker_rng(seed, 0)
    c_grad, c_svd = cost
    n = problem.n_samples
    X = X0
    evals = 0
    clock = 0.0
    for k in range(1, T + 1):
        idx = sample_indices(rng, n, schedule.batch(k))
        g = problem.gradient(X, idx)
        u, v = lmo_nuclear(g, problem.theta, seed=lmo_seed(seed, k)).folded()
        rec.keep(k, X, g, idx.size, 0, k - 1)
        X = apply_update(X, u, v, schedule.eta(k))
        evals += idx.size
        clock += idx.size * c_grad + c_svd
        rec.record(k, X, now=clock, grad_evals=evals, linops=k)
        if rec.reached:
            break
    return RunResult("sfw", rec.trace, X, X0, rec.f_ref, probe=rec.probe,
                     grad_evals=evals, linops=len(rec.trace),
                     stopped_early=rec.reached and len(rec.trace) < T)


def run_fw(problem, T: int, seed: int = 0, **kw) -> RunResult:
    """Deterministic Frank-Wolfe: SFW whose every batch is the whole data set."""
    res = run_sfw(problem, fixed_schedule(problem.n_samples), T, seed, **kw)
    res.algorithm = "fw"
    return res


def run_svrf(problem, schedule, epochs: int, seed: int = 0, *, f_ref=None, target=None,
             X0=None, cost=DEFAULT_COST) -> RunResult:
    """Stochastic variance-reduced Frank-Wolfe.

    Epoch t takes the snapshot W = X, computes grad F(W) once, then runs
    ``schedule.svrf_epochs(t)`` inner steps with step index restarting at 1
    and gradient estimate mean_S(grad f_i(X) - grad f_i(W)) + grad F(W).
    """
    if epochs < 1:
        raise ParameterError("epochs must be at least 1")
    if schedule.svrf_epochs is None:
        raise ParameterError("schedule has no epoch lengths")
    X0 = _start(problem, seed, X0)
    rec = Recorder(problem, X0, f_ref, target)
    rng = worker_rng(seed, 0)
    c_grad, c_svd = cost
    n = problem.n_samples
    X = X0
    snapshots = []
    evals = linops = 0
    clock = 0.0
    for t in range(epochs):
        W = X
        snapshots.append(W)
        gW = problem.gradient(W)
        evals += n
        clock += n * c_grad
        for k in range(1, schedule.svrf_epochs(t) + 1):
            idx = sample_indices(rng, n, schedule.batch(k))
            g = problem.gradient(X, idx) - problem.gradient(W, idx) + gW
            u, v = lmo_nuclear(g, problem.theta, seed=lmo_seed(seed, t, k)).folded()
            X = apply_update(X, u, v, schedule.eta(k))
            evals += 2 * idx.size
            linops += 1
            clock += 2 * idx.size * c_grad + c_svd
            rec.record(len(rec.trace) + 1, X, now=clock, grad_evals=evals,
                       linops=linops, epoch=t)
            if rec.reached:
                break
        if rec.reached:
            break
    snapshots.append(X)
    return RunResult("svrf", rec.trace, X, X0, rec.f_ref, snapshots=snapshots,
                     grad_evals=evals, linops=linops, stopped_early=rec.reached)
