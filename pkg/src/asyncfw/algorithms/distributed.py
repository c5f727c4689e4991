"""Master/worker state machines for the distributed Frank-Wolfe variants.

Nothing here knows about time or threads. A transport (the discrete-event
simulator or the threaded executor) owns the participants and moves
messages between them:

* asynchronous runs: the transport repeatedly picks a worker whose task has
  finished, calls ``worker.compute()`` to get a ``Submit``, hands it to
  ``master.handle()`` and passes the reply back via ``worker.receive()``;
* synchronous runs: each round the transport asks ``master.shares()`` for
  the per-worker sample counts, gathers ``worker.partial()`` from everyone
  and calls ``master.aggregate()``.

Payload sizes are counted in abstract units, one unit per float shipped.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, TransportError
from ..linalg import lmo_nuclear
from ..objectives import sample_indices
from .core import (Recorder, RankOneUpdate, RunResult, UpdateLog, apply_update,
                   initial_point, lmo_seed, worker_rng)

log = logging.getLogger(__name__)


# -- messages ------------------------------------------------------------------------------

@dataclass(frozen=True)
class Submit:
    """Worker -> master: an oracle answer computed against X_origin of ``epoch``."""

    worker: int
    origin: int
    epoch: int
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    matrix: np.ndarray | None = None
    grad_evals: int = 0
    linops: int = 0
    batch: int = 0
    gradient: np.ndarray | None = None

    def units(self) -> int:
        if self.matrix is not None:
            return self.matrix.size + 1
        return self.u.size + self.v.size + 1


@dataclass(frozen=True)
class CatchUp:
    """Master -> worker: log entries t_w+1..t_m of the current epoch, in order."""

    entries: tuple
    t_m: int
    epoch: int

    def units(self) -> int:
        return sum(e.u.size + e.v.size for e in self.entries)


@dataclass(frozen=True)
class Broadcast:
    """Master -> worker for the naive variants: the full current iterate (and snapshot)."""

    X: np.ndarray
    t_m: int
    epoch: int
    W: np.ndarray | None = None

    def units(self) -> int:
        return self.X.size + (0 if self.W is None else self.W.size)


@dataclass(frozen=True)
class SnapshotSignal:
    """Master -> worker after one or more epoch boundaries.

    ``segments[0]`` finishes the worker's old epoch from its position, any
    middle segments are whole skipped epochs, the last segment holds the
    current epoch's entries so far.
    """

    segments: tuple
    t_m: int
    epoch: int

    def units(self) -> int:
        return sum(e.u.size + e.v.size for seg in self.segments for e in seg)


class Stop:
    def units(self) -> int:
        return 0

    def __repr__(self):
        return "STOP"


STOP = Stop()


# -- asynchronous master / worker ----------------------------------------------------------

class AsyncMaster:
    """Single owner of the master state for SFW-asyn and SVRF-asyn (naive or efficient).

    Accepts a submission when it belongs to the current epoch and its delay
    ``t_m - t_w`` is at most ``tau``; otherwise the work is abandoned and the
    worker only gets what it needs to catch up. The iterate ``X`` kept here
    is the output copy; efficient workers never see it.
    """

    def __init__(self, problem, schedule, X0, recorder: Recorder, *, T=None, epochs=None,
                 tau=math.inf, efficient=True, n_workers=1):
        self.problem = problem
        self.schedule = schedule
        self.recorder = recorder
        self.tau = tau
        self.efficient = efficient
        self.variance_reduced = epochs is not None
        self.T = T
        self.epochs = epochs
        self.n_workers = n_workers
        self.X = np.array(X0, dtype=np.float64)
        self.snapshots = [self.X.copy()]
        self.logs = [UpdateLog()]
        self.t_m = 0
        self.epoch = 0
        self.accepted = 0
        self.abandoned = 0
        self.grad_evals = 0
        self.linops = 0
        self.delays: list[int] = []
        self.bytes_in = defaultdict(int)
        self.bytes_out = defaultdict(int)

    @property
    def log(self) -> UpdateLog:
        return self.logs[self.epoch] if self.epoch < len(self.logs) else self.logs[-1]

    @property
    def done(self) -> bool:
        if self.recorder.reached:
            return True
        if self.variance_reduced:
            return self.epoch >= self.epochs
        return self.t_m >= self.T

    def epoch_length(self, epoch: int) -> int:
        return self.schedule.svrf_epochs(epoch) if self.variance_reduced else self.T

    def handle(self, msg: Submit, now: float = 0.0, wall: float = math.nan,
               simulated: float | None = None):
        w = msg.worker
        self.bytes_in[w] += msg.units()
        self.grad_evals += msg.grad_evals
        self.linops += msg.linops
        if msg.epoch == self.epoch and self.t_m - msg.origin <= self.tau:
            self._accept(msg, now, wall, simulated)
        else:
            self.abandoned += 1
        reply = self._reply(msg)
        self.bytes_out[w] += reply.units()
        return reply

    def _accept(self, msg: Submit, now, wall, simulated) -> None:
        delay = self.t_m - msg.origin
        X_prev = self.X
        self.t_m += 1
        self.accepted += 1
        eta = self.schedule.eta(self.t_m)
        if self.efficient:
            self.X = apply_update(X_prev, msg.u, msg.v, eta)
            self.logs[self.epoch].append(
                RankOneUpdate(msg.u, msg.v, msg.origin, self.epoch), delay)
        else:
            self.X = (1.0 - eta) * X_prev + eta * msg.matrix
            self.logs[self.epoch].delays.append(delay)
        self.delays.append(delay)
        self.recorder.keep(self.accepted, X_prev, msg.gradient, msg.batch, delay, msg.origin)
        self.recorder.record(self.accepted, self.X, now=now, simulated=simulated,
                             delay=delay, abandoned=self.abandoned,
                             grad_evals=self.grad_evals, linops=self.linops,
                             bytes_in=sum(self.bytes_in.values()),
                             bytes_out=sum(self.bytes_out.values()),
                             wall=wall, epoch=self.epoch)
        if self.variance_reduced and self.t_m >= self.epoch_length(self.epoch):
            self.snapshots.append(self.X.copy())
            self.epoch += 1
            self.t_m = 0
            self.logs.append(UpdateLog())

    def _reply(self, msg: Submit):
        if not self.efficient:
            W = self.snapshots[self.epoch] if msg.epoch != self.epoch else None
            return Broadcast(self.X.copy(), self.t_m, self.epoch, W)
        if msg.epoch == self.epoch:
            return CatchUp(self.logs[self.epoch].since(msg.origin), self.t_m, self.epoch)
        segments = [self.logs[msg.epoch].since(msg.origin)]
        segments += [tuple(self.logs[e]) for e in range(msg.epoch + 1, self.epoch)]
        segments.append(self.logs[self.epoch].since(0))
        return SnapshotSignal(tuple(segments), self.t_m, self.epoch)


class AsyncWorker:
    """Single owner of one worker's state: local iterate, its count and the RNG streams."""

    def __init__(self, wid: int, problem, schedule, X0, seed: int, *,
                 efficient=True, variance_reduced=False, keep_gradients=False):
        self.wid = wid
        self.problem = problem
        self.schedule = schedule
        self.seed = seed
        self.efficient = efficient
        self.variance_reduced = variance_reduced
        self.keep_gradients = keep_gradients
        self.rng = worker_rng(seed, wid)
        self.X = np.array(X0, dtype=np.float64)
        self.t_w = 0
        self.epoch = 0
        self.pending_evals = 0
        if variance_reduced:
            self._take_snapshot(self.X)

    def _take_snapshot(self, W) -> None:
        self.W = W
        self.gW = self.problem.gradient(W)
        self.pending_evals = self.problem.n_samples

    def batch_size(self) -> int:
        """Samples the next task draws: the schedule at the update it would produce."""
        return min(self.schedule.batch(self.t_w + 1), self.problem.n_samples)

    def next_units(self, c_grad: float, c_svd: float) -> float:
        per = 2 if self.variance_reduced else 1
        return (per * self.batch_size() + self.pending_evals) * c_grad + c_svd

    def compute(self) -> Submit:
        k = self.t_w + 1
        idx = sample_indices(self.rng, self.problem.n_samples, self.schedule.batch(k))
        g = self.problem.gradient(self.X, idx)
        evals = idx.size + self.pending_evals
        self.pending_evals = 0
        if self.variance_reduced:
            g = g - self.problem.gradient(self.W, idx) + self.gW
            evals += idx.size
            seed = lmo_seed(self.seed, self.epoch, k)
        else:
            seed = lmo_seed(self.seed, k)
        u, v = lmo_nuclear(g, self.problem.theta, seed=seed).folded()
        kept = g if self.keep_gradients else None
        if self.efficient:
            return Submit(self.wid, self.t_w, self.epoch, u=u, v=v, grad_evals=evals,
                          linops=1, batch=idx.size, gradient=kept)
        return Submit(self.wid, self.t_w, self.epoch, matrix=np.outer(u, v),
                      grad_evals=evals, linops=1, batch=idx.size, gradient=kept)

    def _replay(self, X, entries, t):
        for e in entries:
            t += 1
            X = apply_update(X, e.u, e.v, self.schedule.eta(t))
        return X, t

    def receive(self, reply) -> None:
        if isinstance(reply, CatchUp):
            self.X, t = self._replay(self.X, reply.entries, self.t_w)
            if t != reply.t_m:
                raise TransportError(f"worker {self.wid}: catch-up ends at {t}, "
                                     f"master is at {reply.t_m}")
            self.t_w = reply.t_m
        elif isinstance(reply, Broadcast):
            self.X = reply.X.copy()
            if reply.W is not None:
                self._take_snapshot(reply.W.copy())
            self.t_w, self.epoch = reply.t_m, reply.epoch
        elif isinstance(reply, SnapshotSignal):
            X, t = self.X, self.t_w
            for seg in reply.segments[:-1]:
                X, _ = self._replay(X, seg, t)
                t = 0
            self._take_snapshot(X.copy())
            self.X, t = self._replay(X, reply.segments[-1], 0)
            if t != reply.t_m:
                raise TransportError(f"worker {self.wid}: snapshot replay ends at {t}, "
                                     f"master is at {reply.t_m}")
            self.t_w, self.epoch = reply.t_m, reply.epoch
        else:
            raise TransportError(f"worker {self.wid}: unexpected message {reply!r}")


# -- synchronous master / worker -------------------------------------------------------------

class SyncMaster:
    """SFW-dist: every round waits for all workers' partial gradients."""

    def __init__(self, problem, schedule, X0, recorder: Recorder, *, T, n_workers, seed):
        self.problem = problem
        self.schedule = schedule
        self.recorder = recorder
        self.T = T
        self.n_workers = n_workers
        self.seed = seed
        self.X = np.array(X0, dtype=np.float64)
        self.k = 0
        self.grad_evals = 0
        self.linops = 0
        self.bytes_in = defaultdict(int)
        self.bytes_out = defaultdict(int)

    @property
    def done(self) -> bool:
        return self.k >= self.T or self.recorder.reached

    def shares(self) -> list:
        """floor(m_k / W) samples per worker, remainder to worker 0.

        Once m_k reaches N the round is a full-gradient round and the data
        set is partitioned into contiguous index blocks instead, so the
        combined gradient is exact as in the single-worker case.
        """
        m = self.schedule.batch(self.k + 1)
        n = self.problem.n_samples
        if m >= n:
            out = np.array_split(np.arange(n), self.n_workers)
        else:
            base, rem = divmod(m, self.n_workers)
            out = [base] * self.n_workers
            out[0] += rem
        for w in range(self.n_workers):
            self.bytes_out[w] += self.X.size
        return out

    def aggregate(self, partials, now: float = 0.0, wall: float = math.nan,
                  simulated: float | None = None) -> None:
        """Combine (mean gradient, count) pairs, take the oracle step and record."""
        for w, (g, count) in enumerate(partials):
            self.bytes_in[w] += g.size
            self.grad_evals += count
        live = [(g, c) for g, c in partials if c > 0]
        total = sum(c for _, c in live)
        if len(live) == 1:
            grad = live[0][0]
        else:
            grad = sum((c / total) * g for g, c in live)
        self.k += 1
        u, v = lmo_nuclear(grad, self.problem.theta, seed=lmo_seed(self.seed, self.k)).folded()
        self.recorder.keep(self.k, self.X, grad, total, 0, self.k - 1)
        self.X = apply_update(self.X, u, v, self.schedule.eta(self.k))
        self.linops += 1
        self.recorder.record(self.k, self.X, now=now, simulated=simulated,
                             grad_evals=self.grad_evals, linops=self.linops,
                             bytes_in=sum(self.bytes_in.values()),
                             bytes_out=sum(self.bytes_out.values()), wall=wall)


class SyncWorker:
    def __init__(self, wid: int, problem, seed: int):
        self.wid = wid
        self.problem = problem
        self.rng = worker_rng(seed, wid)

    def partial(self, X, share):
        """Mean gradient over ``share`` fresh samples (or the given index block), and the count."""
        if not isinstance(share, np.ndarray):
            if share == 0:
                return np.zeros(self.problem.shape), 0
            share = sample_indices(self.rng, self.problem.n_samples, share)
        idx = share
        return self.problem.gradient(X, idx), idx.size


# -- drivers ---------------------------------------------------------------------------------

def _default_transport(transport):
    if transport is None:
        from ..simulator import SimulatedTransport
        return SimulatedTransport()
    return transport


def _check(T, workers):
    if T is not None and T < 1:
        raise ParameterError("T must be at least 1")
    if workers < 1:
        raise ParameterError("workers must be at least 1")


def _async_result(name, master: AsyncMaster, X0, elapsed=0.0) -> RunResult:
    rec = master.recorder
    return RunResult(
        name, rec.trace, master.X, X0, rec.f_ref,
        log=master.logs[0] if not master.variance_reduced else None,
        logs=master.logs, snapshots=master.snapshots, probe=rec.probe,
        delays=list(master.delays), abandoned=master.abandoned,
        bytes_in=sum(master.bytes_in.values()), bytes_out=sum(master.bytes_out.values()),
        channel_bytes_in=dict(master.bytes_in), channel_bytes_out=dict(master.bytes_out),
        grad_evals=master.grad_evals, linops=master.linops, elapsed=elapsed,
        stopped_early=rec.reached)


def _run_async(name, problem, schedule, workers, transport, seed, tau, f_ref, target,
               keep_gradients, X0, efficient, T=None, epochs=None) -> RunResult:
    _check(T, workers)
    if X0 is None:
        X0, _, _ = initial_point(problem.shape, problem.theta, seed)
    X0 = np.array(X0, dtype=np.float64)
    tau = schedule.tau if tau is None else tau
    if tau is None or tau < 0:
        raise ParameterError("tau must be nonnegative")
    if T is not None and math.isfinite(tau) and tau >= T / 2:
        log.warning("tau=%s is not below T/2=%s; rate guarantees assume it is", tau, T / 2)
    rec = Recorder(problem, X0, f_ref, target, keep_gradients)
    master = AsyncMaster(problem, schedule, X0, rec, T=T, epochs=epochs, tau=tau,
                         efficient=efficient, n_workers=workers)
    pool = [AsyncWorker(w, problem, schedule, X0, seed, efficient=efficient,
                        variance_reduced=epochs is not None,
                        keep_gradients=keep_gradients) for w in range(workers)]
    transport = _default_transport(transport)
    try:
        elapsed = transport.run_async(master, pool)
    except TransportError as exc:
        exc.partial = _async_result(name, master, X0)
        raise
    return _async_result(name, master, X0, elapsed or 0.0)


def run_sfw_asyn_naive(problem, schedule, T: int, workers: int = 1, transport=None, *,
                       seed: int = 0, tau=None, f_ref=None, target=None,
                       keep_gradients=False, X0=None) -> RunResult:
    """Asynchronous SFW shipping full matrices both ways (reference for analysis)."""
    return _run_async("sfw_asyn_naive", problem, schedule, workers, transport, seed, tau,
                      f_ref, target, keep_gradients, X0, efficient=False, T=T)


def run_sfw_asyn(problem, schedule, T: int, workers: int = 1, transport=None, *,
                 seed: int = 0, tau=None, f_ref=None, target=None, keep_gradients=False,
                 X0=None) -> RunResult:
    """Asynchronous SFW exchanging rank-one vector pairs and catch-up logs.

    ``T`` counts accepted updates. ``tau`` overrides the schedule's delay
    tolerance (``math.inf`` disables abandonment).
    """
    return _run_async("sfw_asyn", problem, schedule, workers, transport, seed, tau,
                      f_ref, target, keep_gradients, X0, efficient=True, T=T)


def run_svrf_asyn(problem, schedule, epochs: int, workers: int = 1, transport=None, *,
                  seed: int = 0, tau=None, f_ref=None, target=None, efficient=True,
                  X0=None) -> RunResult:
    """Asynchronous SVRF: snapshot epochs of ``schedule.svrf_epochs(t)`` accepted updates.

    Submissions computed against an earlier snapshot are discarded and
    answered with the snapshot signal, so every accepted update inside an
    epoch used that epoch's W and grad F(W).
    """
    if epochs < 1:
        raise ParameterError("epochs must be at least 1")
    if schedule.svrf_epochs is None:
        raise ParameterError("schedule has no epoch lengths")
    name = "svrf_asyn" if efficient else "svrf_asyn_naive"
    return _run_async(name, problem, schedule, workers, transport, seed, tau, f_ref,
                      target, False, X0, efficient=efficient, epochs=epochs)


def run_sfw_dist(problem, schedule, T: int, workers: int = 1, transport=None, *,
                 seed: int = 0, f_ref=None, target=None, keep_gradients=False,
                 X0=None) -> RunResult:
    """Synchronous distributed SFW: W partial gradients per round, one oracle call."""
    _check(T, workers)
    if X0 is None:
        X0, _, _ = initial_point(problem.shape, problem.theta, seed)
    X0 = np.array(X0, dtype=np.float64)
    rec = Recorder(problem, X0, f_ref, target, keep_gradients)
    master = SyncMaster(problem, schedule, X0, rec, T=T, n_workers=workers, seed=seed)
    pool = [SyncWorker(w, problem, seed) for w in range(workers)]
    transport = _default_transport(transport)
    try:
        elapsed = transport.run_sync(master, pool)
    except TransportError as exc:
        exc.partial = RunResult("sfw_dist", rec.trace, master.X, X0, rec.f_ref)
        raise
    return RunResult("sfw_dist", rec.trace, master.X, X0, rec.f_ref, probe=rec.probe,
                     bytes_in=sum(master.bytes_in.values()),
                     bytes_out=sum(master.bytes_out.values()),
                     channel_bytes_in=dict(master.bytes_in),
                     channel_bytes_out=dict(master.bytes_out),
                     grad_evals=master.grad_evals, linops=master.linops,
                     elapsed=elapsed or 0.0, stopped_early=rec.reached)
