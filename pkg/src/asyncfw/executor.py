"""Live master/worker runtime on threads.

Runs the same state machines as the simulator, but each participant gets
its own loop on its own thread and the only thing they share is FIFO
channels (``queue.Queue``). The master reads one unified inbox, so
submissions are serviced in arrival order; every worker has a private reply
channel. Worker failures are reported through the inbox and abort the run
with a ``TransportError`` carrying the partial result.

Wall-clock numbers are reported in the trace (``wall_time``) but nothing in
here depends on them for correctness.
"""
from __future__ import annotations

import logging
import math
import queue
import threading
import time

import numpy as np

from .errors import ParameterError, TransportError
from .algorithms.distributed import STOP, Stop
from .simulator import GeometricComputeModel, sample_compute_time

log = logging.getLogger(__name__)

JOIN_TIMEOUT = 10.0


class _Failure:
    def __init__(self, wid: int, exc: BaseException):
        self.wid = wid
        self.exc = exc


class ThreadTransport:
    """Transport running one master loop and W worker threads.

    ``delay_model`` injects sleeps before each task to emulate stragglers:
    either a ``GeometricComputeModel`` (sleep = sampled units times
    ``unit_seconds``) or a callable ``(worker_id, units, rng) -> seconds``.
    ``wall_budget`` (seconds) stops the run early with whatever was accepted.
    """

    def __init__(self, delay_model=None, seed: int = 0, unit_seconds: float = 1e-5,
                 wall_budget: float | None = None):
        self.delay_model = delay_model
        self.seed = seed
        self.unit_seconds = unit_seconds
        self.wall_budget = wall_budget
        self.budget_hit = False
        self._t0 = 0.0

    def _elapsed(self) -> float:
        return time.perf_counter() - self._t0

    def _over_budget(self) -> bool:
        if self.wall_budget is not None and self._elapsed() > self.wall_budget:
            if not self.budget_hit:
                log.warning("wall budget of %.3fs exhausted, stopping", self.wall_budget)
            self.budget_hit = True
        return self.budget_hit

    def _sleep(self, wid: int, units: float, rng) -> None:
        m = self.delay_model
        if m is None:
            return
        if isinstance(m, GeometricComputeModel):
            seconds = sample_compute_time(m, units, rng) * self.unit_seconds
        else:
            seconds = float(m(wid, units, rng))
        if seconds > 0:
            time.sleep(seconds)

    def _units(self) -> tuple[float, float]:
        m = self.delay_model if isinstance(self.delay_model, GeometricComputeModel) else None
        return (m.C_grad, m.C_svd) if m else (1.0, 10.0)

    def _start(self, target, workers):
        threads = [threading.Thread(target=target, args=(w,), name=f"asyncfw-worker-{w.wid}",
                                    daemon=True) for w in workers]
        for t in threads:
            t.start()
        return threads

    def _shutdown(self, threads, channels) -> None:
        for ch in channels:
            ch.put(STOP)
        for t in threads:
            t.join(JOIN_TIMEOUT)
            if t.is_alive():
                log.warning("%s did not stop within %.0fs", t.name, JOIN_TIMEOUT)

    def run_async(self, master, workers) -> float:
        inbox: queue.Queue = queue.Queue()
        channels = [queue.Queue() for _ in workers]
        c_grad, c_svd = self._units()

        def worker_loop(w):
            rng = np.random.default_rng([self.seed, w.wid, 0x7135])
            ch = channels[w.wid]
            try:
                while True:
                    self._sleep(w.wid, w.next_units(c_grad, c_svd), rng)
                    inbox.put(w.compute())
                    reply = ch.get()
                    if isinstance(reply, Stop):
                        return
                    w.receive(reply)
            except BaseException as exc:  # reported to the master, never swallowed
                inbox.put(_Failure(w.wid, exc))

        self._t0 = time.perf_counter()
        threads = self._start(worker_loop, workers)
        try:
            while not master.done and not self._over_budget():
                try:
                    msg = inbox.get(timeout=0.05)
                except queue.Empty:
                    continue
                if isinstance(msg, _Failure):
                    raise TransportError(f"worker {msg.wid} failed: {msg.exc!r}") from msg.exc
                now = self._elapsed()
                reply = master.handle(msg, now=now, wall=now, simulated=math.nan)
                if master.done:
                    break
                channels[msg.worker].put(reply)
        finally:
            self._shutdown(threads, channels)
        return self._elapsed()

    def run_sync(self, master, workers) -> float:
        inbox: queue.Queue = queue.Queue()
        channels = [queue.Queue() for _ in workers]
        c_grad, _ = self._units()

        def worker_loop(w):
            rng = np.random.default_rng([self.seed, w.wid, 0x7135])
            ch = channels[w.wid]
            try:
                while True:
                    job = ch.get()
                    if isinstance(job, Stop):
                        return
                    X, share = job
                    count = share.size if isinstance(share, np.ndarray) else share
                    if count:
                        self._sleep(w.wid, count * c_grad, rng)
                    inbox.put((w.wid, w.partial(X, share)))
            except BaseException as exc:
                inbox.put(_Failure(w.wid, exc))

        self._t0 = time.perf_counter()
        threads = self._start(worker_loop, workers)
        try:
            while not master.done and not self._over_budget():
                shares = master.shares()
                for ch, share in zip(channels, shares):
                    ch.put((master.X.copy(), share))
                partials = [None] * len(workers)
                for _ in workers:
                    msg = inbox.get()
                    if isinstance(msg, _Failure):
                        raise TransportError(
                            f"worker {msg.wid} failed: {msg.exc!r}") from msg.exc
                    wid, part = msg
                    partials[wid] = part
                now = self._elapsed()
                master.aggregate(partials, now=now, wall=now, simulated=math.nan)
        finally:
            self._shutdown(threads, channels)
        return self._elapsed()


def run_live(algorithm_config: dict, workers: int, injected_delay_model=None,
             wall_budget: float | None = None, *, unit_seconds: float = 1e-5,
             seed: int = 0):
    """Run a distributed algorithm on real threads.

    ``algorithm_config`` is the dictionary accepted by ``simulator.simulate``
    plus ``horizon`` (accepted updates, or epochs for SVRF). Returns the
    ``RunResult``; its trace has ``wall_time`` filled and ``simulated_time``
    empty. On a worker failure the ``TransportError`` raised carries the
    partial result as ``.partial``.
    """
    from .algorithms.dispatch import DISTRIBUTED, run_algorithm

    if workers < 1:
        raise ParameterError("workers must be at least 1")
    cfg = dict(algorithm_config)
    problem, schedule, kind = cfg.pop("problem"), cfg.pop("schedule"), cfg.pop("kind")
    if kind not in DISTRIBUTED:
        raise ParameterError(f"live runs need a distributed algorithm, got {kind!r}")
    horizon = cfg.pop("horizon")
    algo_seed = cfg.pop("algo_seed", 0)
    transport = ThreadTransport(injected_delay_model, seed, unit_seconds, wall_budget)
    res = run_algorithm(kind, problem, schedule, horizon, workers, transport,
                        seed=algo_seed, **cfg)
    res.stopped_early = res.stopped_early or transport.budget_hit
    return res
