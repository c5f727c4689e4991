"""Discrete-event simulation of W workers with geometric compute times.

A task that costs ``C`` units when nothing goes wrong takes ``k * C`` time
with ``k ~ Geometric(p)`` on {1, 2, ...}; ``p = 1`` means every worker is
equally fast, small ``p`` means heavy straggling. Communication is free, as
in the setting being reproduced; payload sizes are still counted by the
algorithms. Each worker draws its compute times from its own stream seeded
by ``(seed, worker id)``, so adding workers never perturbs existing ones.
Simultaneous completions are served in scheduling order.
"""
from __future__ import annotations

import csv
import heapq
import io
import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class GeometricComputeModel:
    p: float = 1.0
    C_grad: float = 1.0
    C_svd: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ParameterError(f"p must lie in (0, 1], got {self.p}")
        if self.C_grad < 1 or self.C_svd < 1:
            raise ParameterError("C_grad and C_svd must be at least 1")


def sample_compute_time(model: GeometricComputeModel, expected_units: float,
                        rng: np.random.Generator) -> float:
    """k * expected_units with k ~ Geometric(p); mean expected_units / p."""
    if expected_units <= 0:
        raise ParameterError("expected_units must be positive")
    if model.p == 1.0:
        return float(expected_units)
    return float(rng.geometric(model.p)) * expected_units


class EventQueue:
    """Min-heap of (time, sequence, worker, kind); ties pop in insertion order."""

    def __init__(self):
        self._heap = []
        self._seq = itertools.count()

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: float, worker: int, kind: str = "complete") -> None:
        heapq.heappush(self._heap, (time, next(self._seq), worker, kind))

    def pop(self):
        return heapq.heappop(self._heap)


def _timing_rng(seed: int, worker: int) -> np.random.Generator:
    return np.random.default_rng([seed, worker, 0x7135])


class SimulatedTransport:
    """Drives the algorithm state machines on a virtual clock.

    Returns the final simulated time from ``run_async`` / ``run_sync``.
    ``events`` keeps (scheduled_at, fires_at) for causality checks.
    """

    def __init__(self, model: GeometricComputeModel | None = None, seed: int = 0,
                 keep_events: bool = False):
        self.model = model or GeometricComputeModel()
        self.seed = seed
        self.keep_events = keep_events
        self.events: list[tuple[float, float]] = []

    def run_async(self, master, workers) -> float:
        m = self.model
        rngs = [_timing_rng(self.seed, w.wid) for w in workers]
        queue = EventQueue()
        now = 0.0

        def schedule(w):
            dt = sample_compute_time(m, w.next_units(m.C_grad, m.C_svd), rngs[w.wid])
            queue.push(now + dt, w.wid)
            if self.keep_events:
                self.events.append((now, now + dt))

        for w in workers:
            schedule(w)
        while not master.done:
            t, _, wid, _ = queue.pop()
            if t < now:
                raise RuntimeError("event queue went back in time")
            now = t
            w = workers[wid]
            reply = master.handle(w.compute(), now=now)
            if master.done:
                break
            w.receive(reply)
            schedule(w)
        return now

    def run_sync(self, master, workers) -> float:
        m = self.model
        rngs = [_timing_rng(self.seed, w.wid) for w in workers]
        master_rng = _timing_rng(self.seed, -1 % (2 ** 31))
        now = 0.0
        while not master.done:
            shares = master.shares()
            partials = []
            slowest = 0.0
            for w, share in zip(workers, shares):
                g, count = w.partial(master.X, share)
                partials.append((g, count))
                if count > 0:
                    slowest = max(slowest, sample_compute_time(
                        m, count * m.C_grad, rngs[w.wid]))
            start = now
            now += slowest + sample_compute_time(m, m.C_svd, master_rng)
            if self.keep_events:
                self.events.append((start, now))
            master.aggregate(partials, now=now)
        return now


def delay_histogram(delays) -> dict[int, int]:
    return dict(sorted(Counter(int(d) for d in delays).items()))


def histogram_csv(hist: dict[int, int]) -> str:
    buf = io.StringIO()
    buf.write("# asyncfw-delay-histogram v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delay", "count"])
    for d, c in hist.items():
        w.writerow([d, c])
    return buf.getvalue()


def simulate(algorithm_config: dict, model: GeometricComputeModel, workers: int,
             horizon: int, seed: int = 0):
    """Run one algorithm on the virtual clock.

    ``algorithm_config`` holds ``problem`` and ``schedule`` objects plus
    ``kind`` (see ``algorithms.dispatch.KINDS``) and optional ``algo_seed``,
    ``tau``, ``f_ref``, ``target``, ``keep_gradients``, ``X0``. ``seed`` drives
    the compute times only. ``horizon`` counts accepted updates (epochs for
    SVRF). Returns ``(RunResult, delay histogram)``; a zero horizon yields an
    empty trace.
    """
    from .algorithms import RunResult
    from .algorithms.dispatch import run_algorithm

    if workers < 1:
        raise ParameterError("workers must be at least 1")
    cfg = dict(algorithm_config)
    problem, schedule, kind = cfg.pop("problem"), cfg.pop("schedule"), cfg.pop("kind")
    algo_seed = cfg.pop("algo_seed", 0)
    if horizon == 0:
        X0 = np.zeros(problem.shape)
        return RunResult(kind, [], X0, X0.copy(), math.nan), {}
    res = run_algorithm(kind, problem, schedule, horizon, workers,
                        SimulatedTransport(model, seed), seed=algo_seed, **cfg)
    return res, delay_histogram(res.delays)


@dataclass(frozen=True)
class SpeedupRow:
    workers: int
    time_to_target: float
    speedup: float
    reachable: bool


def speedup_report(traces_by_worker_count: dict, target_relative_error: float,
                   clock: str = "simulated_time") -> list[SpeedupRow]:
    """time_1(target) / time_W(target) for each worker count.

    Runs that never reach the target are marked unreachable (speedup NaN)
    rather than aborting the report.
    """
    counts = sorted(traces_by_worker_count)
    times = {}
    for w in counts:
        res = traces_by_worker_count[w]
        times[w] = res.time_to_target(target_relative_error, clock)
    base = times.get(1, math.inf)
    rows = []
    for w in counts:
        t = times[w]
        ok = math.isfinite(t)
        s = base / t if ok and math.isfinite(base) and t > 0 else math.nan
        rows.append(SpeedupRow(w, t, s, ok))
    return rows


def speedup_csv(rows, label: str | None = None) -> str:
    buf = io.StringIO()
    buf.write("# asyncfw-speedup v1\n")
    w = csv.writer(buf, lineterminator="\n")
    head = ["workers", "time_to_target", "speedup", "reachable"]
    w.writerow((["algorithm"] if label else []) + head)
    for r in rows:
        vals = [r.workers, "" if not math.isfinite(r.time_to_target) else repr(r.time_to_target),
                "" if math.isnan(r.speedup) else repr(r.speedup), int(r.reachable)]
        w.writerow(([label] if label else []) + vals)
    return buf.getvalue()
