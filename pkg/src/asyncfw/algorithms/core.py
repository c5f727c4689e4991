"""Building blocks shared by every Frank-Wolfe variant.

The update convention used everywhere: an oracle answer ``-theta * u v^T``
is stored as the pair ``(-theta * u, v)``, so a logged entry ``(u_k, v_k)``
is applied verbatim as ``X_k = (1 - eta_k) X_{k-1} + eta_k u_k v_k^T``.
Master, workers and replay all go through ``apply_update`` so that iterates
rebuilt from a log agree bit-for-bit with the ones maintained in place.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..errors import FeasibilityError, ParameterError
from ..linalg import lmo_nuclear, nuclear_norm, read_matrix, write_matrix
from ..objectives import relative_error

FEAS_TOL = 1e-8
TRACE_VERSION = 1


def lmo_seed(seed: int, *counters: int) -> int:
    """Start-vector seed for the oracle call tagged by (seed, epoch?, iteration)."""
    return int(np.random.SeedSequence([seed, *counters]).generate_state(1)[0])


def worker_rng(seed: int, worker: int) -> np.random.Generator:
    """Sampling stream of one worker; worker 0's stream is also the sequential one."""
    return np.random.default_rng([seed, worker])


def initial_point(shape: tuple[int, int], theta: float, seed: int):
    """Seeded rank-one start theta * u0 v0^T on the boundary of the ball.

    Returns (X0, u0_folded, v0) so the start can be shipped as two vectors.
    """
    rng = np.random.default_rng([seed, 0x5EED])
    u = rng.standard_normal(shape[0])
    v = rng.standard_normal(shape[1])
    u *= theta / np.linalg.norm(u)
    v /= np.linalg.norm(v)
    return np.outer(u, v), u, v


def apply_update(X: np.ndarray, u: np.ndarray, v: np.ndarray, eta: float) -> np.ndarray:
    return (1.0 - eta) * X + eta * np.outer(u, v)


def check_feasible(X: np.ndarray, theta: float, tol: float = FEAS_TOL) -> float:
    nn = nuclear_norm(X)
    if nn > theta + tol:
        raise FeasibilityError(f"||X||_* = {nn} exceeds theta = {theta}")
    return nn


def fw_step(X, grad, eta: float, theta: float, seed: int = 0) -> np.ndarray:
    """One Frank-Wolfe move toward the oracle answer for ``grad``."""
    if not 0.0 < eta <= 1.0:
        raise ParameterError(f"eta must lie in (0, 1], got {eta}")
    X = np.asarray(X, dtype=np.float64)
    check_feasible(X, theta)
    u, v = lmo_nuclear(grad, theta, seed=seed).folded()
    return apply_update(X, u, v, eta)


@dataclass(frozen=True)
class RankOneUpdate:
    """One accepted oracle answer; ``u`` already carries the -theta factor."""

    u: np.ndarray
    v: np.ndarray
    origin: int
    epoch: int = 0

    def matrix(self) -> np.ndarray:
        return np.outer(self.u, self.v)


class UpdateLog:
    """Append-only record of accepted updates; entry k (1-based) produced X_k."""

    def __init__(self):
        self._entries: list[RankOneUpdate] = []
        self.delays: list[int] = []

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def entry(self, k: int) -> RankOneUpdate:
        if not 1 <= k <= len(self._entries):
            raise ParameterError(f"log entry {k} out of range 1..{len(self._entries)}")
        return self._entries[k - 1]

    def append(self, update: RankOneUpdate, delay: int = 0) -> int:
        self._entries.append(update)
        self.delays.append(delay)
        return len(self._entries)

    def since(self, t: int, upto: int | None = None) -> tuple[RankOneUpdate, ...]:
        """Entries t+1..upto (default: to the end)."""
        return tuple(self._entries[t:upto])


def save_log(log: UpdateLog, directory) -> Path:
    """Write a log as AFW1 matrices: u.afw (n x D1), v.afw (n x D2), meta.afw (origin, epoch, delay)."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    entries = list(log)
    if not entries:
        raise ParameterError("cannot save an empty log")
    write_matrix(out / "u.afw", np.stack([e.u for e in entries]))
    write_matrix(out / "v.afw", np.stack([e.v for e in entries]))
    write_matrix(out / "meta.afw", np.array([[e.origin, e.epoch, d] for e, d
                                             in zip(entries, log.delays)], dtype=np.float64))
    return out


def load_log(directory) -> UpdateLog:
    src = Path(directory)
    U, V, meta = (read_matrix(src / f) for f in ("u.afw", "v.afw", "meta.afw"))
    log = UpdateLog()
    for u, v, (origin, epoch, delay) in zip(U, V, meta):
        log.append(RankOneUpdate(u.copy(), v.copy(), int(origin), int(epoch)), int(delay))
    return log


def replay_updates(X0, log, schedule, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rebuild X_stop from X_start by applying log entries start+1..stop in order."""
    n = len(log)
    if stop is None:
        stop = n
    if not 0 <= start <= stop <= n:
        raise ParameterError(f"replay range {start}..{stop} invalid for log of length {n}")
    X = np.array(X0, dtype=np.float64)
    entries = log.since(start, stop) if isinstance(log, UpdateLog) else list(log)[start:stop]
    for k, e in enumerate(entries, start=start + 1):
        X = apply_update(X, e.u, e.v, schedule.eta(k))
    return X


# -- traces -----------------------------------------------------------------------------

TRACE_COLUMNS = ("iteration", "accepted_time", "simulated_time", "objective",
                 "relative_error", "delay", "abandoned_total", "grad_evals_total",
                 "linops_total", "bytes_in", "bytes_out")


@dataclass
class TraceRecord:
    iteration: int
    accepted_time: float
    simulated_time: float
    objective: float
    relative_error: float
    delay: int = 0
    abandoned_total: int = 0
    grad_evals_total: int = 0
    linops_total: int = 0
    bytes_in: int = 0
    bytes_out: int = 0
    wall_time: float = math.nan
    epoch: int = 0


def _fmt(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def trace_to_csv(trace, wall_time: bool = False) -> str:
    """CSV text with a versioned comment line; floats are written with repr()."""
    cols = TRACE_COLUMNS + (("wall_time",) if wall_time else ())
    buf = io.StringIO()
    buf.write(f"# asyncfw-trace v{TRACE_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for rec in trace:
        w.writerow([_fmt(getattr(rec, c)) for c in cols])
    return buf.getvalue()


def write_trace_csv(path, trace, wall_time: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(trace_to_csv(trace, wall_time))


def parse_trace_csv(text: str) -> list[TraceRecord]:
    types = {f.name: f.type for f in fields(TraceRecord)}
    lines = [ln for ln in text.splitlines(keepends=True) if not ln.startswith("#")]
    out = []
    for row in csv.DictReader(lines):
        kw = {}
        for k, v in row.items():
            if types[k] == "int":
                kw[k] = int(v)
            else:
                kw[k] = float(v) if v != "" else math.nan
        out.append(TraceRecord(**kw))
    return out


def read_trace_csv(path) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        return parse_trace_csv(fh.read())


@dataclass
class RunResult:
    """Everything a run leaves behind: the trace, final iterate and bookkeeping."""

    algorithm: str
    trace: list[TraceRecord]
    X: np.ndarray
    X0: np.ndarray
    f_ref: float
    log: UpdateLog | None = None
    logs: list[UpdateLog] = field(default_factory=list)
    snapshots: list[np.ndarray] = field(default_factory=list)
    probe: list[dict] = field(default_factory=list)
    delays: list[int] = field(default_factory=list)
    abandoned: int = 0
    bytes_in: int = 0
    bytes_out: int = 0
    channel_bytes_out: dict = field(default_factory=dict)
    channel_bytes_in: dict = field(default_factory=dict)
    grad_evals: int = 0
    linops: int = 0
    elapsed: float = 0.0
    stopped_early: bool = False

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.trace])

    def relative_errors(self) -> np.ndarray:
        return np.array([r.relative_error for r in self.trace])

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.relative_errors())

    def time_to_target(self, target: float, clock: str = "simulated_time") -> float:
        """First clock value at which the relative error is <= target (inf if never)."""
        for rec in self.trace:
            if rec.relative_error <= target:
                return getattr(rec, clock)
        return math.inf

    def samples_to_target(self, target: float) -> float:
        for rec in self.trace:
            if rec.relative_error <= target:
                return rec.grad_evals_total
        return math.inf

    def to_csv(self) -> str:
        return trace_to_csv(self.trace, wall_time=any(not math.isnan(r.wall_time)
                                                      for r in self.trace))

    def summary(self) -> dict:
        last = self.trace[-1] if self.trace else None
        return {"algorithm": self.algorithm, "iterations": len(self.trace),
                "final_objective": None if last is None else last.objective,
                "final_relative_error": None if last is None else last.relative_error,
                "abandoned": self.abandoned, "grad_evals": self.grad_evals,
                "linops": self.linops, "bytes_in": self.bytes_in,
                "bytes_out": self.bytes_out, "max_delay": max(self.delays, default=0)}


class Recorder:
    """Turns iterates into trace rows; owns the relative-error reference values."""

    def __init__(self, problem, X0, f_ref=None, target=None, keep_gradients=False):
        self.problem = problem
        self.f_ref = problem.reference_value() if f_ref is None else float(f_ref)
        self.f0 = problem.loss(X0)
        self.target = target
        self.keep_gradients = keep_gradients
        self.trace: list[TraceRecord] = []
        self.probe: list[dict] = []
        self.reached = False

    def record(self, iteration, X, *, now=0.0, simulated=None, delay=0, abandoned=0,
               grad_evals=0, linops=0, bytes_in=0, bytes_out=0, wall=math.nan,
               epoch=0) -> TraceRecord:
        f = self.problem.loss(X)
        rel = relative_error(f, self.f_ref, self.f0)
        rec = TraceRecord(iteration, float(now), float(now if simulated is None else simulated),
                          f, rel, int(delay), int(abandoned), int(grad_evals), int(linops),
                          int(bytes_in), int(bytes_out), float(wall), int(epoch))
        self.trace.append(rec)
        if self.target is not None and rel <= self.target:
            self.reached = True
        return rec

    def keep(self, iteration, X_prev, gradient, batch, delay, origin) -> None:
        if self.keep_gradients:
            self.probe.append({"iteration": iteration, "X_prev": X_prev.copy(),
                               "gradient": np.array(gradient), "batch": int(batch),
                               "delay": int(delay), "origin": int(origin)})


def record_to_dict(rec: TraceRecord) -> dict:
    return asdict(rec)
