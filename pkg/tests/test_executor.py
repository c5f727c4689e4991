import math

import numpy as np
import pytest

from asyncfw.algorithms import replay_updates, run_sfw_asyn, run_sfw_dist, trace_to_csv
from asyncfw.errors import ParameterError, TransportError
from asyncfw.executor import ThreadTransport, run_live
from asyncfw.linalg import nuclear_norm
from asyncfw.schedules import fixed_schedule
from asyncfw.simulator import GeometricComputeModel, simulate


def heavy_tail(wid, units, rng):
    # mostly instant, occasionally a long stall: the straggler pattern
    return 0.004 if rng.random() < 0.2 else 0.0


def cfg(problem, schedule, kind="sfw_asyn", **kw):
    return {"problem": problem, "schedule": schedule, "kind": kind, **kw}


def test_single_worker_matches_simulator(sensing_small):
    s = fixed_schedule(15, tau=2)
    live = run_live(cfg(sensing_small, s, horizon=40), 1)
    simres, _ = simulate(cfg(sensing_small, s), GeometricComputeModel(), 1, 40)
    assert np.array_equal(live.X, simres.X)
    assert live.delays == [0] * 40
    assert all(math.isnan(r.simulated_time) for r in live.trace)
    assert all(not math.isnan(r.wall_time) for r in live.trace)
    assert "wall_time" in live.to_csv().splitlines()[1]


def test_sync_single_worker_matches_simulator(sensing_small):
    s = fixed_schedule(15)
    live = run_live(cfg(sensing_small, s, "sfw_dist", horizon=20), 3)
    simres, _ = simulate(cfg(sensing_small, s, "sfw_dist"), GeometricComputeModel(), 3, 20)
    # the synchronous round does not depend on arrival order
    assert np.array_equal(live.X, simres.X)


def test_abandonment_under_stragglers(sensing_small):
    s = fixed_schedule(10, tau=2)
    small = run_live(cfg(sensing_small, s, horizon=150), 4, heavy_tail, seed=1)
    assert len(small.trace) == 150
    assert small.abandoned > 0
    assert max(small.delays) <= 2
    inf = run_live(cfg(sensing_small, s, horizon=150, tau=math.inf), 4, heavy_tail, seed=1)
    assert inf.abandoned == 0 and len(inf.trace) == 150


def test_live_replay_and_feasibility(sensing_small):
    s = fixed_schedule(10, tau=3)
    res = run_live(cfg(sensing_small, s, horizon=120), 4, GeometricComputeModel(0.1),
                   unit_seconds=2e-5, seed=3)
    assert np.abs(replay_updates(res.X0, res.log, s) - res.X).max() < 1e-10
    assert all(d <= 3 for d in res.log.delays)
    X = res.X0
    for k, e in enumerate(res.log, start=1):
        X = (1 - s.eta(k)) * X + s.eta(k) * e.matrix()
        assert nuclear_norm(X) <= 1 + 1e-6


def test_worker_failure_aborts(sensing_small):
    calls = {"n": 0}

    def explode(wid, units, rng):
        if wid == 1:
            calls["n"] += 1
            if calls["n"] > 3:
                raise RuntimeError("boom")
        return 0.0

    with pytest.raises(TransportError) as info:
        run_sfw_asyn(sensing_small, fixed_schedule(5, tau=math.inf), 10_000, 2,
                     ThreadTransport(explode))
    assert info.value.partial is not None
    assert 0 < len(info.value.partial.trace) < 10_000


def test_sync_worker_failure(sensing_small):
    def explode(wid, units, rng):
        raise RuntimeError("boom")

    with pytest.raises(TransportError):
        run_sfw_dist(sensing_small, fixed_schedule(8), 5, 2, ThreadTransport(explode))


def test_wall_budget(sensing_small):
    s = fixed_schedule(5, tau=math.inf)
    res = run_live(cfg(sensing_small, s, horizon=10**6), 2, lambda w, u, r: 0.001,
                   wall_budget=0.2)
    assert res.stopped_early and 0 < len(res.trace) < 10**6


def test_run_live_validation(sensing_small):
    with pytest.raises(ParameterError):
        run_live(cfg(sensing_small, fixed_schedule(5), "sfw", horizon=3), 1)
    with pytest.raises(ParameterError):
        run_live(cfg(sensing_small, fixed_schedule(5), horizon=3), 0)


def test_live_svrf(sensing_small):
    from asyncfw.schedules import svrf_asyn_schedule
    s = svrf_asyn_schedule(2, cap=20)
    res = run_live(cfg(sensing_small, s, "svrf_asyn", horizon=2), 3, heavy_tail)
    assert len(res.trace) == 6 + 14
    for t in range(2):
        X = replay_updates(res.snapshots[t], res.logs[t], s)
        assert np.abs(X - res.snapshots[t + 1]).max() < 1e-10
