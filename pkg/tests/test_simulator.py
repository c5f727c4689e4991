import math

import numpy as np
import pytest

from asyncfw.algorithms import run_sfw, trace_to_csv
from asyncfw.errors import ParameterError
from asyncfw.schedules import fixed_schedule
from asyncfw.simulator import (EventQueue, GeometricComputeModel, SimulatedTransport,
                               delay_histogram, histogram_csv, sample_compute_time, simulate,
                               speedup_csv, speedup_report)
from oracles import geometric_mean


def test_model_validation():
    with pytest.raises(ParameterError):
        GeometricComputeModel(p=0)
    with pytest.raises(ParameterError):
        GeometricComputeModel(p=1.5)
    with pytest.raises(ParameterError):
        GeometricComputeModel(C_svd=0.5)


def test_deterministic_at_p1():
    rng = np.random.default_rng(0)
    m = GeometricComputeModel(1.0)
    assert {sample_compute_time(m, 7.5, rng) for _ in range(50)} == {7.5}
    with pytest.raises(ParameterError):
        sample_compute_time(m, 0, rng)


@pytest.mark.parametrize("p", [0.1, 0.8])
def test_geometric_mean(p):
    rng = np.random.default_rng(1)
    m = GeometricComputeModel(p)
    draws = np.array([sample_compute_time(m, 1.0, rng) for _ in range(100_000)])
    assert draws.mean() == pytest.approx(geometric_mean(p, 1.0), rel=0.03)
    assert draws.min() == 1.0 and np.all(draws == np.round(draws))
    if p == 0.8:
        assert np.mean(draws == 1.0) == pytest.approx(0.8, abs=0.02)


def test_event_queue_fifo():
    q = EventQueue()
    q.push(2.0, 0)
    q.push(1.0, 1)
    q.push(1.0, 2)
    q.push(1.0, 3)
    assert [q.pop()[2] for _ in range(4)] == [1, 2, 3, 0]
    assert len(q) == 0


def test_single_worker_serial_sum(sensing_small):
    s = fixed_schedule(17, tau=1)
    cfg = {"problem": sensing_small, "schedule": s, "kind": "sfw_asyn"}
    res, hist = simulate(cfg, GeometricComputeModel(1.0), 1, 30)
    times = [r.simulated_time for r in res.trace]
    assert times == [k * (17 + 10.0) for k in range(1, 31)]
    assert hist == {0: 30}
    seq = run_sfw(sensing_small, s, 30)
    assert [r.simulated_time for r in seq.trace] == times


def test_dist_p1_round_time(sensing_small):
    s = fixed_schedule(40)
    cfg = {"problem": sensing_small, "schedule": s, "kind": "sfw_dist"}
    res, _ = simulate(cfg, GeometricComputeModel(1.0), 4, 10)
    # each worker evaluates 10 samples: round = max of identical 10 units + 10 for the SVD
    assert np.allclose(np.diff([0.0] + [r.simulated_time for r in res.trace]), 20.0)


def test_async_vs_dist_uniform_workers(sensing_small):
    s = fixed_schedule(40, tau=math.inf)
    model = GeometricComputeModel(1.0)
    asyn, _ = simulate({"problem": sensing_small, "schedule": s, "kind": "sfw_asyn"},
                       model, 1, 10)
    dist, _ = simulate({"problem": sensing_small, "schedule": s, "kind": "sfw_dist"},
                       model, 1, 10)
    assert asyn.trace[-1].simulated_time == dist.trace[-1].simulated_time


def test_horizon_zero_and_workers(sensing_small):
    cfg = {"problem": sensing_small, "schedule": fixed_schedule(5), "kind": "sfw_asyn"}
    res, hist = simulate(cfg, GeometricComputeModel(), 3, 0)
    assert res.trace == [] and hist == {}
    with pytest.raises(ParameterError):
        simulate(cfg, GeometricComputeModel(), 0, 5)


def test_bit_identical_and_causal(sensing_small):
    s = fixed_schedule(12, tau=3)
    from asyncfw.algorithms import run_sfw_asyn
    a_tr = SimulatedTransport(GeometricComputeModel(0.1), seed=5, keep_events=True)
    a = run_sfw_asyn(sensing_small, s, 150, 4, a_tr)
    b = run_sfw_asyn(sensing_small, s, 150, 4, SimulatedTransport(GeometricComputeModel(0.1), 5))
    assert trace_to_csv(a.trace) == trace_to_csv(b.trace)
    assert all(fire >= start for start, fire in a_tr.events)
    times = [r.simulated_time for r in a.trace]
    assert all(x <= y for x, y in zip(times, times[1:]))


def test_adding_workers_keeps_streams(sensing_small):
    # worker 0's first completion time does not depend on how many workers exist
    s = fixed_schedule(12, tau=math.inf)
    first = []
    for W in (1, 2, 4):
        tr = SimulatedTransport(GeometricComputeModel(0.1), seed=3, keep_events=True)
        from asyncfw.algorithms import run_sfw_asyn
        run_sfw_asyn(sensing_small, s, 3, W, tr)
        first.append(tr.events[0])
    assert first[0] == first[1] == first[2]


def test_histogram():
    assert delay_histogram([0, 2, 2, 1]) == {0: 1, 1: 1, 2: 2}
    text = histogram_csv({0: 3, 1: 1})
    assert text.splitlines() == ["# asyncfw-delay-histogram v1", "delay,count", "0,3", "1,1"]


class _Fake:
    def __init__(self, times):
        self.times = times

    def time_to_target(self, target, clock="simulated_time"):
        return self.times


def test_speedup_report():
    rows = speedup_report({1: _Fake(100.0)}, 0.1)
    assert rows[0].speedup == 1.0
    rows = speedup_report({1: _Fake(100.0), 2: _Fake(50.0), 4: _Fake(math.inf)}, 0.1)
    assert [r.speedup for r in rows[:2]] == [1.0, 2.0]
    assert not rows[2].reachable and math.isnan(rows[2].speedup)
    csv = speedup_csv(rows, "sfw_asyn")
    assert csv.splitlines()[1] == "algorithm,workers,time_to_target,speedup,reachable"
    assert csv.splitlines()[-1] == "sfw_asyn,4,,,0"
