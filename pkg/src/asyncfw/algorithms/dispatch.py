"""Name-based entry point shared by the simulator, the executor and the harness."""
from __future__ import annotations

from ..errors import ParameterError
from .distributed import run_sfw_asyn, run_sfw_asyn_naive, run_sfw_dist, run_svrf_asyn
from .sequential import run_fw, run_sfw, run_svrf

SEQUENTIAL = ("fw", "sfw", "svrf")
DISTRIBUTED = ("sfw_dist", "sfw_asyn", "sfw_asyn_naive", "svrf_asyn", "svrf_asyn_naive")
KINDS = SEQUENTIAL + DISTRIBUTED


def run_algorithm(kind: str, problem, schedule, horizon: int, workers: int = 1,
                  transport=None, *, seed: int = 0, tau=None, f_ref=None, target=None,
                  keep_gradients: bool = False, X0=None):
    """Run ``kind`` for ``horizon`` updates (epochs for the SVRF family).

    Sequential kinds ignore ``workers``, ``transport`` and ``tau``.
    """
    common = {"seed": seed, "f_ref": f_ref, "target": target, "X0": X0}
    if kind == "fw":
        return run_fw(problem, horizon, keep_gradients=keep_gradients, **common)
    if kind == "sfw":
        return run_sfw(problem, schedule, horizon, keep_gradients=keep_gradients, **common)
    if kind == "svrf":
        return run_svrf(problem, schedule, horizon, **common)
    if kind == "sfw_dist":
        return run_sfw_dist(problem, schedule, horizon, workers, transport,
                            keep_gradients=keep_gradients, **common)
    if kind == "sfw_asyn":
        return run_sfw_asyn(problem, schedule, horizon, workers, transport, tau=tau,
                            keep_gradients=keep_gradients, **common)
    if kind == "sfw_asyn_naive":
        return run_sfw_asyn_naive(problem, schedule, horizon, workers, transport, tau=tau,
                                  keep_gradients=keep_gradients, **common)
    if kind in ("svrf_asyn", "svrf_asyn_naive"):
        return run_svrf_asyn(problem, schedule, horizon, workers, transport, tau=tau,
                             efficient=kind == "svrf_asyn", **common)
    raise ParameterError(f"unknown algorithm kind {kind!r}; expected one of {KINDS}")
