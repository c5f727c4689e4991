"""Step-size, batch-size, delay and epoch-length schedules.

Iterations are counted from k = 1 for the first update, so ``eta(1) = 1``
and the starting point drops out after the first step. Batch sizes are the
ceiling of the real-valued formulas, floored at 1 and clamped to an
optional cap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import InfeasibleTargetError, ParameterError
from .objectives import ProblemConstants


def step_size(k: int) -> float:
    return 2.0 / (k + 1)


def _clamp(value: float, cap: int | None) -> int:
    # round first: ratios like 16/4 must not become 5 through float noise
    m = max(1, math.ceil(round(value, 9)))
    return m if cap is None else min(m, cap)


def _check_constants(constants: ProblemConstants) -> None:
    if constants.L <= 0 or constants.G <= 0 or constants.D <= 0:
        raise ParameterError("G, L, D must be positive")


@dataclass(frozen=True)
class Schedule:
    name: str
    eta: Callable[[int], float]
    batch: Callable[[int], int]
    tau: float = 0
    batch_cap: int | None = None
    svrf_epochs: Callable[[int], int] | None = None
    params: dict = field(default_factory=dict)

    def describe(self) -> dict:
        return {"name": self.name, **self.params}


def sfw_schedule(constants: ProblemConstants, cap: int | None = None) -> Schedule:
    """eta = 2/(k+1), batch = G^2 (k+1)^2 / (L^2 D^2)."""
    _check_constants(constants)
    base = constants.G ** 2 / (constants.L ** 2 * constants.D ** 2)
    return Schedule("sfw", step_size, lambda k: _clamp(base * (k + 1) ** 2, cap),
                    tau=0, batch_cap=cap,
                    params={"cap": cap, **_const_params(constants)})


def sfw_asyn_schedule(constants: ProblemConstants, tau: int,
                      cap: int | None = None) -> Schedule:
    """Growing batches shrunk by tau^2; tau = 0 falls back to ``sfw_schedule``."""
    _check_constants(constants)
    if tau < 0:
        raise ParameterError("tau must be nonnegative")
    if tau == 0:
        return sfw_schedule(constants, cap)
    base = constants.G ** 2 / (tau ** 2 * constants.L ** 2 * constants.D ** 2)
    return Schedule("sfw_asyn", step_size, lambda k: _clamp(base * (k + 1) ** 2, cap),
                    tau=tau, batch_cap=cap,
                    params={"tau": tau, "cap": cap, **_const_params(constants)})


def constant_batch_schedule(constants: ProblemConstants, c: float, tau: int = 0,
                            cap: int | None = None) -> Schedule:
    """Fixed batch G^2 c^2 / (max(tau, 1)^2 L^2 D^2); tau = 0 gives the synchronous form."""
    _check_constants(constants)
    if c <= 0:
        raise ParameterError("c must be positive")
    if tau < 0:
        raise ParameterError("tau must be nonnegative")
    m = _clamp(constants.G ** 2 * c ** 2 /
               (max(tau, 1) ** 2 * constants.L ** 2 * constants.D ** 2), cap)
    return Schedule("constant", step_size, lambda k: m, tau=tau, batch_cap=cap,
                    params={"c": c, "tau": tau, "cap": cap, **_const_params(constants)})


def svrf_epoch_length(t: int) -> int:
    return 2 ** (t + 3) - 2


def svrf_asyn_schedule(tau: int = 1, cap: int | None = None) -> Schedule:
    """Inner batch 96 (k+1) / tau and epoch lengths N_t = 2^(t+3) - 2."""
    if tau < 1:
        raise ParameterError("tau must be at least 1")
    return Schedule("svrf_asyn", step_size, lambda k: _clamp(96 * (k + 1) / tau, cap),
                    tau=tau, batch_cap=cap, svrf_epochs=svrf_epoch_length,
                    params={"tau": tau, "cap": cap})


def fixed_schedule(batch: int, tau: float = 0, epochs: Callable[[int], int] | None = None
                   ) -> Schedule:
    """Constant user-chosen batch with the standard step size (tests and demos)."""
    if batch < 1:
        raise ParameterError("batch must be at least 1")
    return Schedule("fixed", step_size, lambda k: batch, tau=tau, batch_cap=batch,
                    svrf_epochs=epochs, params={"batch": batch, "tau": tau})


def _const_params(constants: ProblemConstants) -> dict:
    return {"L": constants.L, "G": constants.G, "D": constants.D}


def sfw_complexity(c: float, epsilon: float, constants: ProblemConstants,
                   ) -> tuple[float, float]:
    """Gradient evaluations and linear optimizations for constant-batch SFW."""
    return _table_row(1.0, c, epsilon, constants, asyn=False)


def complexity_estimate(schedule: Schedule, epsilon: float, constants: ProblemConstants,
                        ) -> tuple[float, float]:
    """Closed-form operation counts to reach ``epsilon`` with a constant batch.

    Accuracy is measured in units of L D^2, the scale of both the rate and
    the residual term. For delay bound tau the counts are
    ``c^2 / (tau eps - tau^2 / c)`` gradient evaluations (times the
    G^2 / (L^2 D^2) batch factor) and ``tau / (eps - tau / c)`` linear
    optimizations; tau = 0 returns the synchronous SFW row. Raises
    ``InfeasibleTargetError`` when ``epsilon`` is at or below the residual
    floor ``tau L D^2 / c``.
    """
    if "c" not in schedule.params:
        raise ParameterError("complexity estimates need a constant-batch schedule")
    tau = schedule.tau
    if tau == 0:
        return sfw_complexity(schedule.params["c"], epsilon, constants)
    return _table_row(float(tau), schedule.params["c"], epsilon, constants, asyn=True)


def _table_row(tau: float, c: float, epsilon: float, constants: ProblemConstants,
               asyn: bool) -> tuple[float, float]:
    _check_constants(constants)
    if c <= 0 or epsilon <= 0:
        raise ParameterError("c and epsilon must be positive")
    scale = constants.L * constants.D ** 2
    eps = epsilon / scale
    floor = tau / c
    if eps <= floor:
        raise InfeasibleTargetError(
            f"target {epsilon} is below the residual floor {floor * scale}")
    batch_factor = constants.G ** 2 / (constants.L ** 2 * constants.D ** 2)
    grads = batch_factor * c ** 2 / (tau * eps - tau ** 2 / c)
    linops = tau / (eps - floor)
    return grads, linops
