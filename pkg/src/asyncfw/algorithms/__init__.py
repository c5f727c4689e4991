from .core import (TRACE_COLUMNS, RankOneUpdate, Recorder, RunResult, TraceRecord,
                   UpdateLog, apply_update, check_feasible, fw_step, initial_point,
                   parse_trace_csv, read_trace_csv, replay_updates, save_log, load_log, trace_to_csv, write_trace_csv)
from .distributed import (STOP, AsyncMaster, AsyncWorker, Broadcast, CatchUp,
                          SnapshotSignal, Stop, Submit, SyncMaster, SyncWorker,
                          run_sfw_asyn, run_sfw_asyn_naive, run_sfw_dist, run_svrf_asyn)
from .dispatch import KINDS, run_algorithm
from .probes import gradient_inexactness_probe
from .sequential import run_fw, run_sfw, run_svrf

__all__ = [
    "TRACE_COLUMNS", "RankOneUpdate", "Recorder", "RunResult", "TraceRecord", "UpdateLog",
    "apply_update", "check_feasible", "fw_step", "initial_point", "parse_trace_csv", "read_trace_csv",
    "replay_updates", "save_log", "load_log", "trace_to_csv", "write_trace_csv", "STOP", "AsyncMaster",
    "AsyncWorker", "Broadcast", "CatchUp", "SnapshotSignal", "Stop", "Submit",
    "SyncMaster", "SyncWorker", "run_sfw_asyn", "run_sfw_asyn_naive", "run_sfw_dist",
    "run_svrf_asyn", "KINDS", "run_algorithm", "gradient_inexactness_probe", "run_fw", "run_sfw", "run_svrf",
]
