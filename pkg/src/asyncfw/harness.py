"""Experiment configuration, runs, sweeps, verification suites and manifests.

An experiment is one JSON file. Everything not given takes the defaults in
``DEFAULTS``; unknown keys are rejected. Each command writes its outputs
plus ``manifest.json`` (resolved config, its sha256, seeds, package
version and the sha256 of every output). Rerunning a simulator-backend
manifest reproduces the outputs byte for byte, which ``replay_check``
verifies.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import logging
import math
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .algorithms import (RunResult, gradient_inexactness_probe, parse_trace_csv,
                         replay_updates, run_fw, run_sfw, run_sfw_asyn,
                         run_sfw_asyn_naive, run_svrf_asyn)
from .algorithms.dispatch import DISTRIBUTED, KINDS, run_algorithm
from .errors import ConfigError
from .linalg import full_svd_reference, lmo_nuclear
from .objectives import (ProblemConstants, estimate_constants, generate_matrix_sensing,
                         generate_pnn, gradient_variance_probe, load_problem,
                         reference_optimum, save_problem)
from .schedules import (constant_batch_schedule, fixed_schedule, sfw_asyn_schedule,
                        sfw_schedule, svrf_asyn_schedule)
from .simulator import (GeometricComputeModel, SimulatedTransport, delay_histogram,
                        histogram_csv, sample_compute_time)

log = logging.getLogger(__name__)

AXES = ("workers", "p", "tau", "c")
SUITES = ("gradients", "lmo", "replay", "rates", "variance")
SCHEDULES = ("sfw", "sfw_asyn", "constant", "svrf_asyn", "fixed")

_num = {"type": "number"}
_int = {"type": "integer"}
_pos_int = {"type": "integer", "minimum": 1}
_tau = {"oneOf": [{"type": "integer", "minimum": 0}, {"enum": ["inf", None]}]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": _int,
        "output": {"type": ["string", "null"]},
        "target": {"type": "number", "exclusiveMinimum": 0},
        "stop_at_target": {"type": "boolean"},
        "problem": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["sensing", "pnn"]},
                "d1": _pos_int, "d2": _pos_int, "rank": _pos_int, "N": _pos_int,
                "noise_std": {"type": "number", "minimum": 0},
                "theta": {"type": "number", "exclusiveMinimum": 0},
                "seed": _int, "path": {"type": ["string", "null"]},
            },
        },
        "algorithm": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(KINDS)},
                "schedule": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "name": {"enum": list(SCHEDULES)},
                        "tau": {"type": "integer", "minimum": 0},
                        "cap": {"oneOf": [_pos_int, {"type": "null"}]},
                        "c": {"type": "number", "exclusiveMinimum": 0},
                        "batch": _pos_int,
                    },
                },
                "T": _pos_int, "epochs": _pos_int, "workers": _pos_int, "tau": _tau,
            },
        },
        "backend": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["simulator", "live"]},
                "p": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "C_grad": {"type": "number", "minimum": 1},
                "C_svd": {"type": "number", "minimum": 1},
                "inject_delays": {"type": "boolean"},
                "unit_seconds": {"type": "number", "minimum": 0},
                "wall_budget": {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                                          {"type": "null"}]},
            },
        },
        "constants": {"oneOf": [{"type": "null"}, {
            "type": "object", "additionalProperties": False, "required": ["L", "G", "D"],
            "properties": {"L": _num, "G": _num, "D": _num}}]},
        "reference": {
            "type": "object", "additionalProperties": False,
            "properties": {"method": {"enum": ["auto", "ground_truth", "apg", "fw"]},
                           "iters": _pos_int,
                           "value": {"type": ["number", "null"]}},
        },
        "sweep": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "axis": {"enum": list(AXES)},
                "values": {"type": "array", "minItems": 1, "items": _num},
                "algorithms": {"oneOf": [{"type": "null"}, {
                    "type": "array", "minItems": 1, "items": {"enum": list(KINDS)}}]},
                "jobs": _pos_int,
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "output": None,
    "target": 0.002,
    "stop_at_target": False,
    "problem": {"kind": "sensing", "d1": 30, "d2": 30, "rank": 3, "N": 900,
                "noise_std": 0.0, "theta": 1.0, "seed": 0, "path": None},
    "algorithm": {"kind": "sfw_asyn",
                  "schedule": {"name": "sfw_asyn", "tau": 32, "cap": None},
                  "T": 200, "epochs": 3, "workers": 4, "tau": None},
    "backend": {"kind": "simulator", "p": 1.0, "C_grad": 1.0, "C_svd": 10.0,
                "inject_delays": False, "unit_seconds": 1e-5, "wall_budget": None},
    "constants": None,
    "reference": {"method": "auto", "iters": 2000, "value": None},
    "sweep": {"axis": "workers", "values": [1, 2, 4, 8], "algorithms": None, "jobs": 1},
}


# -- configuration -------------------------------------------------------------------------

def _merge(base: dict, over: dict) -> dict:
    # a schedule is replaced whole: its parameters only make sense together
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k != "schedule" and isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(source, *, seed: int | None = None, out=None, live: bool = False) -> dict:
    """Validate a config (path or dict) and fill in defaults.

    Raises ``ConfigError`` for unreadable files, schema violations and
    inconsistent combinations.
    """
    if isinstance(source, dict):
        raw = source
    else:
        try:
            raw = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    if "manifest_version" in raw:
        raw = raw["config"]
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from exc
    cfg = _merge(DEFAULTS, raw)
    if seed is not None:
        cfg["seed"] = int(seed)
    if out is not None:
        cfg["output"] = str(out)
    if live:
        cfg["backend"]["kind"] = "live"
    _check_consistency(cfg)
    return cfg


def _check_consistency(cfg: dict) -> None:
    sched = cfg["algorithm"]["schedule"]
    if sched["name"] == "constant" and "c" not in sched:
        raise ConfigError("constant schedule needs 'c'")
    if sched["name"] == "fixed" and "batch" not in sched:
        raise ConfigError("fixed schedule needs 'batch'")
    kind = cfg["algorithm"]["kind"]
    if kind.startswith("svrf") and sched["name"] not in ("svrf_asyn", "fixed"):
        raise ConfigError(f"{kind} needs an svrf_asyn (or fixed) schedule")
    prob = cfg["problem"]
    if prob["path"] is None and prob["kind"] == "sensing" and \
            prob["rank"] > min(prob["d1"], prob["d2"]):
        raise ConfigError("rank exceeds min(d1, d2)")
    if cfg["backend"]["kind"] == "live" and kind not in DISTRIBUTED:
        raise ConfigError(f"the live backend runs distributed algorithms, not {kind}")


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(_canonical(cfg).encode()).hexdigest()


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# -- building blocks ----------------------------------------------------------------------

def build_problem(pc: dict):
    if pc.get("path"):
        return load_problem(pc["path"])
    if pc["kind"] == "sensing":
        return generate_matrix_sensing(pc["d1"], pc["d2"], pc["rank"], pc["N"],
                                       pc["noise_std"], pc["seed"], pc["theta"])
    return generate_pnn(pc["N"], pc["d1"], pc["theta"], pc["seed"])


def resolve_constants(cfg: dict, problem) -> ProblemConstants:
    c = cfg["constants"]
    if c is not None:
        return ProblemConstants(c["L"], c["G"], c["D"])
    return estimate_constants(problem, seed=cfg["problem"]["seed"])


def build_schedule(pc: dict, constants: ProblemConstants):
    name, cap, tau = pc["name"], pc.get("cap"), pc.get("tau", 0)
    if name == "sfw":
        return sfw_schedule(constants, cap)
    if name == "sfw_asyn":
        return sfw_asyn_schedule(constants, tau, cap)
    if name == "constant":
        return constant_batch_schedule(constants, pc["c"], tau, cap)
    if name == "svrf_asyn":
        return svrf_asyn_schedule(max(tau, 1), cap)
    return fixed_schedule(pc["batch"], tau)


def resolve_reference(cfg: dict, problem) -> float:
    ref = cfg["reference"]
    if ref["value"] is not None:
        return float(ref["value"])
    method = ref["method"]
    if method == "auto":
        if problem.kind == "sensing":
            method = "ground_truth" if problem.noise_std == 0 else "apg"
        else:
            method = "fw"
    if method == "ground_truth":
        return problem.reference_value()
    if method == "apg":
        return reference_optimum(problem, iters=ref["iters"])[1]
    res = run_fw(problem, ref["iters"], cfg["seed"])
    return float(min(res.objectives().min(), problem.loss(res.X0)))


def _tau(cfg: dict):
    t = cfg["algorithm"]["tau"]
    return math.inf if t == "inf" else t


def execute(cfg: dict, problem=None, constants=None, f_ref=None) -> RunResult:
    """Run the single experiment described by a resolved config."""
    problem = build_problem(cfg["problem"]) if problem is None else problem
    constants = resolve_constants(cfg, problem) if constants is None else constants
    f_ref = resolve_reference(cfg, problem) if f_ref is None else f_ref
    alg, back = cfg["algorithm"], cfg["backend"]
    schedule = build_schedule(alg["schedule"], constants)
    horizon = alg["epochs"] if alg["kind"].startswith("svrf") else alg["T"]
    target = cfg["target"] if cfg["stop_at_target"] else None
    if back["kind"] == "live":
        from .executor import ThreadTransport
        model = GeometricComputeModel(back["p"], back["C_grad"], back["C_svd"])
        transport = ThreadTransport(model if back["inject_delays"] else None, cfg["seed"],
                                    back["unit_seconds"], back["wall_budget"])
    else:
        model = GeometricComputeModel(back["p"], back["C_grad"], back["C_svd"])
        transport = SimulatedTransport(model, cfg["seed"])
    return run_algorithm(alg["kind"], problem, schedule, horizon, alg["workers"], transport,
                         seed=cfg["seed"], tau=_tau(cfg), f_ref=f_ref, target=target)


def _clock(cfg: dict) -> str:
    return "accepted_time" if cfg["backend"]["kind"] == "live" else "simulated_time"


def plateau(values, fraction: float = 0.2) -> float:
    """Mean of the final ``fraction`` of a trace."""
    values = np.asarray(values, dtype=float)
    n = max(1, int(round(fraction * values.size)))
    return float(values[-n:].mean())


def loglog_slope(values, k_min: int, k_max: int) -> float:
    """Least-squares slope of log(values[k-1]) against log(k) over k_min..k_max."""
    k = np.arange(k_min, k_max + 1)
    return float(np.polyfit(np.log(k), np.log(np.asarray(values)[k - 1]), 1)[0])


def error_at_budget(result: RunResult, samples: float) -> float:
    """Best relative error among updates recorded within ``samples`` gradient evaluations."""
    best = math.inf
    for rec in result.trace:
        if rec.grad_evals_total > samples:
            break
        best = min(best, rec.relative_error)
    return best


# -- outputs and manifests ---------------------------------------------------------------------

def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write(out: Path, name: str, text: str, files: dict) -> None:
    data = text.encode()
    (out / name).write_bytes(data)
    files[name] = _sha(data)


def write_manifest(out: Path, command: str, cfg: dict, files: dict, extra=None) -> Path:
    manifest = {"manifest_version": 1, "command": command, "version": __version__,
                "config_sha256": config_hash(cfg), "config": cfg,
                "seeds": {"run": cfg["seed"], "problem": cfg["problem"]["seed"]},
                "outputs": dict(sorted(files.items()))}
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["output"] or "asyncfw-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


# -- commands -------------------------------------------------------------------------------

def cmd_generate(cfg: dict) -> Path:
    out = _outdir(cfg)
    problem = build_problem(cfg["problem"])
    pdir = save_problem(problem, out / "problem")
    files = {str(p.relative_to(out)): _sha(p.read_bytes()) for p in sorted(pdir.iterdir())}
    write_manifest(out, "generate", cfg, files)
    return pdir


def cmd_run(cfg: dict) -> RunResult:
    out = _outdir(cfg)
    res = execute(cfg)
    files = {}
    _write(out, "trace.csv", res.to_csv(), files)
    _write(out, "delays.csv", histogram_csv(delay_histogram(res.delays)), files)
    summary = res.summary()
    if cfg["backend"]["kind"] == "live":
        summary["elapsed_seconds"] = res.elapsed
        (out / "summary.json").write_text(_summary_json(summary))
    else:
        _write(out, "summary.json", _summary_json(summary), files)
    write_manifest(out, "run", cfg, files)
    return res


def _point_config(cfg: dict, axis: str, value, kind: str) -> dict:
    c = copy.deepcopy(cfg)
    alg = c["algorithm"]
    alg["kind"] = kind
    if axis == "workers":
        alg["workers"] = int(value)
    elif axis == "p":
        c["backend"]["p"] = float(value)
    elif axis == "tau":
        alg["schedule"]["tau"] = int(value)
        alg["tau"] = int(value)
    elif axis == "c":
        if alg["schedule"]["name"] != "constant":
            raise ConfigError("a c sweep needs the constant schedule")
        alg["schedule"]["c"] = float(value)
    return c


def run_point(cfg: dict) -> dict:
    """One isolated sweep point; never raises, failures come back as status."""
    try:
        res = execute(cfg, f_ref=cfg["reference"]["value"])
    except Exception as exc:  # recorded, the sweep goes on
        return {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    return {"status": "ok", "csv": res.to_csv(), "summary": res.summary(),
            "time_to_target": res.time_to_target(cfg["target"], _clock(cfg)),
            "plateau": plateau(res.objectives()) if res.trace else math.nan}


def _fmt(x) -> str:
    if isinstance(x, float):
        return "" if not math.isfinite(x) else repr(x)
    return str(x)


def _value_label(v) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def cmd_sweep(cfg: dict, axis: str | None = None, values=None, algorithms=None,
              with_baseline: bool | None = None) -> dict:
    """Run every (algorithm, axis value) point; write traces plus aggregate CSVs.

    Constants and F_ref are resolved once and frozen into each point's
    config, so points are independent and may run in separate processes.
    For the ``workers`` axis (and the ``p`` axis, via extra one-worker
    baselines) a speedup column is filled in.
    """
    sw = cfg["sweep"]
    axis = axis or sw["axis"]
    values = list(values if values is not None else sw["values"])
    kinds = list(algorithms or sw["algorithms"] or [cfg["algorithm"]["kind"]])
    out = _outdir(cfg)
    base = copy.deepcopy(cfg)
    problem = build_problem(base["problem"])
    consts = resolve_constants(base, problem)
    base["constants"] = {"L": consts.L, "G": consts.G, "D": consts.D}
    base["reference"]["value"] = resolve_reference(base, problem)
    if with_baseline is None:
        with_baseline = axis == "p"

    jobs = []
    for kind in kinds:
        for v in values:
            pc = _point_config(base, axis, v, kind)
            jobs.append((kind, v, "point", pc))
            if with_baseline and pc["algorithm"]["workers"] != 1:
                bc = copy.deepcopy(pc)
                bc["algorithm"]["workers"] = 1
                jobs.append((kind, v, "baseline", bc))
    if sw["jobs"] > 1:
        with ProcessPoolExecutor(sw["jobs"]) as pool:
            results = list(pool.map(run_point, [j[3] for j in jobs]))
    else:
        results = [run_point(j[3]) for j in jobs]

    files = {}
    table = {}
    for (kind, v, role, _), r in zip(jobs, results):
        table[(kind, v, role)] = r
        if role == "point" and r["status"] == "ok":
            _write(out, f"trace_{kind}_{axis}{_value_label(v)}.csv", r["csv"], files)

    buf = io.StringIO()
    buf.write("# asyncfw-sweep v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "axis", "value", "status", "iterations", "final_relative_error",
                "plateau_objective", "time_to_target", "speedup", "abandoned",
                "grad_evals", "bytes_in", "bytes_out", "error"])
    failed = 0
    rows = []
    for kind in kinds:
        one = None
        if axis == "workers":
            ones = [table[(kind, v, "point")] for v in values if int(v) == 1]
            one = ones[0]["time_to_target"] if ones and ones[0]["status"] == "ok" else None
        for v in values:
            r = table[(kind, v, "point")]
            if r["status"] != "ok":
                failed += 1
                w.writerow([kind, axis, _fmt(float(v)), "failed"] + [""] * 9 + [r["error"]])
                continue
            t = r["time_to_target"]
            if (kind, v, "baseline") in table:
                b = table[(kind, v, "baseline")]
                t1 = b["time_to_target"] if b["status"] == "ok" else None
            elif axis == "p":
                t1 = t  # the point itself runs on one worker
            else:
                t1 = one
            s = t1 / t if t1 is not None and math.isfinite(t1) and math.isfinite(t) else math.nan
            sm = r["summary"]
            row = {"algorithm": kind, "value": float(v), "time_to_target": t,
                   "speedup": s, "plateau": r["plateau"], "summary": sm}
            rows.append(row)
            w.writerow([kind, axis, _fmt(float(v)), "ok", sm["iterations"],
                        _fmt(sm["final_relative_error"]), _fmt(r["plateau"]), _fmt(t),
                        _fmt(s), sm["abandoned"], sm["grad_evals"], sm["bytes_in"],
                        sm["bytes_out"], ""])
    _write(out, "sweep.csv", buf.getvalue(), files)
    if failed:
        log.warning("%d sweep point(s) failed; see sweep.csv", failed)
    write_manifest(out, "sweep", cfg, files,
                   {"sweep_effective": {"axis": axis, "values": values, "algorithms": kinds}})
    return {"rows": rows, "failed": failed, "files": files}


def cmd_speedup(cfg: dict) -> dict:
    """Worker-count sweep stopped at the target error, SFW-asyn vs SFW-dist by default."""
    c = copy.deepcopy(cfg)
    c["stop_at_target"] = True
    kinds = cfg["sweep"]["algorithms"] or ["sfw_asyn", "sfw_dist"]
    values = cfg["sweep"]["values"] if cfg["sweep"]["axis"] == "workers" else [1, 2, 4, 8]
    if 1 not in [int(v) for v in values]:
        values = [1] + list(values)
    res = cmd_sweep(c, "workers", values, kinds)
    out = _outdir(cfg)
    buf = io.StringIO()
    buf.write("# asyncfw-speedup v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "workers", "time_to_target", "speedup", "reachable"])
    for r in res["rows"]:
        ok = math.isfinite(r["time_to_target"])
        w.writerow([r["algorithm"], int(r["value"]), _fmt(r["time_to_target"]),
                    _fmt(r["speedup"]), int(ok)])
    files = dict(res["files"])
    _write(out, "speedup.csv", buf.getvalue(), files)
    write_manifest(out, "speedup", cfg, files)
    res["files"] = files
    return res


def replay_check(manifest_path) -> tuple[bool, list[str]]:
    """Rerun a manifest into a scratch directory and compare output hashes."""
    try:
        manifest = json.loads(Path(manifest_path).read_text())
        cfg = manifest["config"]
        command = manifest["command"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot read manifest {manifest_path}: {exc}") from exc
    if cfg["backend"]["kind"] == "live":
        raise ConfigError("live runs are not reproducible; only simulator manifests replay")
    if config_hash(cfg) != manifest["config_sha256"]:
        return False, ["config hash does not match the embedded config"]
    with tempfile.TemporaryDirectory() as tmp:
        c = copy.deepcopy(cfg)
        c["output"] = tmp
        if command == "verify":
            cmd_verify(c, manifest.get("suites", SUITES))
        elif command == "sweep" and "sweep_effective" in manifest:
            eff = manifest["sweep_effective"]
            cmd_sweep(c, eff["axis"], eff["values"], eff["algorithms"])
        else:
            COMMANDS[command](c)
        fresh = json.loads((Path(tmp) / "manifest.json").read_text())["outputs"]
    problems = []
    for name, digest in manifest["outputs"].items():
        if fresh.get(name) != digest:
            problems.append(f"{name}: {digest[:12]} != {str(fresh.get(name))[:12]}")
    return not problems, problems


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep,
            "speedup": cmd_speedup}


# -- verification suites ----------------------------------------------------------------------

@dataclass
class SuiteReport:
    name: str
    checks: list = field(default_factory=list)

    def add(self, label: str, passed: bool, detail: str = "") -> None:
        self.checks.append((label, bool(passed), detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if ok else 'FAIL'} {self.name}: {label} {detail}".rstrip()
                for label, ok, detail in self.checks]


def _fd_check(problem, X, rng, h=1e-6, trials=5):
    worst = 0.0
    g = problem.gradient(X)
    for _ in range(trials):
        D = rng.standard_normal(X.shape)
        D /= np.linalg.norm(D)
        fd = (problem.loss(X + h * D) - problem.loss(X - h * D)) / (2 * h)
        an = float(np.vdot(g, D))
        worst = max(worst, abs(fd - an) / max(abs(an), abs(fd), 1e-12))
    return worst


def verify_gradients(seed: int = 0, tol: float = 1e-4) -> SuiteReport:
    """Central finite differences of both objectives along random directions."""
    rep = SuiteReport("gradients")
    rng = np.random.default_rng([seed, 1])
    from .linalg import random_feasible
    sensing = generate_matrix_sensing(8, 6, 2, 200, 0.1, seed)
    pnn = generate_pnn(200, 10, seed=seed)
    for prob in (sensing, pnn):
        worst = max(_fd_check(prob, random_feasible(prob.shape, prob.theta, rng), rng)
                    for _ in range(5))
        rep.add(f"{prob.kind} full gradient", worst < tol, f"max rel err {worst:.2e}")
        X = random_feasible(prob.shape, prob.theta, rng)
        idx = rng.integers(0, prob.n_samples, 16)
        stacked = prob.sample_gradients(X, idx).mean(axis=0)
        err = float(np.linalg.norm(stacked - prob.gradient(X, idx)))
        rep.add(f"{prob.kind} minibatch = mean of per-sample", err < 1e-10, f"{err:.1e}")
    return rep


def verify_lmo(seed: int = 0, count: int = 200) -> SuiteReport:
    """Power-iteration LMO against a full SVD on random matrices."""
    rep = SuiteReport("lmo")
    rng = np.random.default_rng([seed, 2])
    worst = 0.0
    for _ in range(count):
        d1, d2 = rng.integers(1, 31, 2)
        G = rng.standard_normal((d1, d2))
        theta = float(rng.uniform(0.1, 10))
        S = lmo_nuclear(G, theta, seed=int(rng.integers(2 ** 31))).direction()
        s, _, _ = full_svd_reference(G)
        gap = float(np.vdot(G, S)) + theta * s[0]
        worst = max(worst, gap / (theta * np.linalg.norm(G)))
    rep.add(f"optimality gap over {count} matrices", worst < 1e-6,
            f"max gap/(theta*||G||) {worst:.2e}")
    return rep


def verify_replay(seed: int = 0) -> SuiteReport:
    """Naive vs rank-one SFW-asyn and SVRF-asyn, plus log replay, on one interleaving."""
    rep = SuiteReport("replay")
    prob = generate_matrix_sensing(10, 10, 2, 500, seed=seed)
    consts = estimate_constants(prob, seed=seed)
    sched = sfw_asyn_schedule(consts, tau=4, cap=500)
    model = GeometricComputeModel(0.1)
    a = run_sfw_asyn_naive(prob, sched, 300, 4, SimulatedTransport(model, seed), seed=seed)
    b = run_sfw_asyn(prob, sched, 300, 4, SimulatedTransport(model, seed), seed=seed)
    d = float(np.linalg.norm(a.X - b.X))
    rep.add("SFW-asyn naive vs efficient", d < 1e-9, f"||diff||_F {d:.1e}")
    r = float(np.linalg.norm(replay_updates(b.X0, b.log, sched) - b.X))
    rep.add("SFW-asyn log replay", r < 1e-10, f"{r:.1e}")
    sv = svrf_asyn_schedule(4, cap=500)
    a = run_svrf_asyn(prob, sv, 2, 4, SimulatedTransport(model, seed), seed=seed,
                      efficient=False)
    b = run_svrf_asyn(prob, sv, 2, 4, SimulatedTransport(model, seed), seed=seed)
    d = float(np.linalg.norm(a.X - b.X))
    rep.add("SVRF-asyn naive vs efficient", d < 1e-9, f"||diff||_F {d:.1e}")
    return rep


def verify_rates(seed: int = 0, cap: int = 200, T: int = 400) -> SuiteReport:
    """Log-log slope of best-so-far suboptimality of SFW on noiseless 10x10 sensing."""
    rep = SuiteReport("rates")
    prob = generate_matrix_sensing(10, 10, 2, 900, seed=seed)
    consts = estimate_constants(prob, seed=seed)
    res = run_sfw(prob, sfw_schedule(consts, cap), T, seed)
    h = np.minimum.accumulate(res.objectives() - prob.reference_value())
    slope = loglog_slope(h, 20, T)
    rep.add(f"slope over k in [20, {T}] with batch cap {cap}", -1.4 <= slope <= -0.6,
            f"slope {slope:.3f}, window [-1.4, -0.6]")
    return rep


def variance_checkpoints(problem, radii=(0.5, 0.25, 0.125), seed: int = 0,
                         trials: int = 400, batch: int = 1):
    """Minibatch gradient variance at X* + r * Delta for a fixed unit direction Delta."""
    rng = np.random.default_rng([seed, 3])
    delta = rng.standard_normal(problem.shape)
    delta /= np.linalg.norm(delta)
    return [gradient_variance_probe(problem, problem.ground_truth + r * delta, trials,
                                    batch, seed) for r in radii]


def verify_variance(seed: int = 0) -> SuiteReport:
    rep = SuiteReport("variance")
    prob = generate_matrix_sensing(10, 10, 2, 900, seed=seed)
    v = variance_checkpoints(prob, seed=seed)
    ok = all(b <= 1.1 * a for a, b in zip(v, v[1:]))
    rep.add("variance nonincreasing toward X*", ok,
            "at ||X-X*|| = 0.5, 0.25, 0.125: " + ", ".join(f"{x:.3g}" for x in v))
    return rep


VERIFY = {"gradients": verify_gradients, "lmo": verify_lmo, "replay": verify_replay,
          "rates": verify_rates, "variance": verify_variance}


def cmd_verify(cfg: dict, suites=SUITES) -> list[SuiteReport]:
    out = _outdir(cfg)
    reports = [VERIFY[s](seed=cfg["seed"]) for s in suites]
    files = {}
    text = "\n".join(line for r in reports for line in r.lines()) + "\n"
    _write(out, "verify.txt", text, files)
    write_manifest(out, "verify", cfg, files, {"suites": list(suites)})
    return reports


COMMANDS["verify"] = cmd_verify


# -- helpers used by acceptance-style studies ----------------------------------------------------

def inexactness_coverage(result, problem, schedule, constants, factor: float = 2.0) -> float:
    """Fraction of accepted updates whose gradient error lies within factor x bound."""
    pr = gradient_inexactness_probe(result, problem, schedule, constants)
    return float(np.mean(pr["probe"] <= factor * pr["bound"]))


def geometric_mean_check(p: float, C: float = 1.0, draws: int = 100_000, seed: int = 0):
    """Empirical mean of the compute-time sampler against C / p."""
    model = GeometricComputeModel(p)
    rng = np.random.default_rng(seed)
    samples = np.array([sample_compute_time(model, C, rng) for _ in range(draws)])
    return float(samples.mean()), C / p, samples
