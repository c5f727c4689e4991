import json
import math

import numpy as np
import pytest

from asyncfw import harness
from asyncfw.algorithms import parse_trace_csv
from asyncfw.cli import main
from asyncfw.errors import ConfigError

SMALL = {
    "problem": {"d1": 10, "d2": 8, "rank": 2, "N": 200},
    "algorithm": {"kind": "sfw_asyn", "schedule": {"name": "fixed", "batch": 20, "tau": 3},
                  "T": 40, "workers": 3},
    "backend": {"p": 0.2},
}


def small(tmp_path, **over):
    cfg = harness._merge(SMALL, over)
    return harness.load_config(cfg, out=tmp_path)


def test_defaults_and_merge(tmp_path):
    cfg = harness.load_config({})
    assert cfg["target"] == 0.002 and cfg["problem"]["N"] == 900
    cfg = small(tmp_path)
    assert cfg["algorithm"]["schedule"] == {"name": "fixed", "batch": 20, "tau": 3}
    assert cfg["problem"]["d1"] == 10 and cfg["problem"]["noise_std"] == 0.0
    assert cfg["output"] == str(tmp_path)


@pytest.mark.parametrize("bad", [
    {"nope": 1},
    {"problem": {"d1": 0}},
    {"algorithm": {"kind": "sgd"}},
    {"backend": {"p": 1.5}},
    {"algorithm": {"schedule": {"name": "constant"}}},
    {"algorithm": {"schedule": {"name": "fixed"}}},
    {"problem": {"d1": 2, "d2": 2, "rank": 3}},
    {"algorithm": {"kind": "svrf_asyn", "schedule": {"name": "sfw"}}},
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        harness.load_config(bad)


def test_live_needs_distributed():
    with pytest.raises(ConfigError):
        harness.load_config({"algorithm": {"kind": "sfw"}}, live=True)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        harness.load_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        harness.load_config(tmp_path / "bad.json")


def test_run_writes_outputs_and_manifest(tmp_path):
    cfg = small(tmp_path)
    res = harness.cmd_run(cfg)
    assert len(res.trace) == 40
    text = (tmp_path / "trace.csv").read_text()
    assert text.startswith("# asyncfw-trace v1\n")
    assert len(parse_trace_csv(text)) == 40
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["config_sha256"] == harness.config_hash(cfg)
    assert set(m["outputs"]) == {"trace.csv", "delays.csv", "summary.json"}
    ok, problems = harness.replay_check(tmp_path / "manifest.json")
    assert ok, problems


def test_replay_check_detects_tampering(tmp_path):
    harness.cmd_run(small(tmp_path))
    path = tmp_path / "manifest.json"
    m = json.loads(path.read_text())
    m["outputs"]["trace.csv"] = "0" * 64
    path.write_text(json.dumps(m))
    ok, problems = harness.replay_check(path)
    assert not ok and problems[0].startswith("trace.csv")
    m["config"]["seed"] = 99
    path.write_text(json.dumps(m))
    assert harness.replay_check(path) == (False, ["config hash does not match the embedded config"])


def test_live_run(tmp_path):
    cfg = small(tmp_path)
    cfg["backend"]["kind"] = "live"
    res = harness.cmd_run(cfg)
    assert len(res.trace) == 40
    assert "wall_time" in (tmp_path / "trace.csv").read_text().splitlines()[1]
    with pytest.raises(ConfigError):
        harness.replay_check(tmp_path / "manifest.json")


def test_seed_override_changes_run(tmp_path):
    a = harness.execute(small(tmp_path))
    b = harness.execute(harness.load_config(harness._merge(SMALL, {}), seed=7))
    assert not np.array_equal(a.X, b.X)


def test_sweep_workers_and_failure(tmp_path):
    cfg = small(tmp_path, stop_at_target=True, target=0.1)
    res = harness.cmd_sweep(cfg, "workers", [1, 2, 4])
    assert res["failed"] == 0
    assert [r["value"] for r in res["rows"]] == [1.0, 2.0, 4.0]
    assert res["rows"][0]["speedup"] == 1.0
    assert (tmp_path / "trace_sfw_asyn_workers4.csv").exists()
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "# asyncfw-sweep v1" and len(lines) == 5
    ok, problems = harness.replay_check(tmp_path / "manifest.json")
    assert ok, problems


def test_sweep_records_failures(tmp_path):
    cfg = small(tmp_path)
    res = harness.cmd_sweep(cfg, "workers", [1, 2], algorithms=["sfw_asyn", "svrf_asyn"])
    # the svrf points get a fixed schedule without epoch lengths and fail
    assert res["failed"] == 2
    assert "failed" in (tmp_path / "sweep.csv").read_text()


def test_c_sweep_plateau(tmp_path):
    cfg = harness.load_config({
        "problem": {"d1": 10, "d2": 10, "rank": 2, "N": 2000},
        "algorithm": {"kind": "sfw", "schedule": {"name": "constant", "c": 5}, "T": 300},
    }, out=tmp_path)
    res = harness.cmd_sweep(cfg, "c", [5, 20])
    p = [r["plateau"] for r in res["rows"]]
    assert p[0] > p[1]
    with pytest.raises(ConfigError):
        harness.cmd_sweep(small(tmp_path), "c", [5])


def test_p_sweep_has_baselines(tmp_path):
    cfg = small(tmp_path, target=0.1, stop_at_target=True)
    res = harness.cmd_sweep(cfg, "p", [0.1, 0.8], algorithms=["sfw_asyn", "sfw_dist"])
    assert res["failed"] == 0
    assert all(math.isfinite(r["speedup"]) for r in res["rows"])


def test_speedup_command(tmp_path):
    cfg = small(tmp_path, target=0.1)
    cfg["sweep"]["values"] = [2, 4]
    res = harness.cmd_speedup(cfg)
    lines = (tmp_path / "speedup.csv").read_text().splitlines()
    assert lines[1] == "algorithm,workers,time_to_target,speedup,reachable"
    assert len(lines) == 2 + 2 * 3
    assert {r["algorithm"] for r in res["rows"]} == {"sfw_asyn", "sfw_dist"}


def test_generate_and_load(tmp_path):
    cfg = small(tmp_path)
    pdir = harness.cmd_generate(cfg)
    cfg2 = small(tmp_path / "b", problem={"path": str(pdir)})
    a, b = harness.execute(cfg), harness.execute(cfg2)
    assert np.array_equal(a.X, b.X)


def test_pnn_reference(tmp_path):
    cfg = harness.load_config({"problem": {"kind": "pnn", "d1": 6, "N": 100},
                               "reference": {"iters": 50},
                               "algorithm": {"kind": "sfw",
                                             "schedule": {"name": "fixed", "batch": 10},
                                             "T": 20}}, out=tmp_path)
    res = harness.execute(cfg)
    assert len(res.trace) == 20 and np.isfinite(res.f_ref)


def test_suites_pass():
    for name in ("gradients", "lmo", "replay", "variance"):
        rep = harness.VERIFY[name](seed=0)
        assert rep.passed, rep.lines()
    assert harness.verify_rates(cap=600).passed


def test_helpers():
    assert harness.plateau([5.0, 4, 3, 2, 1, 1, 1, 1, 1, 3]) == 2.0
    k = np.arange(1, 101)
    assert harness.loglog_slope(1.0 / k, 10, 100) == pytest.approx(-1.0)
    mean, expect, _ = harness.geometric_mean_check(0.5, draws=20000)
    assert mean == pytest.approx(expect, rel=0.05)


def test_cli_exit_codes(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(SMALL))
    assert main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "r"), "--quiet"]) == 0
    assert capsys.readouterr().out == ""
    assert main(["replay-check", "--out", str(tmp_path / "r")]) == 0
    (tmp_path / "bad.json").write_text(json.dumps({"bogus": 1}))
    assert main(["run", "--config", str(tmp_path / "bad.json")]) == 2
    assert main(["verify", "lmo", "--out", str(tmp_path / "v")]) == 0
    assert "PASS lmo" in (tmp_path / "v" / "verify.txt").read_text()
    with pytest.raises(SystemExit):
        main(["verify", "bogus"])
    assert main(["generate", "--config", str(cfg_path), "--out", str(tmp_path / "g")]) == 0
    assert (tmp_path / "g" / "problem" / "meta.json").exists()


def test_cli_verify_failure_exit(tmp_path, monkeypatch):
    failing = harness.SuiteReport("lmo")
    failing.add("forced", False)
    monkeypatch.setitem(harness.VERIFY, "lmo", lambda seed=0: failing)
    assert main(["verify", "lmo", "--out", str(tmp_path), "--quiet"]) == 1
