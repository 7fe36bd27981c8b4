import json
import subprocess
import sys

import pytest

from egedyn import cli
from egedyn.reports import verdict_report

FAST_IDENTITIES = ["--set", "subcommand-defaults.identities.matrices=3",
                   "--set", "subcommand-defaults.identities.sizes=[3,4]",
                   "--set", "subcommand-defaults.identities.bridge_sizes=[2,3]"]


def run(args, **kw):
    return subprocess.run([sys.executable, "-m", "egedyn", *args], capture_output=True,
                          text=True, **kw)


def test_identities_reproducible(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        res = run(["identities", "--seed", "7", "--out", str(out), "--quiet", *FAST_IDENTITIES])
        assert res.returncode == 0, res.stderr
        assert res.stdout.startswith("PASS")
        outs.append(out)
    a = (outs[0] / "report_identities.json").read_bytes()
    assert a == (outs[1] / "report_identities.json").read_bytes()
    man = [json.loads((o / "manifest.json").read_text()) for o in outs]
    assert man[0]["config_hash"] == man[1]["config_hash"]
    assert man[0]["config_hash"] == cli.config_hash(man[0]["config"])
    assert man[0]["exit_code"] == 0 and man[0]["seed"] == 7


def test_report_json_on_stdout(tmp_path):
    res = run(["identities", "--out", str(tmp_path), *FAST_IDENTITIES])
    body, summary = res.stdout.rsplit("]\n", 1)
    doc = json.loads(body + "]")
    assert all(r["pass"] for r in doc)
    assert summary.startswith("PASS")


def test_simulate_writes_trajectories(tmp_path):
    res = run(["simulate", "--out", str(tmp_path), "--set", "sim.replicas=3",
               "--set", "sim.steps=10"])
    assert res.returncode == 0, res.stderr
    files = sorted(tmp_path.glob("trajectory_*.csv"))
    assert [f.name for f in files] == [f"trajectory_{r:04d}.csv" for r in range(3)]
    assert len(files[0].read_text().splitlines()) == 12


@pytest.mark.parametrize("args", [
    ["--set", "sim.tau=2"],
    ["--set", "sim.bogus=1"],
    ["--set", "nosuch.key=1"],
    ["--set", "sim.N"],
    ["--threads", "0"],
    ["--threads", "many"],
    ["--seed", "-3"],
])
def test_configuration_errors(tmp_path, args):
    res = run(["verify", "--out", str(tmp_path), *args])
    assert res.returncode == 2
    assert "configuration error" in res.stderr


def test_malformed_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["verify", "--config", str(bad), "--out", str(tmp_path)]).returncode == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"sim": {"N": 3, "spin": 1}}))
    assert run(["verify", "--config", str(unknown), "--out", str(tmp_path)]).returncode == 2


def test_bad_thread_env(tmp_path):
    import os
    env = dict(os.environ, EGEDYN_THREADS="zero")
    assert run(["simulate", "--out", str(tmp_path)], env=env).returncode == 2


def test_config_file_merging(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"sim": {"N": 4, "initial": {"kind": "zero"}},
                             "stats": {"samples": 3}}))
    cfg = cli.resolve_config(p, ["sim.tau=0.25"], seed=9)
    assert cfg["sim"]["N"] == 4 and cfg["sim"]["tau"] == 0.25
    assert cfg["sim"]["initial"] == {"kind": "zero"}
    assert cfg["sim"]["seed"] == 9 and cfg["stats"]["seed"] == 9
    assert cfg["stats"]["N"] == 200


def test_degenerate_start_exits_3(tmp_path):
    res = run(["simulate", "--out", str(tmp_path), "--set", "sim.N=2",
               "--set", 'sim.initial={"kind":"diagonal","values":[1.0,1.000000000001]}'])
    assert res.returncode == 3
    assert "degenerate" in res.stderr and "J =" in res.stderr


def test_failing_report_exits_1(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli, "_run_suite",
                        lambda *a: ([verdict_report("forced", 0, 1, False)], []))
    code = cli.main(["verify", "--out", str(tmp_path), "--quiet"])
    assert code == 1
    assert capsys.readouterr().out.startswith("FAIL: 1/1")
    assert json.loads((tmp_path / "manifest.json").read_text())["exit_code"] == 1


def test_verify_hermitian_defaults(tmp_path):
    res = run(["verify", "--out", str(tmp_path), "--quiet", "--set", "sim.tau=1",
               "--set", "subcommand-defaults.verify.draws=5000",
               "--set", "subcommand-defaults.verify.vandermonde_replicas=400"])
    assert res.returncode == 0, res.stdout[-500:]
    doc = json.loads((tmp_path / "report_verify.json").read_text())
    assert doc and all(r["pass"] for r in doc)
