import json
from pathlib import Path

import pytest

from beacons.cli import main
from beacons.config import ConfigError, load_experiment, parse_experiment
from beacons.sim import MB, Trace

ROOT = Path(__file__).resolve().parent.parent
EXP = ROOT / "experiments"

SMALL = """
[experiment]
name = "small"
schedulers = ["bes", "cfs"]
seeds = [0, 1]

[machine]
cores = 2
llc_mb = 8

[scheduler.bes]
overlap_fraction = 0.05

[[workload.groups]]
name = "r"
count = 3
phases = [
  { kind = "ncp", duration = [100, 300] },
  { kind = "reuse", duration = 2000, footprint_mb = 6 },
]
"""

PROG = "func main(n){ L: for i in 0..n { load A[i]; store B[2*i]; } }\n"


def test_parse_experiment(tmp_path):
    (tmp_path / "x.toml").write_text(SMALL)
    exp = load_experiment(tmp_path / "x.toml")
    assert exp.machine.cores == 2 and exp.machine.llc_bytes == 8 * MB
    assert exp.seeds == [0, 1]
    assert exp.scheduler("bes").overlap_fraction == 0.05
    assert len(exp.processes(0)) == 3
    assert exp.processes(0) == exp.processes(0)


def test_bad_config():
    with pytest.raises(ConfigError):
        parse_experiment({"experiment": {"name": "x", "schedulers": ["bes"]}})
    with pytest.raises((ConfigError, ValueError)):
        parse_experiment({"experiment": {"name": "x", "schedulers": ["nope"]},
                          "workload": {"groups": [{"count": 1, "phases": [{"kind": "ncp"}]}]}})


def test_cli_analyze(tmp_path, capsys):
    src = tmp_path / "p.bir"
    src.write_text(PROG)
    assert main(["analyze", str(src)]) == 0
    (line,) = capsys.readouterr().out.splitlines()
    d = json.loads(line)
    assert d["class"] == "NBNE" and d["reuse"] == "streaming"
    assert set(d["footprint"]) == {"A", "B"}


def test_cli_train_instrument(tmp_path, capsys):
    src = tmp_path / "p.bir"
    src.write_text(PROG)
    models = tmp_path / "m.json"
    inputs = tmp_path / "in.json"
    inputs.write_text(json.dumps([{"n": k} for k in (5000, 6000, 7000)]))
    assert main(["profile", str(src), "--inputs", str(inputs), "-o", str(tmp_path / "prof.csv")]) == 0
    assert main(["train", str(src), "--profile", str(tmp_path / "prof.csv"), "-o", str(models)]) == 0
    out = tmp_path / "p.inst.bir"
    table = tmp_path / "t.json"
    assert main(["instrument", str(src), "--models", str(models), "-o", str(out),
                 "--table", str(table)]) == 0
    assert "beacon b0;" in out.read_text()
    assert json.loads(table.read_text())["schema_version"] == 1


def test_cli_simulate_and_report(tmp_path, capsys):
    cfg = tmp_path / "x.toml"
    cfg.write_text(SMALL)
    out = tmp_path / "out"
    assert main(["simulate", str(cfg), "-o", str(out), "--check"]) == 0
    printed = capsys.readouterr().out
    assert "checks=ok" in printed
    files = sorted(p.name for p in out.iterdir())
    assert files == ["bes-seed0.csv", "bes-seed0.journal", "bes-seed1.csv", "bes-seed1.journal",
                     "cfs-seed0.csv", "cfs-seed0.journal", "cfs-seed1.csv", "cfs-seed1.journal"]
    a, b = str(out / "cfs-seed0.csv"), str(out / "bes-seed0.csv")
    rep = tmp_path / "rep.csv"
    hist = tmp_path / "hist.csv"
    assert main(["report", a, b, "--baseline", a, "-o", str(rep), "--histogram", str(hist),
                 "--gnuplot", str(tmp_path / "h.gp")]) == 0
    rows = [l.split(",") for l in rep.read_text().splitlines() if not l.startswith("#")]
    assert rows[1][1] == "cfs-seed0" and rows[1][-1] == "1"
    assert Trace.read_journal(out / "bes-seed0.journal").to_csv_text() == \
        Trace.read_csv(b).to_csv_text()


def test_cli_report_refuses_mismatch(tmp_path, capsys):
    cfg = tmp_path / "x.toml"
    cfg.write_text(SMALL)
    out = tmp_path / "out"
    main(["simulate", str(cfg), "-o", str(out)])
    code = main(["report", str(out / "cfs-seed0.csv"), str(out / "cfs-seed1.csv"),
                 "--baseline", "cfs-seed0"])
    assert code == 2
    assert "workload" in capsys.readouterr().err


def test_cli_errors(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "missing.bir")]) == 2
    bad = tmp_path / "bad.bir"
    bad.write_text("func f( {")
    assert main(["analyze", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_program_experiment_builds(tmp_path):
    exp = load_experiment(EXP / "program.toml")
    procs = exp.processes(0)
    assert len(procs) == 8
    assert any(ph.is_loop for p in procs for ph in p.phases)
