import csv
import io
import json
import subprocess
import sys
import time

import pytest

from gridflood.cli import main


def cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_simulate_trivial_and_deterministic(capsys):
    code, out, _ = cli(capsys, "simulate", "--d", "1", "--n", "0", "--m", "5", "--rule", "standard", "--seed", "1")
    assert code == 0 and out.startswith("T=1 ")
    assert cli(capsys, "simulate", "--d", "1", "--n", "0", "--m", "1", "--seed", "1")[1].startswith("T=0 ")
    strip = lambda s: s.rsplit(" wall_ms", 1)[0]
    a = cli(capsys, "simulate", "--d", "2", "--n", "4", "--m", "9", "--seed", "3")[1]
    b = cli(capsys, "simulate", "--d", "2", "--n", "4", "--m", "9", "--seed", "3")[1]
    assert strip(a) == strip(b)


def test_simulate_timeout(capsys):
    code, out, _ = cli(capsys, "simulate", "--d", "3", "--n", "9", "--m", "2", "--seed", "1", "--max-steps", "2")
    assert code == 0 and out.startswith("T=TIMEOUT steps=2")


def test_simulate_flag_errors(capsys):
    code, _, err = cli(capsys, "simulate", "--d", "1", "--n", "3", "--m", "4", "--gamma", "2", "--seed", "1")
    assert code != 0 and "--gamma" in err
    with pytest.raises(SystemExit) as e:
        main(["simulate", "--d", "1", "--n", "3", "--m", "4"])  # no seed
    assert e.value.code != 0
    with pytest.raises(SystemExit):
        main(["simulate", "--d", "1", "--n", "3", "--m", "4", "--seed", "1", "--colour", "red"])


def test_probe_ops(capsys):
    out = rows(cli(capsys, "probe", "--op", "passage", "--r", "1", "--t", "1")[1])
    assert float(out[0]["estimate"]) == 0.5
    out = rows(cli(capsys, "probe", "--op", "p", "--d", "3", "--t", "2", "--x", "0,0,0")[1])
    assert float(out[0]["estimate"]) == pytest.approx(1 / 6)
    out = rows(cli(capsys, "probe", "--op", "Q", "--t", "8", "--x", "2,0,0", "--trials", "5000", "--seed", "1")[1])
    assert float(out[0]["ci_low"]) <= float(out[0]["estimate"]) <= float(out[0]["ci_high"]) and out[0]["z"]
    out = rows(cli(capsys, "probe", "--op", "mixing", "--d", "1", "--n", "4", "--eps", "0.0625")[1])
    assert out[0]["estimate"] == "38"
    code, out, _ = cli(capsys, "probe", "--op", "boundary", "--n", "160", "--a", "0,0,0", "--b", "4,0,0",
                       "--trials", "500", "--seed", "2")
    assert code == 0 and rows(out)[0]["op"] == "boundary"
    code, out, _ = cli(capsys, "probe", "--op", "multi", "--j", "2", "--r", "2", "--trials", "500", "--seed", "2")
    assert code == 0


def test_probe_errors(capsys):
    code, _, err = cli(capsys, "probe", "--op", "Q", "--t", "4", "--x", "1,0,0")
    assert code != 0 and "parity" in err
    code, _, err = cli(capsys, "probe", "--op", "q", "--t", "4", "--x", "1,0,0", "--trials", "10")
    assert code != 0 and "--seed" in err
    code, _, err = cli(capsys, "probe", "--op", "boundary", "--n", "64", "--a", "0,0,0", "--b", "4,0,0",
                       "--trials", "10", "--seed", "1")
    assert code != 0 and "boundary" in err


def test_probe_human_table(capsys):
    out = cli(capsys, "probe", "--op", "passage", "--r", "2", "--t", "4", "--human")[1]
    assert out.splitlines()[0].split()[:3] == ["op", "params", "estimate"]


def test_sweep_empty_and_small(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"cells": [], "trials": 1, "master_seed": 0}))
    assert cli(capsys, "sweep", "--plan", str(empty), "--out", str(tmp_path / "e.csv"))[0] == 0
    assert (tmp_path / "e.csv").read_text() == "cell_id,d,n,m,rule,gamma,seed,T,timed_out,wall_ms\n"
    plan = tmp_path / "p.json"
    plan.write_text(json.dumps({"cells": [{"d": 1, "n": 4, "m": 3}], "trials": 2, "master_seed": 5}))
    out = tmp_path / "p.csv"
    assert cli(capsys, "sweep", "--plan", str(plan), "--out", str(out), "--figure")[0] == 0
    assert len(rows(out.read_text())) == 2
    assert out.with_suffix(".png").stat().st_size > 0


def test_sweep_malformed_plan(tmp_path, capsys):
    plan = tmp_path / "bad.json"
    plan.write_text(json.dumps({"cells": [{"d": 1, "n": 4}], "trials": 2, "master_seed": 5}))
    code, _, err = cli(capsys, "sweep", "--plan", str(plan), "--out", str(tmp_path / "x.csv"))
    assert code != 0 and "cells[0].m" in err


def test_sweep_kill_and_resume(tmp_path):
    plan = tmp_path / "p.json"
    plan.write_text(json.dumps({"cells": [{"d": 3, "n": 8, "m": 2}], "trials": 40, "master_seed": 9}))
    out = tmp_path / "r.csv"
    cmd = [sys.executable, "-m", "gridflood.cli", "sweep", "--plan", str(plan), "--out", str(out), "--no-timing"]
    proc = subprocess.Popen(cmd, stderr=subprocess.DEVNULL)
    deadline = time.time() + 60
    while time.time() < deadline:
        if out.exists() and len(out.read_text().splitlines()) >= 3:
            break
        time.sleep(0.05)
    proc.kill()
    proc.wait()
    partial = len(out.read_text().splitlines()) - 1
    subprocess.run(cmd, check=True, stderr=subprocess.DEVNULL)
    done = rows(out.read_text())
    keys = [(r["cell_id"], r["seed"]) for r in done]
    assert len(keys) == len(set(keys)) == 40
    assert partial >= 2
    fresh = tmp_path / "fresh.csv"
    subprocess.run(cmd[:-2] + [str(fresh), "--no-timing"], check=True, stderr=subprocess.DEVNULL)
    assert fresh.read_bytes() == out.read_bytes()


def test_analyze_tree_golden(capsys, data_dir):
    code, out, _ = cli(capsys, "analyze", "--trace", str(data_dir / "branching_trace.jsonl"), "--what", "tree")
    assert code == 0 and out == (data_dir / "branching_tree.txt").read_text()


def test_analyze_tree_rejects_standard_trace(tmp_path, capsys):
    tr = tmp_path / "s.jsonl"
    cli(capsys, "simulate", "--d", "2", "--n", "3", "--m", "4", "--seed", "1", "--trace", str(tr))
    code, _, err = cli(capsys, "analyze", "--trace", str(tr), "--what", "tree")
    assert code != 0 and "island" in err


def test_analyze_tree_empty_window(capsys, data_dir):
    code, out, _ = cli(capsys, "analyze", "--trace", str(data_dir / "branching_trace.jsonl"), "--what", "tree",
                       "--window", "-1")
    assert code == 0 and out == ""


def test_analyze_islands_gamma_zero(tmp_path, capsys):
    tr = tmp_path / "i.jsonl"
    cli(capsys, "simulate", "--d", "1", "--n", "1", "--m", "6", "--seed", "2", "--trace", str(tr),
        "--record-positions", "--max-steps", "1")
    code, out, _ = cli(capsys, "analyze", "--trace", str(tr), "--what", "islands", "--gamma", "0")
    assert code == 0
    got = rows(out)
    assert sum(int(r["size"]) for r in got) == 6 and len(got) <= 3  # at most 3 sites on {-1,0,1}


def test_analyze_growth_and_goodness(tmp_path, capsys):
    tr = tmp_path / "g.jsonl"
    cli(capsys, "simulate", "--d", "3", "--n", "6", "--m", "100", "--seed", "2", "--trace", str(tr),
        "--record-positions")
    code, out, _ = cli(capsys, "analyze", "--trace", str(tr), "--what", "growth", "--dt", "5",
                       "--figure", str(tmp_path / "g.png"))
    recs = [json.loads(x) for x in out.splitlines()]
    assert code == 0 and recs[0]["kind"] == "growth_header" and recs[-1]["uninfected"] == 0
    assert (tmp_path / "g.png").exists()
    code, out, err = cli(capsys, "analyze", "--trace", str(tr), "--what", "goodness", "--every", "5")
    assert code == 0 and rows(out)[0]["t"] == "0" and "warning" in err


def test_analyze_needs_positions(tmp_path, capsys):
    tr = tmp_path / "n.jsonl"
    cli(capsys, "simulate", "--d", "3", "--n", "4", "--m", "10", "--seed", "2", "--trace", str(tr))
    code, _, err = cli(capsys, "analyze", "--trace", str(tr), "--what", "islands", "--gamma", "1")
    assert code != 0 and "--record-positions" in err


def test_verify_suites(capsys):
    code, out, _ = cli(capsys, "verify", "--suite", "isoperimetry")
    assert code == 0 and all(r["result"] == "PASS" for r in rows(out))
    code, out, _ = cli(capsys, "verify", "--suite", "matching", "--seed", "3")
    assert code == 0 and "min_ratio" in out
    code, out, _ = cli(capsys, "verify", "--suite", "coupling", "--seed", "3")
    assert code == 0 and "max_abs_z" in out
    code, _, err = cli(capsys, "verify", "--suite", "coupling")
    assert code != 0 and "--seed" in err


def test_console_script_installed():
    res = subprocess.run(["gridflood", "probe", "--op", "passage", "--r", "1", "--t", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "0.5" in res.stdout
