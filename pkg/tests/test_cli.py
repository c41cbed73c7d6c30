import json
import pathlib
import subprocess
import sys

import pytest

from roughnet.cli import main

CONFIGS = pathlib.Path(__file__).resolve().parents[1] / "configs"
E1 = str(CONFIGS / "flat-product.cfg")
E2 = str(CONFIGS / "heisenberg.cfg")


@pytest.fixture(scope="module")
def e1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("e1")
    code = main(["run", E1, "--out", str(out)])
    return out, code


def test_run_e1_passes(e1_run):
    out, code = e1_run
    assert code == 0
    body = json.loads((out / "report.json").read_text())
    assert body["pass"] is True and body["seed"] == 42 and body["audit"]["violations"] == 0


def test_run_e1_artifacts(e1_run):
    out, _ = e1_run
    for name in ("audit_pairs.csv", "audit_band.svg", "net_scatter.svg", "holonomy_hist.svg",
                 "holonomy_defects.csv", "P.csv", "rif_pairs.csv", "hlc_samples.csv"):
        assert (out / name).stat().st_size > 0, name
    assert (out / "audit_pairs.csv").read_text().splitlines()[0] == "delta_P,delta_x,count"


def test_report_numbers_traceable(e1_run):
    out, _ = e1_run
    ledger = json.loads((out / "report.json").read_text())["ledger"]
    for name, entry in ledger.items():
        assert "formula" in entry or entry.get("fitted"), name


def test_replay_identical(e1_run, capsys):
    out, _ = e1_run
    assert main(["replay", E1, "--seed", "42", "--out", str(out)]) == 0
    assert (out / "replay" / "report.json").read_bytes() == (out / "report.json").read_bytes()


def test_replay_other_seed_mismatch(e1_run, capsys):
    out, _ = e1_run
    assert main(["replay", E1, "--seed", "7", "--out", str(out)]) == 1
    assert "replay mismatch at $." in capsys.readouterr().err
    old = json.loads((out / "report.json").read_text())["ledger"]
    new = json.loads((out / "replay" / "report.json").read_text())["ledger"]
    assert {k: v.get("formula") for k, v in old.items()} == {k: v.get("formula") for k, v in new.items()}


def test_replay_without_prior(tmp_path):
    assert main(["replay", E1, "--seed", "42", "--out", str(tmp_path)]) == 2


def test_run_e2_fails_gate(tmp_path):
    assert main(["run", E2, "--out", str(tmp_path)]) == 1
    body = json.loads((tmp_path / "report.json").read_text())
    assert body["pass"] is False and body["failure"]["gate"] == "trivial-holonomy"


def test_malformed_config(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("example = flat-product\nthis line is wrong\n")
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 2


def test_usage_errors(tmp_path):
    assert main([]) == 2
    assert main(["stage", "nope", E1, "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("stage,code", [("holonomy", 0), ("hlc", 0), ("rif", 0), ("lifts", 0), ("nets", 0)])
def test_stages_e1(stage, code, tmp_path):
    assert main(["stage", stage, E1, "--out", str(tmp_path)]) == code
    body = json.loads((tmp_path / f"report-{stage}.json").read_text())
    assert body["stage"] == stage


def test_stage_holonomy_e2(tmp_path):
    assert main(["stage", "holonomy", E2, "--out", str(tmp_path)]) == 1


def test_console_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "roughnet", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "replay" in r.stdout
