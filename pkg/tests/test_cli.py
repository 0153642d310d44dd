from __future__ import annotations

import csv
import json

import pytest

from shocktrack.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main


def write(tmp_path, text):
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return str(p)


def test_run_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, "problem = burgers1d\nn_steps = 4\nt_final = 0.2\nn_elements = 10\np = 2\nscheme = dirk2\n")
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--output-dir", str(out), "--override", "record_every=2"]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["completed"] and summary["all_stages_converged"]
    assert summary["shock_location_error"] < 1e-2
    with (out / "shock_track.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "shock_position"] and len(rows) == 4
    index = list(csv.DictReader((out / "snapshots" / "index.csv").open()))
    assert [r["file"] for r in index][0] == "snapshot_00000.csv"
    snap = list(csv.DictReader((out / "snapshots" / index[-1]["file"]).open()))
    assert set(snap[0]) == {"element", "node", "x", "U"} and len(snap) == 10 * 3
    reports = [json.loads(line) for line in (out / "sqp_reports.jsonl").read_text().splitlines()]
    assert len(reports) == 8 and all(r["converged"] for r in reports)
    assert "problem = burgers1d" in (out / "config.cfg").read_text()
    assert json.loads(capsys.readouterr().out)["problem"] == "burgers1d"


def test_run_solver_failure_keeps_partial_outputs(tmp_path):
    cfg = write(tmp_path, "problem = burgers1d\nn_steps = 4\nt_final = 0.2\nn_elements = 10\np = 2\n"
                          "eps1 = 1e-30\neps2 = 1e-30\nmax_iters = 1\n")
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--output-dir", str(out)]) == EXIT_SOLVER
    summary = json.loads((out / "summary.json").read_text())
    assert summary["completed"] is False and "not converged" in summary["failure"]
    assert (out / "sqp_reports.jsonl").read_text().count("\n") == 1


@pytest.mark.parametrize("text", ["problem = burgers1d\n", "problem = burgers1d\nn_steps = 4\nt_final = 1\nbogus = 2\n"])
def test_config_errors_exit_2(tmp_path, capsys, text):
    assert main(["run", "--config", write(tmp_path, text)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_bad_arguments_exit_2():
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["verify", "nope"]) == EXIT_CONFIG


def test_convergence_command(tmp_path, capsys):
    cfg = tmp_path / "conv.cfg"
    cfg.write_text("step_counts = 4, 8\nschemes = dirk1\nn_elements = 8\np = 2\noracle_steps = 500\n"
                   "eps1 = 1e-6\neps2 = 1e-8\nlm_gamma = 1e-2\n")
    out = tmp_path / "conv"
    assert main(["convergence", "--config", str(cfg), "--output-dir", str(out)]) == EXIT_OK
    rows = list(csv.DictReader((out / "convergence.csv").open()))
    assert [r["n_steps"] for r in rows] == ["4", "8"]
    assert rows[0]["observed_order"] == "" and float(rows[1]["observed_order"]) > 0


def test_verify_command(capsys):
    assert main(["verify", "dirk"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split("\t") == ["suite", "check", "value", "tolerance", "result"]
    assert all(line.endswith("PASS") for line in lines[1:])


def test_outputs_are_bit_reproducible_and_config_round_trips(tmp_path):
    cfg = write(tmp_path, "problem = advec1d\nn_steps = 3\nt_final = 0.03\nn_elements = 8\np = 2\n")
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["run", "--config", cfg, "--output-dir", str(a)]) == EXIT_OK
    assert main(["run", "--config", cfg, "--output-dir", str(b)]) == EXIT_OK
    # the effective config written by a run reproduces it
    assert main(["run", "--config", str(a / "config.cfg"), "--output-dir", str(c)]) == EXIT_OK
    files = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    assert len(files) == 6
    for rel in files:
        assert (a / rel).read_bytes() == (b / rel).read_bytes() == (c / rel).read_bytes()
