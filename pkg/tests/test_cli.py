"""Command-line entry point: subcommand smoke runs, output files,
error reporting."""

import json
from pathlib import Path

import pytest

from facetproc.cli import main


def write_conf(tmp_path, text):
    path = tmp_path / "model.conf"
    path.write_text(text)
    return str(path)


def run(args):
    return main(args)


def test_simulate_writes_trace_and_manifest(tmp_path, capsys):
    conf = write_conf(tmp_path, "d = 2\nnu.2 = -1\na.grid = 2\n"
                                "chain.steps = 20000\n")
    out = tmp_path / "sim"
    assert run(["simulate", "--config", conf, "--seed", "1",
                "--out", str(out)]) == 0
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0] == "step,n,G_1,G_2,accepted,move"
    assert len(trace) > 100
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == "simulate"
    captured = capsys.readouterr()
    assert "retained" in captured.out
    assert "mean count" in captured.out


def test_rho_series_output(tmp_path, capsys):
    conf = write_conf(tmp_path, "d = 2\nnu.2 = -1\na.grid = 1,4\n")
    out = tmp_path / "rho"
    assert run(["rho", "--config", conf, "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0].startswith("a,k,series,tail,limit")
    assert len(lines) == 3  # one k value, two grid points
    assert "series" in capsys.readouterr().out


def test_rho_bounds_output(tmp_path, capsys):
    # coupled order below the dimension switches to certified bounds
    conf = write_conf(tmp_path, "d = 3\nnu.2 = -1\na.grid = 2\n")
    out = tmp_path / "rho"
    assert run(["rho", "--config", conf, "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "a,s,bound,rate,tail,n_max"
    assert len(lines) == 2
    assert "bounds" in capsys.readouterr().out


def test_moments_constants(tmp_path, capsys):
    conf = write_conf(tmp_path, "d = 2\n")
    out = tmp_path / "mom"
    assert run(["moments", "--config", conf, "--out", str(out)]) == 0
    rows = (out / "results.csv").read_text().splitlines()
    assert rows[0] == "quantity,i,j,value,se"
    by = {}
    for line in rows[1:]:
        q, i, j, value, se = line.split(",")
        by[(q, i, j)] = float(value)
    assert by[("count_mean", "", "")] == pytest.approx(1.0)
    assert by[("interaction_mean", "1", "")] == pytest.approx(2.0)
    assert by[("covariance", "1", "1")] == pytest.approx(4.0)
    assert by[("covariance", "1", "2")] == pytest.approx(1.0)
    assert by[("i_k", "1", "")] == pytest.approx(2.0)
    capsys.readouterr()


def test_experiment_subcommand_runs_e3(tmp_path, capsys):
    conf = write_conf(tmp_path, "d = 2\nnu.2 = -0.5\na.grid = 1,2\n")
    out = tmp_path / "exp"
    assert run(["experiment", "e3", "--config", conf,
                "--out", str(out)]) == 0
    assert (out / "results.csv").exists()
    assert (out / "manifest.json").exists()
    captured = capsys.readouterr()
    assert "e3" in captured.out and "manifest" in captured.out


def test_experiment_json_format(tmp_path, capsys):
    conf = write_conf(tmp_path, "d = 2\nnu.2 = -0.5\na.grid = 1\n")
    out = tmp_path / "expj"
    assert run(["experiment", "e3", "--config", conf, "--out", str(out),
                "--format", "json"]) == 0
    payload = json.loads((out / "results.json").read_text())
    assert isinstance(payload, list) and payload
    capsys.readouterr()


def test_cli_reruns_are_byte_identical(tmp_path, capsys):
    conf = write_conf(tmp_path, "d = 2\nnu.2 = -1\na.grid = 1,2\n"
                                "chain.steps = 10000\n")
    blobs = []
    for name in ("one", "two"):
        out = tmp_path / name
        assert run(["experiment", "e2", "--config", conf, "--seed", "6",
                    "--out", str(out)]) == 0
        blobs.append((out / "results.csv").read_bytes())
    assert blobs[0] == blobs[1]
    capsys.readouterr()


def test_cli_reports_config_errors(tmp_path, capsys):
    conf = write_conf(tmp_path, "d = 2\nbogus = 1\n")
    code = run(["moments", "--config", conf, "--out", str(tmp_path / "x")])
    assert code == 2
    captured = capsys.readouterr()
    assert "error:" in captured.err
    assert "bogus" in captured.err


def test_cli_reports_missing_file(tmp_path, capsys):
    code = run(["rho", "--config", str(tmp_path / "absent.conf"),
                "--out", str(tmp_path / "y")])
    assert code == 2
    assert "error:" in capsys.readouterr().err
