"""Tests for the command line driver and its exit codes."""

from __future__ import annotations

import json

import pytest

from quadconvex.cli import main
from quadconvex.const import (
    EXIT_INFEASIBLE,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_TRIVIAL_B,
)


def _report(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_validate(map_path, capsys):
    assert main(["validate", map_path(1)]) == EXIT_OK
    report = _report(capsys)
    assert report["command"] == "validate"
    assert report["result"]["field"] == "real"


def test_feasible_exit_codes(map_path, capsys):
    assert main(["feasible", map_path(1), "0,0,-1"]) == EXIT_INFEASIBLE
    assert _report(capsys)["status"] == "infeasible"
    assert main(["feasible", map_path(1), "5;4;3"]) == EXIT_OK


def test_self_check_is_deterministic(map_path, capsys):
    assert main(["--seed", "7", "feasible", map_path(1), "--self-check", "3"]) == EXIT_OK
    first = _report(capsys)
    assert main(["feasible", map_path(1), "--self-check", "3", "--seed", "7"]) == EXIT_OK
    second = _report(capsys)
    assert first["seed"] == second["seed"] == 7
    assert first["result"] == second["result"]


def test_trivial_b_exit_code(map_path):
    assert main(["zmax", map_path(10)]) == EXIT_TRIVIAL_B


@pytest.mark.parametrize(
    "argv",
    [
        ["boundary", "{ex1}", "0,0,0", "0,0,0"],
        ["boundary", "{ex1}", "0,0", "0,0,-1"],
        ["feasible", "{ex1}", "0,zero,0"],
        ["feasible", "{ex1}"],
        ["example", "11"],
        ["sweep", "{paraboloid}", "--fix", "1=1", "--rays", "0"],
        ["sweep", "{paraboloid}", "--fix", "y1=1"],
        ["certify", "{ex1}", "--seed", "abc"],
        ["--seed", "-1", "validate", "{ex1}"],
        ["--tol-rank", "0", "validate", "{ex1}"],
        ["validate", "/nonexistent/map.json"],
    ],
)
def test_input_errors(map_path, argv):
    paths = {"ex1": map_path(1), "paraboloid": map_path("paraboloid")}
    assert main([arg.format(**paths) for arg in argv]) == EXIT_INPUT


def test_unknown_command_exits_with_input_code(capsys):
    with pytest.raises(SystemExit) as err:
        main(["bogus"])
    assert err.value.code == EXIT_INPUT
    assert "invalid choice" in capsys.readouterr().err


def test_examples_listing(capsys):
    assert main(["examples"]) == EXIT_OK
    names = capsys.readouterr().out.split()
    assert "example1" in names
    assert "paraboloid" in names


def test_sweep_csv(map_path, capsys, tmp_path):
    assert main(["sweep", map_path("paraboloid"), "--fix", "1=1", "--rays", "4"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "angle_rad,t,y1,y2,y3,rank_estimate,on_F"
    assert len(lines) == 5
    target = tmp_path / "section.csv"
    report = tmp_path / "report.json"
    argv = ["--json-out", str(report), "sweep", map_path("paraboloid"), "--fix", "1=1", "--rays", "4"]
    assert main([*argv, "--csv-out", str(target)]) == EXIT_OK
    assert target.read_text(encoding="utf-8").splitlines()[0].startswith("angle_rad")
    assert json.loads(report.read_text(encoding="utf-8"))["result"]["rays"] == 4
