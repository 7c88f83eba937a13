"""Tests for the analysis client."""

from __future__ import annotations

import asyncio
import json

import pytest

from quadconvex.client import (
    QuadMapClient,
    QuadMapClientInputError,
    QuadMapClientTrivialBError,
    example_folder,
    json_example_folders,
)


def _run(coro):
    return asyncio.run(coro)


def test_example_folders():
    folders = json_example_folders()
    assert {f"example{k}" for k in range(1, 11)} <= set(folders)
    assert {"dines", "paraboloid"} <= set(folders)
    assert example_folder(3).endswith("example3")
    with pytest.raises(QuadMapClientInputError, match="Unknown example: 11"):
        example_folder("11")


def test_load_example():
    qmap, scenario = _run(QuadMapClient().async_load_example(1))
    assert (qmap.n, qmap.m) == (3, 3)
    assert scenario["example"] == 1
    assert scenario["c_plus"] == [0.0, 0.0, 1.0]
    assert scenario["seed"] == 1
    assert scenario["checks"]


def test_tolerance_overrides():
    client = QuadMapClient({"tol_rank": 1e-6, "tol_feas": None, "seed": 9})
    assert client.tolerances.rank_tol == 1e-6
    assert client.tolerances.feas_tol == 1e-9
    assert client.seed == 9


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ('{"field": "real", "n": 1, "m": 1, "A": [[[1]]]', "invalid JSON at line 1"),
        ('{"field": "quaternion", "n": 1, "m": 1, "A": [[[1]]], "b": [[0]]}', "Schema error at field"),
        ('{"field": "real", "n": 1, "m": 1, "A": [[["x"]]], "b": [[0]]}', "Schema error at A"),
        ('{"field": "real", "n": 2, "m": 1, "A": [[[1, 2], [0, 1]]], "b": [[0, 0]]}', "Invalid map"),
    ],
    ids=["json", "field", "entry", "hermitian"],
)
def test_malformed_map(tmp_path, text, message):
    path = tmp_path / "map.json"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(QuadMapClientInputError, match=message):
        _run(QuadMapClient().async_load_map(str(path)))


def test_missing_map(tmp_path):
    with pytest.raises(QuadMapClientInputError, match="Cannot read"):
        _run(QuadMapClient().async_load_map(str(tmp_path / "absent.json")))


def test_validate(ex1, ex10):
    client = QuadMapClient()
    report = _run(client.async_validate(ex1))
    assert report.command == "validate"
    assert report.result["definite"]
    assert not report.result["b_trivial"]
    assert len(report.fingerprint) == 64
    assert _run(client.async_validate(ex10)).result["b_trivial"]


def test_feasible(ex1):
    client = QuadMapClient()
    report = _run(client.async_feasible(ex1, [0.0, 0.0, -1.0]))
    assert report.status == "infeasible"
    assert report.result["certificate"]["verified"]
    report = _run(client.async_feasible(ex1, [5.0, 4.0, 3.0]))
    assert report.status == "ok"
    assert report.result["membership"] == "InG"
    with pytest.raises(QuadMapClientInputError):
        _run(client.async_feasible(ex1, None))


def test_self_check_is_reproducible(ex1):
    client = QuadMapClient({"seed": 3})
    first = _run(client.async_feasible(ex1, None, self_check=3))
    second = _run(client.async_feasible(ex1, None, self_check=3))
    assert first.status == second.status == "ok"
    assert first.result == second.result == {"checked": 3, "certified": []}


def test_errors_are_translated(ex1, ex10):
    client = QuadMapClient()
    with pytest.raises(QuadMapClientTrivialBError):
        _run(client.async_zmax(ex10))
    with pytest.raises(QuadMapClientInputError):
        _run(client.async_boundary(ex1, [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]))


def test_sweep(load_map):
    report, text = _run(QuadMapClient().async_sweep(load_map("paraboloid"), {0: 1.0}, 4))
    assert report.result["rays"] == 4
    assert report.result["convex"]
    assert report.result["rank_arcs"] == 0
    assert len(text.splitlines()) == 5


def test_save(tmp_path):
    path = tmp_path / "out.json"
    _run(QuadMapClient().async_save(str(path), json.dumps({"a": 1})))
    assert json.loads(path.read_text(encoding="utf-8")) == {"a": 1}
    with pytest.raises(QuadMapClientInputError):
        _run(QuadMapClient().async_save(str(tmp_path / "missing" / "out.json"), "x"))
