"""Tests for report serialization and map fingerprints."""

from __future__ import annotations

import math

import numpy as np
import pytest

from quadconvex.quadapi.quadmap import QuadraticMap
from quadconvex.quadapi.types import FieldTag, Membership
from quadconvex.report import AnalysisReport, fingerprint, plain, round_float


def test_round_float():
    assert round_float(1 / 3) == 0.333333333333
    assert round_float(123456.7891234567, 4) == 123500.0
    assert round_float(0.0) == 0.0
    assert math.isinf(round_float(float("inf")))
    assert math.isnan(round_float(float("nan")))


def test_plain_values():
    assert plain(np.array([1 / 3, 2.0])) == [0.333333333333, 2.0]
    assert plain(1.0 + 2.0j) == [1.0, 2.0]
    assert plain(np.complex128(3.0)) == 3.0
    assert plain(Membership.not_in_g) == "NotInG"
    assert plain({1: np.int64(4), "flag": np.bool_(True)}) == {"1": 4, "flag": True}
    assert plain((None, "text")) == [None, "text"]


def test_fingerprint_ignores_name(ex1):
    renamed = QuadraticMap(field=ex1.field, A=ex1.A, b=ex1.b, name="another name")
    digest = fingerprint(ex1)
    assert len(digest) == 64
    int(digest, 16)
    assert fingerprint(renamed) == digest


def test_fingerprint_tracks_entries(ex1):
    changed = QuadraticMap(field=FieldTag.real, A=ex1.A, b=ex1.b * 2)
    assert fingerprint(changed) != fingerprint(ex1)


def test_report_json(ex1):
    report = AnalysisReport(
        command="feasible",
        arguments={"y0": np.array([0.0, 0.0, -1.0])},
        fingerprint=fingerprint(ex1),
        seed=3,
        status="infeasible",
        result={"membership": Membership.not_in_g, "c": np.array([0.0, 0.0, 1.0])},
    )
    text = report.to_json()
    assert '"status": "infeasible"' in text
    restored = AnalysisReport.from_json(text)
    assert restored.as_dict() == report.as_dict()
    assert restored.result["membership"] == "NotInG"


def test_report_ignores_unknown_keys():
    restored = AnalysisReport.from_json('{"command": "validate", "extra": 1}')
    assert restored.command == "validate"
    assert restored.status == "ok"
    with pytest.raises(TypeError):
        AnalysisReport.from_json('{"status": "ok"}')
