"""Tests for two dimensional section sweeps."""

from __future__ import annotations

import numpy as np
from numpy.testing import assert_allclose
import pytest

from quadconvex.quadapi.errors import InvalidInputError
from quadconvex.quadapi.types import OnF
from quadconvex.sweep import SectionSweep, SweepRow, is_convex_polyline, sweep_section

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
L_SHAPE = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])


def _section(ranks: list[int]) -> SectionSweep:
    rows = tuple(
        SweepRow(
            angle=2 * np.pi * j / len(ranks),
            t=1.0,
            point=np.array([1.0, np.cos(2 * np.pi * j / len(ranks)), np.sin(2 * np.pi * j / len(ranks))]),
            rank_estimate=rank,
            on_f=OnF.yes if rank == 1 else OnF.ambiguous,
        )
        for j, rank in enumerate(ranks)
    )
    return SectionSweep(centre=np.array([1.0, 0.0, 0.0]), free=(1, 2), fixed={0: 1.0}, margin=0.5, rows=rows)


def test_convex_polyline():
    assert is_convex_polyline(SQUARE)
    assert is_convex_polyline(SQUARE[::-1])
    assert not is_convex_polyline(L_SHAPE)
    assert is_convex_polyline(SQUARE[:2])


@pytest.mark.parametrize(
    ("ranks", "arcs"),
    [
        ([2, 2, 1, 1, 2, 1], 2),
        ([2, 1, 1, 2], 1),
        ([2, 2, 2], 1),
        ([1, 1, 1], 0),
        ([], 0),
    ],
)
def test_rank_arcs(ranks, arcs):
    assert _section(ranks).rank_arcs() == arcs


def test_csv_layout():
    lines = _section([1, 2]).to_csv().splitlines()
    assert lines[0] == "angle_rad,t,y1,y2,y3,rank_estimate,on_F"
    assert len(lines) == 3
    assert lines[1].endswith(",1,Yes")
    assert lines[2].endswith(",2,Ambiguous")


@pytest.mark.parametrize(
    ("fixed", "rays"),
    [({0: 1.0}, 0), ({3: 1.0}, 8), ({}, 8), ({0: 1.0, 1: 0.0}, 8)],
    ids=["no-rays", "out-of-range", "three-free", "one-free"],
)
def test_sweep_input_errors(load_map, fixed, rays):
    with pytest.raises(InvalidInputError):
        sweep_section(load_map("paraboloid"), fixed, rays)


def test_empty_section_is_rejected(load_map):
    with pytest.raises(InvalidInputError):
        sweep_section(load_map("paraboloid"), {0: -1.0}, 8)


def test_paraboloid_slice_is_a_disk(load_map):
    section = sweep_section(load_map("paraboloid"), {0: 1.0}, rays=8)
    assert_allclose(section.centre, [1.0, 0.0, 0.0], atol=1e-6)
    assert section.margin == pytest.approx(0.5, abs=1e-6)
    assert len(section.rows) == 8
    for row in section.rows:
        assert row.t == pytest.approx(1.0, abs=1e-5)
        assert row.rank_estimate == 1
        assert row.point[0] == pytest.approx(1.0, abs=1e-6)
    assert section.rank_arcs() == 0
    assert section.is_convex()
    assert section.polyline().shape == (8, 2)
