"""Acceptance runs of the bundled examples, marked slow."""

from __future__ import annotations

import asyncio

import numpy as np
import pytest

from quadconvex.client import QuadMapClient, json_example_folders
from quadconvex.quadapi import convexcut, nonconvexity, oracles, quadmap
from quadconvex.quadapi.sampling import derived_rng, random_points
from quadconvex.quadapi.types import Topology
from quadconvex.sweep import sweep_section

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("name", json_example_folders())
def test_example_scenario(name):
    report = asyncio.run(QuadMapClient().async_run_example(name))
    failed = [check for check in report.result["checks"] if not check["passed"]]
    assert not failed, failed
    assert report.status == "ok"


def test_first_example_local_minima(ex1):
    result = convexcut.get_z_max(ex1, [0.0, 0.0, 1.0], convexcut.ZMaxOptions(seed=1))
    assert result.z_max == pytest.approx(1 / 3, abs=1e-6)
    assert result.cut_level == pytest.approx(1 / 3, abs=1e-6)
    known = np.array([1 / 3, 0.3656, 74 / 75])
    for value in result.local_minima:
        assert np.min(np.abs(known - value)) < 1e-3
    # directions inside c_plus^perp, where the normalized map of this example equals the original
    starts = np.array([run.start_c for run in result.runs])
    for direction in ([1.0, 0.0, 0.0], [2.0, 1.0, -2.0], [0.7227, 3.4347, 1.0]):
        expected = np.array([direction[0], direction[1], 0.0])
        cosines = np.abs(starts @ expected) / np.linalg.norm(expected)
        assert np.max(cosines) > 0.999


@pytest.mark.parametrize("example", [5, 6])
def test_c_minus_components_are_one_loop_and_one_interval(load_map, example):
    qmap = load_map(example)
    c_plus = [1.0, 0.0, 0.0, 0.0]
    result = convexcut.get_z_max(qmap, c_plus, convexcut.ZMaxOptions(seed=example))
    nmap, transform = quadmap.normalize_for_cut(qmap, c_plus)
    traces = []
    for run in result.runs:
        if any(np.min(np.linalg.norm(trace.points - run.start_c, axis=1)) < 0.02 for trace in traces):
            continue
        traces.append(convexcut.sample_c_minus_component(nmap, transform.c_plus, run.start_c))
    assert sorted(trace.topology.value for trace in traces) == ["interval", "loop"]
    (interval,) = (trace for trace in traces if trace.topology is Topology.interval)
    assert len(interval.endpoints) == 2


def test_two_dimensional_c_minus_has_local_minima(load_map):
    qmap = load_map(7)
    result = convexcut.get_z_max(
        qmap, [0.1326, -0.3859, 0.1932, -0.6408, 0.6209], convexcut.ZMaxOptions(seed=7, z_guess=137.5)
    )
    assert result.improved
    assert result.local_minima
    assert min(result.local_minima) == result.z_max
    assert any(abs(value - 1.8862) < 1e-2 for value in result.local_minima)


def test_first_example_sections(ex1):
    below = sweep_section(ex1, {2: 0.3}, rays=90)
    assert below.rank_arcs() == 0
    assert sweep_section(ex1, {2: 1 / 3}, rays=90).is_convex()
    above = sweep_section(ex1, {2: 4.0}, rays=180)
    assert above.rank_arcs() >= 3
    assert above.is_convex()


def test_z_max_over_seeds(load_map):
    qmap = load_map(5)
    best = min(
        convexcut.get_z_max(qmap, [1.0, 0.0, 0.0, 0.0], convexcut.ZMaxOptions(seed=seed)).z_max
        for seed in range(5)
    )
    assert best == pytest.approx(0.007325, rel=0.1)


def test_power_flow_normal(load_map):
    qmap = load_map(2)
    result = convexcut.get_z_max(qmap, [2 / 3, 2 / 3, 1 / 3], convexcut.ZMaxOptions(seed=2))
    assert result.z_max == pytest.approx(0.0283, abs=1e-3)
    expected = np.array([0.3169, 0.9196, 0.2322])
    assert abs(float(result.c_star @ expected)) / np.linalg.norm(expected) > 0.995


def test_complex_power_flow_normal(ex3):
    result = convexcut.get_z_max(ex3, [1.0, 1.0, 0.0, 0.0], convexcut.ZMaxOptions(seed=3))
    assert result.z_max == pytest.approx(1 / np.sqrt(2.0), abs=1e-3)
    assert float(result.c_star @ [0.0, 0.0, -1.0, -1.0]) / np.sqrt(2.0) > 0.999


@pytest.mark.parametrize("example", range(1, 10))
def test_certificate_found_for_most_seeds(load_map, example):
    qmap = load_map(example)
    found = sum(
        nonconvexity.nonconvexity_certificate(qmap, seed=seed, max_iters=100) is not None
        for seed in range(100)
    )
    assert found >= 95


@pytest.mark.parametrize("name", [*range(1, 11), "dines", "paraboloid"])
def test_image_points_are_never_certified(load_map, name):
    qmap = load_map(name)
    points = random_points(derived_rng(500), 500, qmap.n, qmap.field)
    certified = [
        y for y in quadmap.evaluate_many(qmap, points) if oracles.infeasibility_oracle(qmap, y) is not None
    ]
    assert not certified


@pytest.mark.parametrize("name", ["dines", "paraboloid"])
def test_convex_images_are_never_certified(load_map, name):
    qmap = load_map(name)
    assert all(
        nonconvexity.nonconvexity_certificate(qmap, seed=seed, max_iters=20) is None for seed in range(100)
    )
