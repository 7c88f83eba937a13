"""Shared fixtures and hypothesis profiles."""

from __future__ import annotations

import asyncio
import os

import hypothesis
import numpy as np
import pytest

from quadconvex.client import QuadMapClient, example_folder
from quadconvex.const import MAPFILE
from quadconvex.quadapi.quadmap import QuadraticMap
from quadconvex.quadapi.types import FieldTag

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=100, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

_MAPS: dict[str, QuadraticMap] = {}


def fixture_path(name: str | int) -> str:
    """Return the map file of a bundled example."""
    return os.path.join(example_folder(name), MAPFILE)


def _load(name: str | int) -> QuadraticMap:
    key = str(name)
    if key not in _MAPS:
        _MAPS[key] = asyncio.run(QuadMapClient().async_load_map(fixture_path(name)))
    return _MAPS[key]


@pytest.fixture(scope="session")
def load_map():
    """Return a loader of bundled example maps by number or folder name."""
    return _load


@pytest.fixture(scope="session")
def map_path():
    """Return the map file path of a bundled example."""
    return fixture_path


@pytest.fixture(scope="session")
def ex1() -> QuadraticMap:
    return _load(1)


@pytest.fixture(scope="session")
def ex3() -> QuadraticMap:
    return _load(3)


@pytest.fixture(scope="session")
def ex10() -> QuadraticMap:
    return _load(10)


@pytest.fixture(scope="session")
def square_norm() -> QuadraticMap:
    """f(x) = |x|^2 on R^2, its image is the ray y >= 0."""
    return QuadraticMap.from_arrays(FieldTag.real, np.eye(2)[None], np.zeros((1, 2)), name="norm")


@pytest.fixture(scope="session")
def indefinite() -> QuadraticMap:
    """Map without any positive definite combination and with non-trivial b."""
    A = np.array([np.diag([1.0, -1.0]), np.diag([-1.0, 1.0])])
    b = np.array([[1.0, 0.0], [1.0, 0.0]])
    return QuadraticMap.from_arrays(FieldTag.real, A, b, name="indefinite")


@pytest.fixture(scope="session")
def planar_kernel() -> QuadraticMap:
    """Homogeneous map where c = e4 has the two dimensional kernel span(e1, e2)."""
    A = np.zeros((4, 3, 3))
    A[0, 0, 0] = 1.0
    A[1, 1, 1] = 1.0
    A[2, 0, 1] = A[2, 1, 0] = 1.0
    A[3, 2, 2] = 1.0
    return QuadraticMap.from_arrays(FieldTag.real, A, np.zeros((4, 3)), name="planar")
