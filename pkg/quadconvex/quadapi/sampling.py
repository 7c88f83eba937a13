"""Reproducible random streams, one per (seed, iteration) pair."""

from __future__ import annotations

import numpy as np

from .types import FieldTag


def derived_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Return the counter-based generator for the given seed and iteration index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def random_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Return a direction uniform on the unit sphere S^(dim-1)."""
    while True:
        vec = rng.standard_normal(dim)
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            return vec / norm


def random_points(
    rng: np.random.Generator, count: int, dim: int, field: FieldTag
) -> np.ndarray:
    """Return count standard Gaussian points of the field, shape (count, dim)."""
    if field is FieldTag.complex:
        return (rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))) / np.sqrt(2)
    return rng.standard_normal((count, dim))
