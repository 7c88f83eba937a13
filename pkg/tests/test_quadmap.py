"""Tests for quadratic maps, lifting and coordinate changes."""

from __future__ import annotations

from hypothesis import given, settings, strategies as st
import numpy as np
from numpy.testing import assert_allclose
import pytest

from quadconvex.quadapi import linalg, quadmap
from quadconvex.quadapi.errors import (
    DimensionMismatchError,
    InvalidInputError,
    NotDefiniteError,
    SchemaError,
)
from quadconvex.quadapi.sampling import derived_rng, random_points
from quadconvex.quadapi.types import FieldTag

SEEDS = st.integers(min_value=0, max_value=2**32 - 1)


def _rank_one(x: np.ndarray) -> np.ndarray:
    z = np.append(x, 1.0)
    return np.outer(z, z.conj())


def test_evaluate_power_flow_loads(load_map):
    qmap = load_map(2)
    assert_allclose(quadmap.evaluate(qmap, [1.0, 0.0, 0.0]), [-0.5, 0.0, 0.0], atol=1e-15)


def test_evaluate_homogeneous_diagonal(ex10):
    assert_allclose(quadmap.evaluate(ex10, [1.0, 0.0, 0.0, 0.0]), [0.0, 0.0, 0.0, 1.0])


def test_evaluate_rejects_wrong_point(ex1):
    with pytest.raises(DimensionMismatchError):
        quadmap.evaluate(ex1, [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        quadmap.evaluate(ex1, [1.0j, 0.0, 0.0])


@given(SEEDS, st.sampled_from([1, 3, 8]))
def test_lift_matches_evaluate(load_map, seed, example):
    qmap = load_map(example)
    family = quadmap.lift(qmap)
    for x in random_points(derived_rng(seed), 5, qmap.n, qmap.field):
        assert_allclose(family.apply(_rank_one(x)), quadmap.evaluate(qmap, x), rtol=1e-12, atol=1e-11)


@given(SEEDS)
def test_evaluate_many_matches_evaluate(load_map, seed):
    qmap = load_map(8)
    points = random_points(derived_rng(seed), 10, qmap.n, qmap.field)
    batch = quadmap.evaluate_many(qmap, points)
    for x, y in zip(points, batch, strict=True):
        assert_allclose(y, quadmap.evaluate(qmap, x), rtol=1e-12, atol=1e-11)


def test_real_embedding_has_same_image(load_map):
    qmap = load_map(8)
    embedded = quadmap.real_embedding(qmap)
    assert embedded.field is FieldTag.real
    assert embedded.n == 2 * qmap.n
    for x in random_points(derived_rng(8), 100, qmap.n, qmap.field):
        assert_allclose(
            quadmap.evaluate(embedded, quadmap.embed_point(x)),
            quadmap.evaluate(qmap, x),
            rtol=1e-12,
            atol=1e-11,
        )


def test_real_embedding_needs_complex_map(ex1):
    with pytest.raises(InvalidInputError):
        quadmap.real_embedding(ex1)


def test_b_triviality(ex1, ex10):
    assert not quadmap.is_b_trivial(ex1).trivial
    assert quadmap.is_b_trivial(ex10).trivial


def test_b_triviality_of_translated_homogeneous_map(ex10):
    shift = np.array([0.5, -1.0, 2.0, 0.25])
    moved, offset = quadmap.translate(ex10, shift)
    triviality = quadmap.is_b_trivial(moved)
    assert triviality.trivial
    assert_allclose(triviality.witness, shift, atol=1e-10)
    assert_allclose(offset, quadmap.evaluate(ex10, shift))


@given(SEEDS)
def test_translate_preserves_image(ex3, seed):
    rng = derived_rng(seed)
    shift, xi = random_points(rng, 2, ex3.n, ex3.field)
    moved, offset = quadmap.translate(ex3, shift)
    assert_allclose(
        quadmap.evaluate(moved, xi) + offset, quadmap.evaluate(ex3, xi + shift), rtol=1e-12, atol=1e-11
    )


def test_definite_direction(ex1, ex10, indefinite):
    for qmap in (ex1, ex10):
        c_plus = quadmap.find_definite_direction(qmap)
        assert c_plus is not None
        assert np.linalg.norm(c_plus) == pytest.approx(1.0)
        assert linalg.hermitian_eig(qmap.pencil(c_plus)).lambda_min > 0
    assert quadmap.find_definite_direction(indefinite) is None


def test_normalize_for_cut_identity_case(ex1):
    nmap, transform = quadmap.normalize_for_cut(ex1, [0.0, 0.0, 1.0])
    assert_allclose(transform.shift, 0.0)
    assert_allclose(transform.image_shift, 0.0)
    assert_allclose(transform.factor, np.eye(3), atol=1e-12)
    assert_allclose(nmap.A, ex1.A, atol=1e-12)
    assert transform.cut_level(1 / 3) == pytest.approx(1 / 3)


@given(SEEDS)
@settings(max_examples=10)
def test_normalize_for_cut(load_map, seed):
    qmap = load_map(4)
    c_plus = [0.7991, -0.3533, 0.3924, 0.2876]
    nmap, transform = quadmap.normalize_for_cut(qmap, c_plus)
    assert_allclose(nmap.pencil(transform.c_plus), np.eye(qmap.n), atol=1e-10)
    assert_allclose(nmap.linear(transform.c_plus), 0.0, atol=1e-10)
    for x in random_points(derived_rng(seed), 5, qmap.n, qmap.field):
        xi = transform.to_normalized_point(x)
        assert_allclose(transform.from_normalized_point(xi), x, atol=1e-10)
        assert_allclose(
            transform.from_normalized_image(quadmap.evaluate(nmap, xi)),
            quadmap.evaluate(qmap, x),
            rtol=1e-9,
            atol=1e-9,
        )
    assert transform.shift_norm >= 0.0


def test_normalize_for_cut_rejects_singular_direction(ex1):
    with pytest.raises(NotDefiniteError):
        quadmap.normalize_for_cut(ex1, [1.0, 0.0, 0.0])


def test_from_arrays_symmetrizes_and_rejects():
    A = np.array([[[1.0, 2.0], [2.0 + 1e-12, 0.0]]])
    qmap = quadmap.QuadraticMap.from_arrays(FieldTag.real, A, np.zeros((1, 2)))
    assert qmap.A[0, 0, 1] == qmap.A[0, 1, 0]
    assert qmap.hermitian_deviation > 0
    with pytest.raises(InvalidInputError):
        quadmap.QuadraticMap.from_arrays(FieldTag.real, np.array([[[1.0, 2.0], [0.0, 0.0]]]), np.zeros((1, 2)))
    with pytest.raises(DimensionMismatchError):
        quadmap.QuadraticMap(field=FieldTag.real, A=np.eye(2)[None], b=np.zeros((2, 2)))


def test_map_from_dict_schema_errors():
    data = {"field": "real", "n": 2, "m": 1, "A": [[[1, 0], [0]]], "b": [[0, 0]]}
    with pytest.raises(SchemaError, match=r"A\[0\]\[1\]"):
        quadmap.map_from_dict(data)
    data = {"field": "real", "n": 1, "m": 1, "A": [[[[1, 1]]]], "b": [[0]]}
    with pytest.raises(SchemaError, match="complex entry"):
        quadmap.map_from_dict(data)
    data = {"field": "real", "n": 1, "m": 2, "A": [[[1]]], "b": [[0], [0]]}
    with pytest.raises(SchemaError, match="expected 2 matrices"):
        quadmap.map_from_dict(data)


def test_map_dict_conversion_keeps_complex_entries(ex3):
    data = quadmap.map_to_dict(ex3)
    assert data["field"] == "complex"
    rebuilt = quadmap.map_from_dict(data)
    assert_allclose(rebuilt.A, ex3.A)
    assert_allclose(rebuilt.b, ex3.b)
