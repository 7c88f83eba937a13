"""Tests for the non-convexity certificates and the C- search."""

from __future__ import annotations

import numpy as np
from numpy.testing import assert_allclose
import pytest

from quadconvex.quadapi import linalg, nonconvexity
from quadconvex.quadapi.errors import HomogeneousMapError, InhomogeneousMapError
from quadconvex.quadapi.oracles import get_c_from_d
from quadconvex.quadapi.types import CertificateKind

C1 = np.array([1.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def test_boundary_certificate_of_first_example(ex1):
    certificate = nonconvexity.check_boundary_nonconvexity(ex1, C1)
    assert certificate is not None
    assert certificate.kind is CertificateKind.inhomogeneous
    assert certificate.kernel_dim == 1
    assert_allclose(np.abs(certificate.x0), np.array([2.0, 1.0, 1.0]) / np.sqrt(6.0), atol=1e-10)
    assert_allclose(certificate.x_b, -np.ones(3) / 3, atol=1e-10)
    assert_allclose(certificate.u, [0.0, 2.5, 1.0], atol=1e-10)
    # v flips sign with x0
    assert_allclose(np.abs(certificate.v), [0.0, 1 / np.sqrt(6.0), 0.0], atol=1e-10)
    assert certificate.defect > 0.1
    assert nonconvexity.verify_nonconvexity(ex1, certificate)


def test_definite_normal_has_no_certificate(ex1):
    assert nonconvexity.check_boundary_nonconvexity(ex1, E3) is None


def test_indefinite_normal_has_no_certificate(ex1):
    assert nonconvexity.check_boundary_nonconvexity(ex1, [-1.0, 0.0, 0.0]) is None


def test_complex_certificate(ex3):
    c = np.array([0.0, 0.0, -1.0, -1.0]) / np.sqrt(2.0)
    certificate = nonconvexity.check_boundary_nonconvexity(ex3, c)
    assert certificate is not None
    assert certificate.kernel_dim == 1
    assert nonconvexity.verify_nonconvexity(ex3, certificate)


def test_certificate_kind_must_match_map(ex1, ex10):
    with pytest.raises(HomogeneousMapError):
        nonconvexity.check_boundary_nonconvexity(ex10, [0.0, 0.0, 0.0, 1.0])
    with pytest.raises(InhomogeneousMapError):
        nonconvexity.check_homogeneous_nonconvexity(ex1, C1)


def test_homogeneous_certificate_on_planar_kernel(planar_kernel):
    certificate = nonconvexity.check_homogeneous_nonconvexity(planar_kernel, [0.0, 0.0, 0.0, 1.0])
    assert certificate is not None
    assert certificate.kind is CertificateKind.homogeneous
    assert certificate.kernel_dim == 2
    assert certificate.x1 is not None
    assert certificate.defect > 0.1
    assert nonconvexity.verify_nonconvexity(planar_kernel, certificate)


def test_two_dimensional_image_has_no_certificate(load_map, monkeypatch):
    qmap = load_map("dines")
    for c in ([1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 2.0]):
        assert nonconvexity.check_homogeneous_nonconvexity(qmap, c) is None
    calls = []

    def counting(*args, **kwargs):
        calls.append(args[2])
        return get_c_from_d(*args, **kwargs)

    monkeypatch.setattr(nonconvexity, "get_c_from_d", counting)
    assert nonconvexity.nonconvexity_certificate(qmap, max_iters=200) is None
    assert len(calls) == 200


def test_polish_returns_to_c_minus(ex1):
    start = C1 + 1e-3 * np.array([0.0, 1.0, -1.0])
    point = nonconvexity.polish_c_minus(ex1, start)
    assert point is not None
    assert point.kernel_dim == 1
    assert_allclose(point.p, C1, atol=1e-8)
    assert point.residual < 1e-8


def test_polish_stays_on_unit_sphere(ex1):
    point = nonconvexity.polish_c_minus(ex1, 3.0 * C1)
    assert point is not None
    assert np.linalg.norm(point.p) == pytest.approx(1.0)


def test_get_c_minus(ex1):
    point = nonconvexity.get_c_minus(ex1, seed=1, c_plus=E3)
    assert point is not None
    assert point.kernel_dim == 1
    eig = linalg.hermitian_eig(ex1.pencil(point.p))
    assert abs(eig.lambda_min) <= 1e-8 * eig.scale
    assert abs(np.vdot(point.x0, ex1.linear(point.p))) < 1e-7


def test_c_minus_points_are_reproducible(ex1):
    first = [point.iteration for point in nonconvexity.iter_c_minus(ex1, seed=4, max_iters=15, c_plus=E3)]
    second = [point.iteration for point in nonconvexity.iter_c_minus(ex1, seed=4, max_iters=15, c_plus=E3)]
    assert first == second


def test_certificate_search_on_first_example(ex1):
    certificate = nonconvexity.nonconvexity_certificate(ex1, seed=1, c_plus=E3)
    assert certificate is not None
    assert certificate.kind is CertificateKind.inhomogeneous
    assert nonconvexity.verify_nonconvexity(ex1, certificate)


def test_convex_paraboloid_has_no_certificate(load_map):
    assert nonconvexity.nonconvexity_certificate(load_map("paraboloid"), max_iters=20) is None


@pytest.mark.slow
def test_certificate_search_on_homogeneous_example(ex10):
    certificate = nonconvexity.nonconvexity_certificate(ex10, seed=0, c_plus=[0.0, 0.0, 0.0, 1.0])
    assert certificate is not None
    assert certificate.kind is CertificateKind.homogeneous
    assert nonconvexity.verify_nonconvexity(ex10, certificate)
