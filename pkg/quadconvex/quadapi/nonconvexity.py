"""Stochastic detection and certification of boundary non-convexities.

Supporting normals of G are sampled along random directions. Normals on the
boundary of the definite cone K whose kernel is orthogonal to c.b form the set
C-, and every such normal with a one dimensional kernel and non-collinear
witness vectors certifies a non-convex boundary of F. Homogeneous maps carry
their non-convexities at normals with a two dimensional kernel instead.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass
import logging

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize

from . import linalg
from .errors import (
    HomogeneousMapError,
    IndeterminateError,
    InhomogeneousMapError,
    NoSupportingHyperplaneError,
)
from .oracles import get_c_from_d
from .quadmap import (
    QuadraticMap,
    find_definite_direction,
    is_b_trivial,
    normalize_for_cut,
    translate,
)
from .sampling import derived_rng, random_direction
from .types import (
    DEFAULT_DESCENT,
    DEFAULT_TOLERANCES,
    CertificateKind,
    DescentConfig,
    ToleranceConfig,
)

_LOGGER: logging.Logger = logging.getLogger(__name__)

# Convergence of the Newton polish onto C-
POLISH_EIGEN_TOL: float = 1e-11
POLISH_ORTHO_TOL: float = 1e-9
# Largest Newton correction of a unit normal
MAX_NEWTON_STEP: float = 0.5


@dataclass(frozen=True, eq=False)
class CMinusPoint:
    """Normal c whose projection p onto the boundary of K lies in C-."""

    c: np.ndarray
    p: np.ndarray
    x0: np.ndarray
    kernel_dim: int
    residual: float
    iteration: int = 0


@dataclass(frozen=True, eq=False)
class NonconvexityCertificate:
    """Witness data proving that the boundary of F is non-convex along c."""

    kind: CertificateKind
    c: np.ndarray
    x0: np.ndarray
    u: np.ndarray
    v: np.ndarray
    defect: float
    kernel_dim: int
    x1: np.ndarray | None = None
    x_b: np.ndarray | None = None
    w: np.ndarray | None = None


def _quadratic_forms(qmap: QuadraticMap, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Return the m-vector of left* A_k right."""
    return np.einsum("i,kij,j->k", left.conj(), qmap.A, right)


def _psd_kernel(eig: linalg.EigDecomposition, tolerances: ToleranceConfig) -> np.ndarray | None:
    """Return the kernel basis of a positive semidefinite pencil, None when it is indefinite."""
    if eig.lambda_min < -tolerances.kernel_tol * eig.scale:
        return None
    return eig.eigenvectors[:, eig.zero_mask(tolerances.kernel_tol)]


def _b_scale(qmap: QuadraticMap) -> float:
    return 1.0 + float(np.linalg.norm(qmap.b))


def _supports_certificate(qmap: QuadraticMap, homogeneous: bool = False) -> bool:
    # Homogeneous maps with m = 2 are sampled, their witness vectors are always dependent
    if qmap.n < 2 or (qmap.m < 3 and not homogeneous):
        _LOGGER.debug("Map '%s' with m = %s, n = %s carries no certificate", qmap.name, qmap.m, qmap.n)
        return False
    return True


def _inhomogeneous_certificate(
    qmap: QuadraticMap, c, tolerances: ToleranceConfig
) -> NonconvexityCertificate | None:
    c = qmap.coefficients(c)
    pencil = qmap.pencil(c)
    eig = linalg.hermitian_eig(pencil)
    kernel = _psd_kernel(eig, tolerances)
    if kernel is None or kernel.shape[1] != 1:
        _LOGGER.debug(
            "No certificate at %s: kernel dimension %s",
            c,
            None if kernel is None else kernel.shape[1],
        )
        return None
    x0 = kernel[:, 0]
    cb = qmap.linear(c)
    x_b = -linalg.spectral_pseudo_inverse(eig, tolerances.kernel_tol) @ cb
    residual = float(np.linalg.norm(pencil @ x_b + cb))
    if residual > tolerances.orthogonality_tol * _b_scale(qmap):
        _LOGGER.debug("No certificate at %s: (c.A) x_b = -c.b residual %.3e", c, residual)
        return None
    u = _quadratic_forms(qmap, x0, x0).real
    v = _quadratic_forms(qmap, x_b, x0) + qmap.b.conj() @ x0
    if qmap.is_complex:
        defect = linalg.collinearity_defect(u, v.real, v.imag)
    else:
        v = v.real
        defect = linalg.collinearity_defect(u, v)
    if defect < tolerances.collinearity_tol:
        _LOGGER.debug("No certificate at %s: witness vectors collinear (%.3e)", c, defect)
        return None
    return NonconvexityCertificate(
        kind=CertificateKind.inhomogeneous,
        c=c,
        x0=x0,
        u=u,
        v=v,
        defect=defect,
        kernel_dim=1,
        x_b=x_b,
    )


def check_boundary_nonconvexity(
    qmap: QuadraticMap, c, tolerances: ToleranceConfig = DEFAULT_TOLERANCES
) -> NonconvexityCertificate | None:
    """Certify a non-convex boundary of F along c for a map with non-trivial b."""
    if not _supports_certificate(qmap):
        return None
    if is_b_trivial(qmap, tolerances.triviality_tol).trivial:
        raise HomogeneousMapError(
            f"Map '{qmap.name}' has trivial b, use the homogeneous certificate"
        )
    return _inhomogeneous_certificate(qmap, c, tolerances)


def _homogeneous_certificate(
    qmap: QuadraticMap, c, tolerances: ToleranceConfig
) -> NonconvexityCertificate | None:
    c = qmap.coefficients(c)
    eig = linalg.hermitian_eig(qmap.pencil(c))
    kernel = _psd_kernel(eig, tolerances)
    if kernel is None or kernel.shape[1] != 2:
        return None
    x0, x1 = kernel[:, 0], kernel[:, 1]
    u = _quadratic_forms(qmap, x0, x0).real
    v = _quadratic_forms(qmap, x1, x1).real
    w = _quadratic_forms(qmap, x0, x1)
    if qmap.is_complex:
        measure = linalg.independence_measure(u, v, w.real, w.imag)
    else:
        w = w.real
        measure = linalg.independence_measure(u, v, w)
    if measure <= tolerances.independence_tol:
        _LOGGER.debug("No certificate at %s: witness vectors dependent (%.3e)", c, measure)
        return None
    return NonconvexityCertificate(
        kind=CertificateKind.homogeneous,
        c=c,
        x0=x0,
        u=u,
        v=v,
        defect=measure,
        kernel_dim=2,
        x1=x1,
        w=w,
    )


def check_homogeneous_nonconvexity(
    qmap: QuadraticMap, c, tolerances: ToleranceConfig = DEFAULT_TOLERANCES
) -> NonconvexityCertificate | None:
    """Certify a non-convex boundary of F along c for a map with trivial b."""
    if not _supports_certificate(qmap, homogeneous=True):
        return None
    if not is_b_trivial(qmap, tolerances.triviality_tol).trivial:
        raise InhomogeneousMapError(
            f"Map '{qmap.name}' has non-trivial b, use the inhomogeneous certificate"
        )
    return _homogeneous_certificate(qmap, c, tolerances)


def verify_nonconvexity(
    qmap: QuadraticMap,
    certificate: NonconvexityCertificate,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
) -> bool:
    """Recompute a certificate from its stored normal alone."""
    if certificate.kind is CertificateKind.homogeneous:
        return _homogeneous_certificate(qmap, certificate.c, tolerances) is not None
    return _inhomogeneous_certificate(qmap, certificate.c, tolerances) is not None


def polish_c_minus(
    qmap: QuadraticMap,
    c,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    descent: DescentConfig = DEFAULT_DESCENT,
    iteration: int = 0,
) -> CMinusPoint | None:
    """Newton correction of an approximate normal onto lambda_min(c.A) = 0, x0*(c.b) = 0."""
    c = linalg.unit(qmap.coefficients(c))
    bscale = _b_scale(qmap)
    for step in range(descent.polish_iters + 1):
        eig = linalg.hermitian_eig(qmap.pencil(c))
        values, vecs = eig.eigenvalues, eig.eigenvectors
        lam0 = eig.lambda_min
        if values.size > 1 and values[1] - lam0 <= tolerances.kernel_tol * eig.scale:
            _LOGGER.debug("Polish stopped at %s: kernel is not one dimensional", c)
            return None
        x0 = vecs[:, 0]
        cb = qmap.linear(c)
        w = np.vdot(x0, cb)
        if abs(lam0) <= POLISH_EIGEN_TOL * eig.scale and abs(w) <= POLISH_ORTHO_TOL * bscale:
            _LOGGER.debug("Polished %s onto C- in %s steps", c, step)
            return CMinusPoint(
                c=c, p=c, x0=x0, kernel_dim=1, residual=float(abs(w)), iteration=iteration
            )
        rest = vecs[:, 1:]
        qinv = (rest / (values[1:] - lam0)) @ rest.conj().T
        v = qinv @ cb
        u = _quadratic_forms(qmap, x0, x0).real
        n = qmap.b @ x0.conj() - _quadratic_forms(qmap, x0, v)
        rows = [u, n.real]
        rhs = [-lam0, -w.real]
        if qmap.is_complex:
            rows.append(n.imag)
            rhs.append(-w.imag)
        rows.append(c)
        rhs.append(0.0)
        delta = linalg.min_norm_solve(np.vstack(rows), np.array(rhs))
        size = float(np.linalg.norm(delta))
        if size > MAX_NEWTON_STEP:
            delta *= MAX_NEWTON_STEP / size
        c = linalg.unit(c + delta)
    _LOGGER.debug("Polish of %s did not converge", c)
    return None


def _close_eigen_gap(
    normalized: QuadraticMap,
    c_plus: np.ndarray,
    start: np.ndarray,
    tolerances: ToleranceConfig,
    descent: DescentConfig,
) -> np.ndarray | None:
    """Move a boundary normal within the sphere of c_plus^perp until the two lowest eigenvalues of c.A meet.

    Works in normalized coordinates, c_plus.A = I, and returns the projection
    p = c - c_plus lambda_min(c.A) of the crossing, or None when no crossing
    was reached.
    """
    basis = null_space(c_plus[None, :])
    theta = basis.T @ start
    if float(np.linalg.norm(theta)) <= linalg.ZERO_VECTOR_TOL:
        return None

    def gap(coords: np.ndarray) -> float:
        norm = float(np.linalg.norm(coords))
        if norm == 0.0:
            return np.inf
        values = np.linalg.eigvalsh(normalized.pencil(basis @ coords / norm))
        return float(values[1] - values[0])

    result = minimize(
        gap,
        theta / np.linalg.norm(theta),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 400 * basis.shape[1]},
    )
    c = linalg.unit(basis @ result.x)
    for _ in range(descent.polish_iters):
        eig = linalg.hermitian_eig(normalized.pencil(c))
        split = float(eig.eigenvalues[1] - eig.eigenvalues[0])
        if split <= POLISH_EIGEN_TOL * eig.scale:
            break
        x0, x1 = eig.eigenvectors[:, 0], eig.eigenvectors[:, 1]
        u = _quadratic_forms(normalized, x0, x0).real
        v = _quadratic_forms(normalized, x1, x1).real
        w = _quadratic_forms(normalized, x0, x1)
        rows = [v - u, w.real]
        if normalized.is_complex:
            rows.append(w.imag)
        rows.extend([c, c_plus])
        rhs = np.zeros(len(rows))
        rhs[0] = -split
        delta = linalg.min_norm_solve(np.vstack(rows), rhs)
        size = float(np.linalg.norm(delta))
        if size > MAX_NEWTON_STEP:
            delta *= MAX_NEWTON_STEP / size
        c = linalg.unit(c + delta)
    eig = linalg.hermitian_eig(normalized.pencil(c))
    if eig.eigenvalues[1] - eig.eigenvalues[0] > tolerances.kernel_tol * eig.scale:
        _LOGGER.debug("Eigenvalue gap stayed open at %.3e", eig.eigenvalues[1] - eig.eigenvalues[0])
        return None
    return linalg.unit(c - c_plus * eig.lambda_min)


def _support_normals(
    qmap: QuadraticMap, y: np.ndarray, seed: int, max_iters: int, tolerances: ToleranceConfig
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (iteration, unit supporting normal) for random directions from y."""
    for index in range(max_iters):
        d = random_direction(derived_rng(seed, index), qmap.m)
        try:
            support = get_c_from_d(qmap, y, d, tolerances)
        except (NoSupportingHyperplaneError, IndeterminateError) as err:
            _LOGGER.debug("Iteration %s skipped: %s", index, err)
            continue
        if float(np.linalg.norm(support.c)) <= linalg.ZERO_VECTOR_TOL:
            continue
        yield index, support.unit


class _Classifier:
    """Projection of sampled normals onto the boundary of K and the C- test."""

    def __init__(
        self,
        qmap: QuadraticMap,
        c_plus,
        homogeneous: bool,
        tolerances: ToleranceConfig,
        descent: DescentConfig,
    ) -> None:
        self.qmap = qmap
        self.homogeneous = homogeneous
        self.tolerances = tolerances
        self.descent = descent
        self.c_plus = None
        self.factor = None
        self.normalized = None
        if c_plus is not None:
            self.c_plus = linalg.unit(qmap.coefficients(c_plus))
            self.factor = linalg.factor_posdef(qmap.pencil(self.c_plus), tolerances.rank_tol)
            if homogeneous and qmap.m >= 3:
                self.normalized, _ = normalize_for_cut(qmap, self.c_plus, tolerances)

    def project(self, c: np.ndarray) -> np.ndarray | None:
        """Return the unit projection p(c) onto the boundary of K."""
        if self.c_plus is None:
            return c
        p = c - self.c_plus * linalg.generalized_lambda_min(self.qmap.pencil(c), self.factor)
        if float(np.linalg.norm(p)) <= linalg.ZERO_VECTOR_TOL:
            return None
        return linalg.unit(p)

    def __call__(self, index: int, c: np.ndarray) -> CMinusPoint | None:
        p = self.project(c)
        if p is None:
            return None
        if self.homogeneous:
            return self._homogeneous(index, c, p)
        return self._inhomogeneous(index, c, p)

    def _inhomogeneous(self, index: int, c: np.ndarray, p: np.ndarray) -> CMinusPoint | None:
        tol = self.tolerances
        qmap = self.qmap
        eig = linalg.hermitian_eig(qmap.pencil(p))
        screen = tol.screen_tol * eig.scale
        if eig.lambda_min < -screen or eig.lambda_min > screen:
            return None
        cb = qmap.linear(p)
        bscale = _b_scale(qmap)
        kernel = _psd_kernel(eig, tol)
        if kernel is not None and kernel.shape[1] >= 2:
            residual = float(np.linalg.norm(kernel.conj().T @ cb))
            if residual > tol.orthogonality_tol * bscale:
                return None
            return CMinusPoint(
                c=c, p=p, x0=kernel[:, 0], kernel_dim=kernel.shape[1], residual=residual, iteration=index
            )
        if abs(np.vdot(eig.eigenvectors[:, 0], cb)) > tol.screen_tol * bscale:
            return None
        point = polish_c_minus(qmap, p, tol, self.descent, iteration=index)
        if point is None:
            return None
        polished = linalg.hermitian_eig(qmap.pencil(point.p))
        kernel = _psd_kernel(polished, tol)
        if kernel is None or kernel.shape[1] != 1 or point.residual > tol.orthogonality_tol * bscale:
            return None
        return CMinusPoint(
            c=c, p=point.p, x0=point.x0, kernel_dim=1, residual=point.residual, iteration=index
        )

    def _homogeneous(self, index: int, c: np.ndarray, p: np.ndarray) -> CMinusPoint | None:
        qmap = self.qmap
        if self.normalized is not None:
            crossing = _close_eigen_gap(
                self.normalized, self.c_plus, p, self.tolerances, self.descent
            )
            if crossing is None:
                return None
            p = crossing
        eig = linalg.hermitian_eig(qmap.pencil(p))
        kernel = _psd_kernel(eig, self.tolerances)
        if kernel is None or kernel.shape[1] != 2:
            return None
        return CMinusPoint(
            c=c,
            p=p,
            x0=kernel[:, 0],
            kernel_dim=2,
            residual=float(eig.eigenvalues[1] - eig.eigenvalues[0]),
            iteration=index,
        )


def iter_c_minus(
    qmap: QuadraticMap,
    y=None,
    seed: int = 0,
    max_iters: int = 100,
    c_plus=None,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    descent: DescentConfig = DEFAULT_DESCENT,
) -> Iterator[CMinusPoint]:
    """Yield every C- point found while sampling max_iters random directions from y.

    Iteration i draws its direction from the stream (seed, i). For maps with
    trivial b the search runs on the translated homogeneous map, C- then asks
    for a two dimensional kernel and y defaults to the sphere average tr(A_k)/n.
    Otherwise y defaults to f(0) = 0.
    """
    triviality = is_b_trivial(qmap, tolerances.triviality_tol)
    work = qmap
    if triviality.trivial:
        work, offset = translate(qmap, -triviality.witness)
        if y is None:
            y = np.trace(qmap.A, axis1=1, axis2=2).real / qmap.n
        else:
            y = qmap.coefficients(y) - offset
    y = np.zeros(qmap.m) if y is None else qmap.coefficients(y)
    classify = _Classifier(work, c_plus, triviality.trivial, tolerances, descent)
    for index, c in _support_normals(work, y, seed, max_iters, tolerances):
        point = classify(index, c)
        if point is not None:
            _LOGGER.debug(
                "Iteration %s hit C- at %s (kernel dimension %s)", index, point.p, point.kernel_dim
            )
            yield point


def get_c_minus(
    qmap: QuadraticMap,
    y=None,
    seed: int = 0,
    max_iters: int = 100,
    c_plus=None,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    descent: DescentConfig = DEFAULT_DESCENT,
) -> CMinusPoint | None:
    """Return the first C- point of the sampling loop, None after max_iters directions."""
    return next(iter_c_minus(qmap, y, seed, max_iters, c_plus, tolerances, descent), None)


def nonconvexity_certificate(
    qmap: QuadraticMap,
    seed: int = 0,
    max_iters: int = 100,
    c_plus=None,
    base_point=None,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    descent: DescentConfig = DEFAULT_DESCENT,
) -> NonconvexityCertificate | None:
    """Search a certificate of non-convexity of F, None when max_iters directions find none."""
    homogeneous = is_b_trivial(qmap, tolerances.triviality_tol).trivial
    if not _supports_certificate(qmap, homogeneous):
        return None
    if c_plus is None:
        c_plus = find_definite_direction(qmap, tolerances)
    check = _homogeneous_certificate if homogeneous else _inhomogeneous_certificate
    for point in iter_c_minus(qmap, base_point, seed, max_iters, c_plus, tolerances, descent):
        certificate = check(qmap, point.p, tolerances)
        if certificate is not None:
            _LOGGER.info(
                "Map '%s' is non-convex: %s certificate at %s after %s iterations",
                qmap.name,
                certificate.kind.value,
                certificate.c,
                point.iteration + 1,
            )
            return certificate
    _LOGGER.info("No certificate for map '%s' after %s iterations", qmap.name, max_iters)
    return None
