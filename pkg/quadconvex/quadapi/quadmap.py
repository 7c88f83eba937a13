"""Quadratic maps, their lifting and the coordinate changes used by the convex cut."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from . import linalg, sdpcore
from .errors import DimensionMismatchError, InvalidInputError, NotDefiniteError, SchemaError
from .types import DEFAULT_TOLERANCES, FieldTag, ToleranceConfig

_LOGGER: logging.Logger = logging.getLogger(__name__)

# Relative bound on the imaginary residue of x*A x for hermitian A
IMAG_RESIDUE_TOL: float = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QuadraticMap:
    """Family of quadratic forms f_k(x) = x*A_k x + b_k*x + x*b_k over R^n or C^n."""

    field: FieldTag
    A: np.ndarray
    b: np.ndarray
    name: str = ""
    hermitian_deviation: float = 0.0

    def __post_init__(self) -> None:
        """Validate dimensions and store read-only arrays of the field's dtype."""
        dtype = complex if self.field is FieldTag.complex else float
        A = np.asarray(self.A)
        b = np.asarray(self.b)
        if self.field is FieldTag.real and (
            np.iscomplexobj(A) and np.any(A.imag) or np.iscomplexobj(b) and np.any(b.imag)
        ):
            raise InvalidInputError("Real map with complex entries")
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise DimensionMismatchError(f"A must hold m square matrices, got shape {A.shape}")
        m, n = A.shape[0], A.shape[1]
        if m < 1 or n < 1:
            raise DimensionMismatchError("Map needs m >= 1 and n >= 1")
        if b.shape != (m, n):
            raise DimensionMismatchError(f"b must have shape {(m, n)}, got {b.shape}")
        A = A.real.astype(float) if dtype is float else A.astype(complex)
        b = b.real.astype(float) if dtype is float else b.astype(complex)
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "b", _freeze(b))

    @classmethod
    def from_arrays(
        cls,
        field: FieldTag,
        A,
        b,
        name: str = "",
        tol: float = linalg.HERMITIAN_TOL,
    ) -> QuadraticMap:
        """Create a map, symmetrizing every A_k and recording the largest deviation."""
        mats = np.asarray(A)
        if mats.ndim != 3:
            raise DimensionMismatchError(f"A must hold m square matrices, got shape {mats.shape}")
        deviation = max((linalg.hermitian_deviation(mat) for mat in mats), default=0.0)
        if deviation > tol:
            raise InvalidInputError(
                f"Matrices of map '{name}' are not hermitian, deviation {deviation:.3e} exceeds {tol:.1e}"
            )
        sym = np.stack([(mat + mat.conj().T) / 2 for mat in mats])
        return cls(field=field, A=sym, b=b, name=name, hermitian_deviation=deviation)

    @property
    def m(self) -> int:
        """Image dimension."""
        return int(self.A.shape[0])

    @property
    def n(self) -> int:
        """Domain dimension."""
        return int(self.A.shape[1])

    @property
    def is_complex(self) -> bool:
        """True for maps over C^n."""
        return self.field is FieldTag.complex

    def coefficients(self, c) -> np.ndarray:
        """Return a validated real m-vector."""
        arr = np.asarray(c, dtype=float).ravel()
        if arr.shape != (self.m,):
            raise DimensionMismatchError(f"Expected {self.m} coefficients, got {arr.size}")
        return arr

    def point(self, x) -> np.ndarray:
        """Return a validated domain vector of the map's field."""
        arr = np.asarray(x).ravel()
        if arr.shape != (self.n,):
            raise DimensionMismatchError(f"Expected a point of dimension {self.n}, got {arr.size}")
        if not self.is_complex:
            if np.iscomplexobj(arr) and np.any(arr.imag):
                raise InvalidInputError("Complex point for a real map")
            return arr.real.astype(float)
        return arr.astype(complex)

    def pencil(self, c) -> np.ndarray:
        """Return c.A = sum_k c_k A_k."""
        return np.tensordot(self.coefficients(c), self.A, axes=1)

    def linear(self, c) -> np.ndarray:
        """Return c.b = sum_k c_k b_k."""
        return self.coefficients(c) @ self.b


@dataclass(frozen=True, eq=False)
class LiftedFamily:
    """Hermitian (n+1)x(n+1) matrices H_k = [[A_k, b_k], [b_k*, 0]]."""

    H: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Return the m-vector of <H_k, X> = Re tr(H_k X)."""
        return np.einsum("kij,ji->k", self.H, X).real

    def combination(self, c, corner: float = 0.0) -> np.ndarray:
        """Return sum_k c_k H_k with the given value in the corner entry."""
        mat = np.tensordot(np.asarray(c, dtype=float), self.H, axes=1)
        mat[-1, -1] = corner
        return mat


@dataclass(frozen=True, eq=False)
class Triviality:
    """Outcome of the least-squares test A_k x0 = b_k for all k."""

    trivial: bool
    witness: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class CutTransform:
    """Change of variables x = x0 + Lambda^-1 xi, y = y'' + image_shift with c_plus.A = I afterwards."""

    shift: np.ndarray
    factor: np.ndarray
    image_shift: np.ndarray
    c_plus: np.ndarray
    factor_inv: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        """Cache the inverse factor."""
        if self.factor_inv is None:
            object.__setattr__(self, "factor_inv", np.linalg.inv(self.factor))

    def to_normalized_point(self, x) -> np.ndarray:
        """Map an original domain point to normalized coordinates."""
        return self.factor @ (np.asarray(x) - self.shift)

    def from_normalized_point(self, xi) -> np.ndarray:
        """Map a normalized domain point back to original coordinates."""
        return self.shift + self.factor_inv @ np.asarray(xi)

    def to_normalized_image(self, y) -> np.ndarray:
        """Map an original image point to normalized coordinates."""
        return np.asarray(y, dtype=float) - self.image_shift

    def from_normalized_image(self, y) -> np.ndarray:
        """Map a normalized image point back to original coordinates."""
        return np.asarray(y, dtype=float) + self.image_shift

    @property
    def shift_norm(self) -> float:
        """Return |x0|_+^2 = -c_plus . f(x0)."""
        return float(-self.c_plus @ self.image_shift)

    def cut_level(self, z: float) -> float:
        """Return the threshold of the convex cut {c_plus . y <= level} in original image coordinates."""
        return float(z) - self.shift_norm


def evaluate(qmap: QuadraticMap, x) -> np.ndarray:
    """Return f(x) in R^m."""
    x = qmap.point(x)
    quad = np.einsum("i,kij,j->k", x.conj(), qmap.A, x)
    if qmap.is_complex:
        bound = IMAG_RESIDUE_TOL * max(1.0, float(np.max(np.abs(qmap.A)))) * max(
            1.0, float(np.vdot(x, x).real)
        ) * qmap.n
        if np.any(np.abs(quad.imag) > bound):
            raise InvalidInputError("Imaginary residue of quadratic form exceeds tolerance")
    return quad.real + 2 * (qmap.b.conj() @ x).real


def evaluate_many(qmap: QuadraticMap, xs) -> np.ndarray:
    """Return f for each row of xs as an array of shape (count, m)."""
    pts = np.asarray(xs)
    if pts.ndim != 2 or pts.shape[1] != qmap.n:
        raise DimensionMismatchError(f"Expected points of dimension {qmap.n}")
    quad = np.einsum("pi,kij,pj->pk", pts.conj(), qmap.A, pts).real
    return quad + 2 * (pts @ qmap.b.conj().T).real


def lift(qmap: QuadraticMap) -> LiftedFamily:
    """Return the lifted family H_k whose linear image of rank one matrices is f."""
    n = qmap.n
    H = np.zeros((qmap.m, n + 1, n + 1), dtype=qmap.A.dtype)
    H[:, :n, :n] = qmap.A
    H[:, :n, n] = qmap.b
    H[:, n, :n] = qmap.b.conj()
    return LiftedFamily(H=H)


def is_b_trivial(qmap: QuadraticMap, tol: float = DEFAULT_TOLERANCES.triviality_tol) -> Triviality:
    """Test whether one x0 solves A_k x0 = b_k for all k in the least-squares sense."""
    stacked = qmap.A.reshape(qmap.m * qmap.n, qmap.n)
    rhs = qmap.b.reshape(qmap.m * qmap.n)
    witness, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    residual = float(np.linalg.norm(stacked @ witness - rhs))
    trivial = residual < tol * (1.0 + float(np.linalg.norm(rhs)))
    _LOGGER.debug("Triviality residual of map '%s': %.3e", qmap.name, residual)
    return Triviality(trivial=trivial, witness=witness, residual=residual)


def translate(qmap: QuadraticMap, shift) -> tuple[QuadraticMap, np.ndarray]:
    """Substitute x = xi + shift, returning the map in xi and the image offset f(shift)."""
    shift = qmap.point(shift)
    moved = QuadraticMap(
        field=qmap.field,
        A=qmap.A,
        b=qmap.b + np.einsum("kij,j->ki", qmap.A, shift),
        name=qmap.name,
        hermitian_deviation=qmap.hermitian_deviation,
    )
    return moved, evaluate(qmap, shift)


def find_definite_direction(
    qmap: QuadraticMap, tolerances: ToleranceConfig = DEFAULT_TOLERANCES
) -> np.ndarray | None:
    """Return a unit c_plus with c_plus.A positive definite, or None when the map is not definite."""
    problem = sdpcore.SdpProblem(
        size=qmap.n,
        field=qmap.field,
        free_count=qmap.m,
        lmi=sdpcore.LinearMatrixInequality(
            constant=np.zeros((qmap.n, qmap.n), dtype=qmap.A.dtype),
            coefficients=qmap.A,
        ),
    )
    witness = sdpcore.strict_feasibility(problem, tolerances.certificate_margin, tolerances)
    if witness is None:
        _LOGGER.info("Map '%s' is not definite", qmap.name)
        return None
    c_plus = linalg.unit(witness.values)
    if linalg.hermitian_eig(qmap.pencil(c_plus)).lambda_min <= 0:
        return None
    _LOGGER.info("Map '%s' is definite along %s", qmap.name, c_plus)
    return c_plus


def normalize_for_cut(
    qmap: QuadraticMap, c_plus, tolerances: ToleranceConfig = DEFAULT_TOLERANCES
) -> tuple[QuadraticMap, CutTransform]:
    """Change coordinates so that c_plus.A = I and c_plus.b = 0."""
    c_plus = linalg.unit(qmap.coefficients(c_plus))
    a_plus = qmap.pencil(c_plus)
    eig = linalg.hermitian_eig(a_plus)
    if eig.lambda_min <= tolerances.rank_tol * eig.scale:
        raise NotDefiniteError(
            f"c_plus.A has smallest eigenvalue {eig.lambda_min:.3e}, map '{qmap.name}' is not definite along c_plus"
        )
    shift = -np.linalg.solve(a_plus, qmap.linear(c_plus))
    moved, image_shift = translate(qmap, shift)
    factor = linalg.factor_posdef(a_plus, tolerances.rank_tol)
    inv = np.linalg.inv(factor)
    normalized = QuadraticMap.from_arrays(
        qmap.field,
        np.einsum("ij,kjl,lm->kim", inv, moved.A, inv),
        moved.b @ inv.T,
        name=qmap.name,
        tol=1e-7,
    )
    transform = CutTransform(
        shift=shift, factor=factor, image_shift=image_shift, c_plus=c_plus, factor_inv=inv
    )
    _LOGGER.debug(
        "Normalized map '%s': |x0|_+^2 = %.6g", qmap.name, transform.shift_norm
    )
    return normalized, transform


def real_embedding(qmap: QuadraticMap) -> QuadraticMap:
    """Rewrite a complex map over C^n as a real map over R^2n with the same image."""
    if not qmap.is_complex:
        raise InvalidInputError("Real embedding requires a complex map")
    re, im = qmap.A.real, qmap.A.imag
    A = np.block([[re, -im], [im, re]])
    b = np.concatenate([qmap.b.real, qmap.b.imag], axis=1)
    return QuadraticMap(field=FieldTag.real, A=A, b=b, name=f"{qmap.name} (real)")


def embed_point(x) -> np.ndarray:
    """Return (Re x, Im x), the point matching x under the real embedding."""
    arr = np.asarray(x)
    return np.concatenate([arr.real, arr.imag]).astype(float)


def _entry(value, path: str, field_tag: FieldTag):
    if isinstance(value, list | tuple):
        if len(value) != 2:
            raise SchemaError(f"{path}: complex entries are [re, im] pairs")
        real, imag = float(value[0]), float(value[1])
        if field_tag is FieldTag.real and imag != 0.0:
            raise SchemaError(f"{path}: complex entry in a real map")
        return complex(real, imag)
    return float(value)


def map_from_dict(data: dict, name: str = "") -> QuadraticMap:
    """Build a map from the validated JSON representation."""
    field_tag = FieldTag(data["field"])
    n, m = int(data["n"]), int(data["m"])
    mats, vecs = data["A"], data["b"]
    if len(mats) != m:
        raise SchemaError(f"A: expected {m} matrices, got {len(mats)}")
    if len(vecs) != m:
        raise SchemaError(f"b: expected {m} vectors, got {len(vecs)}")
    A = np.zeros((m, n, n), dtype=complex)
    b = np.zeros((m, n), dtype=complex)
    for k in range(m):
        if len(mats[k]) != n:
            raise SchemaError(f"A[{k}]: expected {n} rows, got {len(mats[k])}")
        for i, row in enumerate(mats[k]):
            if len(row) != n:
                raise SchemaError(f"A[{k}][{i}]: expected {n} entries, got {len(row)}")
            for j, value in enumerate(row):
                A[k, i, j] = _entry(value, f"A[{k}][{i}][{j}]", field_tag)
        if len(vecs[k]) != n:
            raise SchemaError(f"b[{k}]: expected {n} entries, got {len(vecs[k])}")
        for i, value in enumerate(vecs[k]):
            b[k, i] = _entry(value, f"b[{k}][{i}]", field_tag)
    if field_tag is FieldTag.real:
        A, b = A.real, b.real
    return QuadraticMap.from_arrays(field_tag, A, b, name=data.get("name", name))


def _plain(value):
    if isinstance(value, complex | np.complexfloating):
        return [float(value.real), float(value.imag)]
    return float(value)


def map_to_dict(qmap: QuadraticMap) -> dict:
    """Return the JSON representation of a map."""
    return {
        "name": qmap.name,
        "field": qmap.field.value,
        "n": qmap.n,
        "m": qmap.m,
        "A": [[[_plain(v) for v in row] for row in mat] for mat in qmap.A.tolist()],
        "b": [[_plain(v) for v in vec] for vec in qmap.b.tolist()],
    }
