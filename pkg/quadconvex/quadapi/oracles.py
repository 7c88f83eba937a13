"""Query primitives on the image F and its convex hull G.

G is the image of the lifted family over {X >= 0, X[n, n] = 1}. The oracles
decide relaxed membership, certify infeasibility with H(c) > 0, and compute
boundary points of G together with their supporting normals.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np

from . import linalg
from .errors import (
    IndeterminateError,
    InvalidInputError,
    NoSupportingHyperplaneError,
    NotInteriorPointError,
    QuadMapError,
    UnboundedError,
)
from .quadmap import QuadraticMap, lift
from .sdpcore import (
    EqualityConstraint,
    LinearMatrixInequality,
    SdpProblem,
    solve,
    strict_feasibility,
)
from .types import DEFAULT_TOLERANCES, Membership, OnF, SdpSense, SdpStatus, ToleranceConfig

_LOGGER: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InfeasibilityCertificate:
    """Vector c with H(c) positive definite, proving y0 lies outside G and F."""

    c: np.ndarray
    min_eigenvalue: float
    y0: np.ndarray


@dataclass(frozen=True, eq=False)
class BoundaryResult:
    """Farthest point y + t*d of G along a unit direction."""

    t: float
    point: np.ndarray
    X: np.ndarray
    rank_estimate: int
    on_f: OnF
    direction: np.ndarray


@dataclass(frozen=True, eq=False)
class SupportVector:
    """Normal c of a supporting hyperplane with c.d = -1, and the corner value gamma."""

    c: np.ndarray
    gamma: float
    value: float
    direction: np.ndarray
    # t of the primal boundary program read from the multiplier, nan if the solver gave none
    primal_t: float = float("nan")

    @property
    def unit(self) -> np.ndarray:
        """Normal scaled to unit length."""
        return linalg.unit(self.c)


def _corner(size: int, dtype) -> np.ndarray:
    mat = np.zeros((size, size), dtype=dtype)
    mat[-1, -1] = 1.0
    return mat


def certificate_matrix(qmap: QuadraticMap, c, y0) -> np.ndarray:
    """Return H(c) = [[c.A, c.b], [(c.b)*, -c.y0]]."""
    c = qmap.coefficients(c)
    return lift(qmap).combination(c, corner=-float(c @ qmap.coefficients(y0)))


def verify_certificate(qmap: QuadraticMap, certificate: InfeasibilityCertificate) -> bool:
    """Re-check H(c) > 0 by an independent eigendecomposition."""
    return linalg.hermitian_eig(certificate_matrix(qmap, certificate.c, certificate.y0)).lambda_min > 0


def _relaxation_constraints(qmap: QuadraticMap, y, direction=None) -> tuple[EqualityConstraint, ...]:
    """Constraints <H_k, X> (- d_k t) = y_k and X[n, n] = 1."""
    family = lift(qmap)
    cons = [
        EqualityConstraint(
            matrix=family.H[k],
            free=None if direction is None else np.array([-direction[k]]),
            rhs=float(y[k]),
        )
        for k in range(qmap.m)
    ]
    cons.append(
        EqualityConstraint(
            matrix=_corner(qmap.n + 1, family.H.dtype),
            free=None if direction is None else np.zeros(1),
            rhs=1.0,
        )
    )
    return tuple(cons)


def membership_relaxation(
    qmap: QuadraticMap, y0, tolerances: ToleranceConfig = DEFAULT_TOLERANCES
) -> Membership:
    """Decide whether y0 lies in G by feasibility of the lifted LMI system."""
    y0 = qmap.coefficients(y0)
    problem = SdpProblem(
        size=qmap.n + 1, field=qmap.field, constraints=_relaxation_constraints(qmap, y0)
    )
    solution = solve(problem, tolerances)
    if solution.status is SdpStatus.optimal:
        return Membership.in_g
    if solution.status is SdpStatus.infeasible:
        _LOGGER.debug("Lifted system for %s is infeasible (%s)", y0, solution.solver)
        return Membership.not_in_g
    _LOGGER.debug("Membership solve returned %s, consulting certificate search", solution.status.value)
    if infeasibility_oracle(qmap, y0, tolerances) is not None:
        return Membership.not_in_g
    raise IndeterminateError(
        f"Membership of {y0} undecided, {solution.status.value}: {solution.message}"
    )


def infeasibility_oracle(
    qmap: QuadraticMap, y0, tolerances: ToleranceConfig = DEFAULT_TOLERANCES
) -> InfeasibilityCertificate | None:
    """Search c with H(c) > margin * I, which proves y0 is not in F."""
    y0 = qmap.coefficients(y0)
    family = lift(qmap)
    coefficients = family.H.copy()
    coefficients[:, -1, -1] = -y0
    problem = SdpProblem(
        size=qmap.n + 1,
        field=qmap.field,
        free_count=qmap.m,
        lmi=LinearMatrixInequality(
            constant=np.zeros((qmap.n + 1, qmap.n + 1), dtype=coefficients.dtype),
            coefficients=coefficients,
        ),
    )
    try:
        witness = strict_feasibility(problem, tolerances.certificate_margin, tolerances)
    except QuadMapError as err:
        raise IndeterminateError(f"Infeasibility search failed: {err}") from err
    if witness is None:
        return None
    certificate = InfeasibilityCertificate(c=witness.values, min_eigenvalue=witness.level, y0=y0)
    if not verify_certificate(qmap, certificate):
        return None
    _LOGGER.info(
        "Point %s certified infeasible, lambda_min(H(c)) = %.6g", y0, certificate.min_eigenvalue
    )
    return certificate


def _direction(qmap: QuadraticMap, d) -> np.ndarray:
    d = qmap.coefficients(d)
    if float(np.linalg.norm(d)) == 0.0:
        raise InvalidInputError("Direction must be non-zero")
    return linalg.unit(d)


def boundary_oracle(
    qmap: QuadraticMap,
    y,
    d,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    check_membership: bool = True,
) -> BoundaryResult:
    """Return the largest t with y + t*d in G for the normalized direction d.

    The base point is tested for membership in G first unless the caller
    already knows it is interior.
    """
    y = qmap.coefficients(y)
    d = _direction(qmap, d)
    if check_membership and membership_relaxation(qmap, y, tolerances) is Membership.not_in_g:
        raise NotInteriorPointError(f"Base point {y} is not contained in G")
    problem = SdpProblem(
        size=qmap.n + 1,
        field=qmap.field,
        free_count=1,
        constraints=_relaxation_constraints(qmap, y, d),
        objective_free=np.ones(1),
        sense=SdpSense.maximize,
    )
    solution = solve(problem, tolerances)
    if solution.status is SdpStatus.unbounded:
        raise UnboundedError(f"G is unbounded along direction {d}")
    if solution.status is SdpStatus.infeasible:
        raise NotInteriorPointError(f"Line through {y} along {d} misses G")
    if solution.status is not SdpStatus.optimal:
        raise IndeterminateError(f"Boundary oracle solve failed: {solution.message}")
    t = float(solution.free[0])
    eigenvalues = np.linalg.eigvalsh(solution.X)[::-1]
    rank = int(np.count_nonzero(eigenvalues >= tolerances.rank_one_ratio * eigenvalues[0]))
    _LOGGER.debug("Boundary along %s at t = %.9g, rank estimate %s", d, t, rank)
    return BoundaryResult(
        t=t,
        point=y + t * d,
        X=solution.X,
        rank_estimate=rank,
        on_f=OnF.yes if rank == 1 else OnF.ambiguous,
        direction=d,
    )


def get_c_from_d(
    qmap: QuadraticMap, y, d, tolerances: ToleranceConfig = DEFAULT_TOLERANCES
) -> SupportVector:
    """Solve the dual of the boundary program: min gamma + c.y, c.d = -1, [[c.A, c.b], [(c.b)*, gamma]] >= 0."""
    y = qmap.coefficients(y)
    d = _direction(qmap, d)
    family = lift(qmap)
    size = qmap.n + 1
    coefficients = np.concatenate([family.H, _corner(size, family.H.dtype)[None]])
    problem = SdpProblem(
        size=size,
        field=qmap.field,
        free_count=qmap.m + 1,
        constraints=(EqualityConstraint(free=np.append(d, 0.0), rhs=-1.0),),
        objective_free=np.append(y, 1.0),
        sense=SdpSense.minimize,
        lmi=LinearMatrixInequality(
            constant=np.zeros((size, size), dtype=family.H.dtype), coefficients=coefficients
        ),
    )
    solution = solve(problem, tolerances)
    if solution.status in (SdpStatus.unbounded, SdpStatus.infeasible):
        raise NoSupportingHyperplaneError(
            f"No supporting hyperplane along {d} ({solution.status.value})"
        )
    if solution.status is not SdpStatus.optimal:
        raise IndeterminateError(f"Support vector solve failed: {solution.message}")
    c = solution.free[: qmap.m]
    gamma = float(solution.free[qmap.m])
    value = gamma + float(c @ y)
    primal_t = float("nan")
    if solution.dual_X is None:
        _LOGGER.debug("Solver %s returned no multiplier, duality gap unchecked", solution.solver)
    else:
        # The multiplier of X >= 0 is a primal X with H(X) = y + t*d and X[n, n] = 1
        primal = (solution.dual_X + solution.dual_X.conj().T) / 2
        primal_t = float(d @ (family.apply(primal) - y))
        if abs(primal_t - value) > tolerances.sdp_check_tol * (1.0 + abs(value)):
            raise IndeterminateError(
                f"Support vector along {d}: dual value {value:.9g} and primal t {primal_t:.9g} disagree"
            )
    return SupportVector(c=c, gamma=gamma, value=value, direction=d, primal_t=primal_t)
