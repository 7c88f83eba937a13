"""Define quadratic map analysis errors."""

from __future__ import annotations

from typing import TYPE_CHECKING

from .types import SdpStatus

if TYPE_CHECKING:
    from .sdpcore import SdpSolution


class QuadMapError(Exception):
    """Define a base error."""


class InvalidInputError(QuadMapError):
    """Invalid input error."""


class SchemaError(InvalidInputError):
    """Map or scenario file violates the schema."""


class DimensionMismatchError(InvalidInputError):
    """Vector or matrix dimensions do not match the map."""


class NotPositiveDefiniteError(QuadMapError):
    """Matrix is not positive definite."""


class NotDefiniteError(QuadMapError):
    """Map admits no positive definite combination for the given direction."""


class HomogeneousMapError(QuadMapError):
    """Linear terms are trivial, use the homogeneous variant."""


class InhomogeneousMapError(QuadMapError):
    """Linear terms are not trivial, use the inhomogeneous variant."""


class TrivialBError(QuadMapError):
    """Linear terms are zero or trivial, no convex cut exists."""


class NotInteriorPointError(QuadMapError):
    """Base point is not contained in the convex hull of the image."""


class UnboundedError(QuadMapError):
    """Convex hull of the image is unbounded along the direction."""


class InfeasibleProblemError(QuadMapError):
    """Semidefinite program is infeasible."""


class NumericalTroubleError(QuadMapError):
    """Solver did not reach a verified solution."""


class IndeterminateError(QuadMapError):
    """Question could not be decided within tolerances."""


class NoSupportingHyperplaneError(QuadMapError):
    """No supporting hyperplane exists for the direction."""


class NoCMinusFoundError(QuadMapError):
    """No singular pencil with orthogonal kernel was found."""


class KernelDimExceededError(QuadMapError):
    """Kernel dimension of the projected pencil is not one."""


class DegenerateNormalsError(QuadMapError):
    """Normals of the constraint manifold are degenerate."""


class DimensionUnsupportedError(QuadMapError):
    """Operation is not supported for this map dimension."""


ERRORS: dict[SdpStatus, type[QuadMapError]] = {
    SdpStatus.infeasible: InfeasibleProblemError,
    SdpStatus.unbounded: UnboundedError,
    SdpStatus.numerical_trouble: NumericalTroubleError,
}


def raise_for_status(solution: SdpSolution, prefix: str = "SDP Error") -> None:
    """Raise the appropriate error based upon the status of a solver result."""
    if error := ERRORS.get(solution.status):
        raise error(f"({solution.status.value}) {prefix}: {solution.message or 'no solver message'}")
