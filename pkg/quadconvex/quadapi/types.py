"""Enumerations and default definitions shared by the analysis modules."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from enum import Enum
import logging
from typing import ClassVar

_LOGGER: logging.Logger = logging.getLogger(__name__)


class FieldTag(Enum):
    """Enumeration of the scalar field a quadratic map is defined over."""

    real = "real"
    complex = "complex"


class SdpSense(Enum):
    """Enumeration of semidefinite program objective senses."""

    minimize = "min"
    maximize = "max"
    feasibility = "feasibility"


class SdpStatus(Enum):
    """Enumeration of semidefinite program outcomes."""

    optimal = "Optimal"
    infeasible = "Infeasible"
    unbounded = "Unbounded"
    numerical_trouble = "NumericalTrouble"


class Membership(Enum):
    """Enumeration of answers of the convex relaxation membership test."""

    in_g = "InG"
    not_in_g = "NotInG"


class OnF(Enum):
    """Enumeration for whether a boundary point of the hull lies on the image."""

    yes = "Yes"
    no = "No"  # never reported from the primal program alone
    ambiguous = "Ambiguous"


class CertificateKind(Enum):
    """Enumeration of non-convexity certificate kinds."""

    inhomogeneous = "Inhomogeneous"
    homogeneous = "Homogeneous"


class Termination(Enum):
    """Enumeration of descent termination reasons."""

    gradient_collinear_with_normal = "GradientCollinearWithNormal"
    kernel_dim_exceeded = "KernelDimExceeded"
    step_underflow = "StepUnderflow"
    iter_cap = "IterCap"
    degenerate_normals = "DegenerateNormals"


class Topology(Enum):
    """Enumeration of traced component shapes."""

    loop = "loop"
    interval = "interval"
    incomplete = "incomplete"


def _clamped(cls, name: str, value, lower, upper):
    """Clamp a configuration value into its supported range and log adjustments."""
    clamped = type(value)(min(upper, max(lower, value)))
    if clamped != value:
        _LOGGER.warning(
            "%s.%s value %s out of range, using %s", cls.__name__, name, value, clamped
        )
    return clamped


@dataclass(frozen=True)
class ToleranceConfig:
    """Dataclass for the numerical tolerances used by every analysis."""

    # Relative eigenvalue threshold for rank decisions of general matrices
    rank_tol: float = 1e-8
    # Relative eigenvalue threshold for the kernel of singular pencils
    kernel_tol: float = 1e-7
    # Absolute threshold for x0*(c.b) = 0, scaled by 1 + |b|
    orthogonality_tol: float = 1e-7
    # Sine of principal angle below which witness vectors count as collinear
    collinearity_tol: float = 1e-6
    # Smallest singular value below which witness vectors count as dependent
    independence_tol: float = 1e-6
    feas_tol: float = 1e-9
    gap_tol: float = 1e-9
    sdp_max_iter: int = 200
    # Acceptance of solver residuals and PSD-ness after a solve
    sdp_check_tol: float = 1e-6
    certificate_margin: float = 1e-7
    hermitian_tol: float = 1e-9
    triviality_tol: float = 1e-9
    rank_one_ratio: float = 1e-6
    # Residual screen before a supporting normal is polished onto C-
    screen_tol: float = 1e-2

    TOL_MIN: ClassVar[float] = 1e-16
    TOL_MAX: ClassVar[float] = 0.5
    ITER_MIN: ClassVar[int] = 10
    ITER_MAX: ClassVar[int] = 10000

    def with_overrides(self, **overrides) -> ToleranceConfig:
        """Return a copy with the given values clamped to the supported ranges, None values are ignored."""
        names = {f.name for f in fields(self)}
        changes = {}
        for name, value in overrides.items():
            if value is None:
                continue
            if name not in names:
                raise TypeError(f"Unknown tolerance setting: {name}")
            if isinstance(getattr(self, name), int):
                changes[name] = _clamped(
                    type(self), name, int(value), self.ITER_MIN, self.ITER_MAX
                )
            else:
                changes[name] = _clamped(
                    type(self), name, float(value), self.TOL_MIN, self.TOL_MAX
                )
        return replace(self, **changes)

    def as_dict(self) -> dict:
        """Return the tolerances as plain dictionary."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class DescentConfig:
    """Dataclass for the projected gradient descent on C- and its retractions."""

    # Step schedule
    beta0: float = 0.1
    beta_min: float = 1e-10
    grow_after: int = 3
    # Stop when |P grad z| < gradient_tol * (1 + |grad z|)
    gradient_tol: float = 1e-8
    max_iters: int = 500
    z_slack: float = 1e-12
    # Real retraction by bisection
    bisection_iters: int = 80
    root_tol: float = 1e-10
    # Complex retraction on rho = |w|^2
    rho_tol: float = 1e-16
    retraction_iters: int = 100
    # Newton polishing of sampled C- points
    polish_iters: int = 30
    # Two C- starts are one discovery above this absolute cosine
    duplicate_cos: float = 0.999


DEFAULT_TOLERANCES = ToleranceConfig()
DEFAULT_DESCENT = DescentConfig()
