"""Two dimensional sections of G by ray sweeps of the boundary oracle."""

from __future__ import annotations

import csv
from dataclasses import dataclass
import io
import logging

import numpy as np

from .const import SIGNIFICANT_DIGITS
from .quadapi.errors import InvalidInputError, UnboundedError
from .quadapi.oracles import boundary_oracle
from .quadapi.quadmap import QuadraticMap, lift
from .quadapi.sdpcore import EqualityConstraint, SdpProblem, solve
from .quadapi.types import DEFAULT_TOLERANCES, OnF, SdpSense, SdpStatus, ToleranceConfig

_LOGGER: logging.Logger = logging.getLogger(__name__)

# Smallest admissible margin of the interior point
INTERIOR_MIN: float = 1e-7


@dataclass(frozen=True, eq=False)
class SweepRow:
    """Boundary point of the section along one ray."""

    angle: float
    t: float
    point: np.ndarray
    rank_estimate: int
    on_f: OnF


@dataclass(frozen=True, eq=False)
class SectionSweep:
    """Ray sweep of the slice of G with the given coordinates fixed."""

    centre: np.ndarray
    free: tuple[int, int]
    fixed: dict[int, float]
    margin: float
    rows: tuple[SweepRow, ...]

    def polyline(self) -> np.ndarray:
        """Return the finite boundary points projected on the two free coordinates."""
        return np.array(
            [row.point[list(self.free)] for row in self.rows if np.isfinite(row.t)]
        )

    def rank_arcs(self) -> int:
        """Return the number of maximal cyclic runs of rays with rank estimate other than one."""
        flags = [row.rank_estimate != 1 for row in self.rows]
        if all(flags):
            return 1 if flags else 0
        return sum(1 for i, flag in enumerate(flags) if flag and not flags[i - 1])

    def is_convex(self, slack: float = 1e-6) -> bool:
        """Return True when all turning angles of the closed polyline share one sign."""
        return is_convex_polyline(self.polyline(), slack)

    def to_csv(self) -> str:
        """Return the rows as CSV with header angle_rad, t, y1..ym, rank_estimate, on_F."""
        m = self.centre.size
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["angle_rad", "t", *[f"y{k + 1}" for k in range(m)], "rank_estimate", "on_F"])
        for row in self.rows:
            writer.writerow(
                [
                    _fmt(row.angle),
                    _fmt(row.t),
                    *[_fmt(value) for value in row.point],
                    row.rank_estimate,
                    row.on_f.value,
                ]
            )
        return buffer.getvalue()


def _fmt(value: float) -> str:
    return f"{float(value):.{SIGNIFICANT_DIGITS}g}"


def is_convex_polyline(points: np.ndarray, slack: float = 1e-6) -> bool:
    """Return True when the cross products of consecutive edges of the closed polyline never change sign."""
    if len(points) < 3:
        return True
    edges = np.roll(points, -1, axis=0) - points
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    scale = float(np.max(np.linalg.norm(edges, axis=1))) ** 2
    return bool(np.all(cross >= -slack * scale) or np.all(cross <= slack * scale))


def section_interior(
    qmap: QuadraticMap,
    fixed: dict[int, float],
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
) -> tuple[np.ndarray, float]:
    """Return the centre H(X) of the slice for the X = Y + sI with the largest margin s."""
    family = lift(qmap)
    size = qmap.n + 1
    corner = np.zeros((size, size), dtype=family.H.dtype)
    corner[-1, -1] = 1.0
    constraints = [
        EqualityConstraint(
            matrix=family.H[k], free=np.array([float(np.trace(family.H[k]).real)]), rhs=value
        )
        for k, value in fixed.items()
    ]
    constraints.append(EqualityConstraint(matrix=corner, free=np.ones(1), rhs=1.0))
    problem = SdpProblem(
        size=size,
        field=qmap.field,
        free_count=1,
        constraints=tuple(constraints),
        objective_free=np.ones(1),
        sense=SdpSense.maximize,
    )
    solution = solve(problem, tolerances)
    if solution.status is not SdpStatus.optimal:
        raise InvalidInputError(f"Section {fixed} has no interior point ({solution.status.value})")
    margin = float(solution.free[0])
    if margin <= INTERIOR_MIN:
        raise InvalidInputError(f"Section {fixed} has empty interior (margin {margin:.3e})")
    X = solution.X + margin * np.eye(size)
    return family.apply(X), margin


def sweep_section(
    qmap: QuadraticMap,
    fixed: dict[int, float],
    rays: int = 360,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
) -> SectionSweep:
    """Sweep rays from the slice centre and return the boundary point of G along each."""
    if rays < 1:
        raise InvalidInputError("Section sweep needs at least one ray")
    fixed = {int(k): float(v) for k, v in fixed.items()}
    if any(not 0 <= k < qmap.m for k in fixed):
        raise InvalidInputError(f"Fixed coordinates must lie in 0..{qmap.m - 1}")
    free = tuple(k for k in range(qmap.m) if k not in fixed)
    if len(free) != 2:
        raise InvalidInputError(
            f"Section must leave exactly two free coordinates, got {len(free)}"
        )
    centre, margin = section_interior(qmap, fixed, tolerances)
    _LOGGER.info("Section %s centred at %s with margin %.3e", fixed, centre, margin)
    rows = []
    for j in range(rays):
        angle = 2 * np.pi * j / rays
        d = np.zeros(qmap.m)
        d[free[0]], d[free[1]] = np.cos(angle), np.sin(angle)
        try:
            result = boundary_oracle(qmap, centre, d, tolerances, check_membership=False)
        except UnboundedError:
            _LOGGER.warning("Section is unbounded along angle %.6f", angle)
            rows.append(
                SweepRow(
                    angle=angle,
                    t=np.inf,
                    point=np.full(qmap.m, np.nan),
                    rank_estimate=0,
                    on_f=OnF.ambiguous,
                )
            )
            continue
        rows.append(
            SweepRow(
                angle=angle,
                t=result.t,
                point=result.point,
                rank_estimate=result.rank_estimate,
                on_f=result.on_f,
            )
        )
    return SectionSweep(
        centre=centre, free=free, fixed=fixed, margin=margin, rows=tuple(rows)
    )
