"""Small dense semidefinite programs with a single hermitian block.

Problems are stated in the standard form

    <A_i, X> + a_i.u = rhs_i,   X >= 0,   optionally X = F0 + sum_j u_j F_j,

with real free variables u, and solved through cvxpy. Clarabel is the
primary interior point solver and SCS the fallback. Every optimal answer is
re-verified (PSD-ness, residuals, complementarity) before it is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import logging

import cvxpy as cp
import numpy as np

from . import linalg
from .errors import InvalidInputError, raise_for_status
from .types import DEFAULT_TOLERANCES, FieldTag, SdpSense, SdpStatus, ToleranceConfig

_LOGGER: logging.Logger = logging.getLogger(__name__)

_SOLVERS: tuple[str, ...] = ("CLARABEL", "SCS")
_STATUS: dict[str, SdpStatus] = {
    cp.OPTIMAL: SdpStatus.optimal,
    cp.OPTIMAL_INACCURATE: SdpStatus.optimal,
    cp.INFEASIBLE: SdpStatus.infeasible,
    cp.INFEASIBLE_INACCURATE: SdpStatus.infeasible,
    cp.UNBOUNDED: SdpStatus.unbounded,
    cp.UNBOUNDED_INACCURATE: SdpStatus.unbounded,
}


@dataclass(frozen=True, eq=False)
class EqualityConstraint:
    """Linear equality <matrix, X> + free.u = rhs, either part may be absent."""

    matrix: np.ndarray | None = None
    free: np.ndarray | None = None
    rhs: float = 0.0


@dataclass(frozen=True, eq=False)
class LinearMatrixInequality:
    """Affine pencil F0 + sum_j u_j F_j tied to the PSD block."""

    constant: np.ndarray
    coefficients: np.ndarray

    def evaluate(self, values) -> np.ndarray:
        """Return the pencil at the given free variable values."""
        return self.constant + np.tensordot(np.asarray(values, dtype=float), self.coefficients, axes=1)


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """Conic standard form with one PSD block and real free variables."""

    size: int
    field: FieldTag = FieldTag.real
    free_count: int = 0
    constraints: tuple[EqualityConstraint, ...] = ()
    objective: np.ndarray | None = None
    objective_free: np.ndarray | None = None
    sense: SdpSense = SdpSense.feasibility
    lmi: LinearMatrixInequality | None = None
    # (count, radius): |u[:count]| <= radius
    norm_bound: tuple[int, float] | None = None

    def validate(self) -> None:
        """Check dimensions and hermiticity of all problem data."""
        shape = (self.size, self.size)
        mats = [con.matrix for con in self.constraints if con.matrix is not None]
        if self.objective is not None:
            mats.append(self.objective)
        if self.lmi is not None:
            if self.lmi.coefficients.shape != (self.free_count, *shape):
                raise InvalidInputError(
                    f"LMI needs {self.free_count} coefficient matrices of shape {shape}"
                )
            mats.extend([self.lmi.constant, *self.lmi.coefficients])
        for mat in mats:
            if np.shape(mat) != shape:
                raise InvalidInputError(f"Constraint matrix shape {np.shape(mat)} != {shape}")
            linalg.hermitian(mat)
        frees = [con.free for con in self.constraints if con.free is not None]
        if self.objective_free is not None:
            frees.append(self.objective_free)
        for vec in frees:
            if np.shape(vec) != (self.free_count,):
                raise InvalidInputError(f"Free coefficient vector must have {self.free_count} entries")
        if self.norm_bound is not None and not 0 < self.norm_bound[0] <= self.free_count:
            raise InvalidInputError("Norm bound exceeds free variables")
        if any(con.matrix is None and con.free is None for con in self.constraints):
            raise InvalidInputError("Empty equality constraint")


@dataclass(frozen=True, eq=False)
class SdpSolution:
    """Solver outcome, X and free values are only meaningful for Optimal."""

    status: SdpStatus
    X: np.ndarray | None = None
    free: np.ndarray | None = None
    objective: float = float("nan")
    duals: tuple[float, ...] = ()
    dual_X: np.ndarray | None = None
    gap: float = float("nan")
    residual: float = float("nan")
    solver: str = ""
    message: str = ""


@dataclass(frozen=True, eq=False)
class StrictWitness:
    """Free variable values making the LMI at least margin * I."""

    values: np.ndarray
    level: float


def _inner(matrix: np.ndarray, X: cp.Variable, field: FieldTag):
    """Return Re tr(matrix X) as cvxpy expression."""
    if field is FieldTag.complex:
        return cp.real(cp.sum(cp.multiply(np.conj(matrix), X)))
    return cp.sum(cp.multiply(np.real(matrix), X))


def _solver_options(name: str, tolerances: ToleranceConfig) -> dict:
    if name == "CLARABEL":
        return {
            "max_iter": tolerances.sdp_max_iter,
            "tol_feas": tolerances.feas_tol,
            "tol_gap_abs": tolerances.gap_tol,
            "tol_gap_rel": tolerances.gap_tol,
        }
    return {
        "max_iters": 50 * tolerances.sdp_max_iter,
        "eps_abs": max(tolerances.feas_tol, 1e-8),
        "eps_rel": max(tolerances.gap_tol, 1e-8),
    }


def _residual(problem: SdpProblem, X: np.ndarray, free: np.ndarray) -> float:
    """Return the largest relative violation of the equality constraints."""
    worst = 0.0
    for con in problem.constraints:
        value = 0.0
        if con.matrix is not None:
            value += float(np.sum(np.conj(con.matrix) * X).real)
        if con.free is not None:
            value += float(con.free @ free)
        worst = max(worst, abs(value - con.rhs) / (1.0 + abs(con.rhs)))
    if problem.lmi is not None:
        target = problem.lmi.evaluate(free)
        worst = max(worst, float(np.max(np.abs(X - target))) / (1.0 + float(np.max(np.abs(target)))))
    return worst


def solve(problem: SdpProblem, tolerances: ToleranceConfig = DEFAULT_TOLERANCES) -> SdpSolution:
    """Solve the problem and return a verified solution or a non-optimal status."""
    problem.validate()
    if problem.field is FieldTag.complex:
        X = cp.Variable((problem.size, problem.size), hermitian=True)
    else:
        X = cp.Variable((problem.size, problem.size), symmetric=True)
    u = cp.Variable(problem.free_count) if problem.free_count else None
    psd = X >> 0
    equalities = []
    for con in problem.constraints:
        expr = 0
        if con.matrix is not None:
            expr = expr + _inner(con.matrix, X, problem.field)
        if con.free is not None:
            expr = expr + np.asarray(con.free, dtype=float) @ u
        equalities.append(expr == con.rhs)
    extra = []
    if problem.lmi is not None:
        pencil = problem.lmi.constant
        for j in range(problem.free_count):
            pencil = pencil + u[j] * problem.lmi.coefficients[j]
        extra.append(X == pencil)
    if problem.norm_bound is not None:
        count, radius = problem.norm_bound
        extra.append(cp.norm(u[:count], 2) <= radius)
    objective = 0
    if problem.objective is not None:
        objective = objective + _inner(problem.objective, X, problem.field)
    if problem.objective_free is not None:
        objective = objective + np.asarray(problem.objective_free, dtype=float) @ u
    if problem.sense is SdpSense.maximize:
        goal = cp.Maximize(objective)
    elif problem.sense is SdpSense.minimize:
        goal = cp.Minimize(objective)
    else:
        goal = cp.Minimize(0)
    program = cp.Problem(goal, [psd, *equalities, *extra])

    installed = set(cp.installed_solvers())
    status, solver, message = SdpStatus.numerical_trouble, "", "no solver available"
    for name in (s for s in _SOLVERS if s in installed):
        solver = name
        try:
            program.solve(solver=name, **_solver_options(name, tolerances))
        except cp.error.SolverError as err:
            _LOGGER.warning("Solver %s failed: %s", name, err)
            message = str(err)
            continue
        status = _STATUS.get(program.status, SdpStatus.numerical_trouble)
        message = str(program.status)
        _LOGGER.debug("Solver %s returned %s", name, program.status)
        if status is not SdpStatus.numerical_trouble:
            break
    if status is not SdpStatus.optimal:
        return SdpSolution(status=status, solver=solver, message=message)
    return _verified(problem, X, u, psd, equalities, program, solver, message, tolerances)


def _verified(problem, X, u, psd, equalities, program, solver, message, tolerances) -> SdpSolution:
    """Re-check an optimal answer and clip X onto the PSD cone."""
    check = tolerances.sdp_check_tol
    Xv = np.asarray(X.value)
    Xv = (Xv + Xv.conj().T) / 2
    free = np.asarray(u.value, dtype=float).ravel() if u is not None else np.zeros(0)
    eig = linalg.hermitian_eig(Xv)
    residual = _residual(problem, Xv, free)
    objective = float(program.value) if problem.sense is not SdpSense.feasibility else 0.0
    trouble = None
    if eig.lambda_min < -check * eig.scale:
        trouble = f"X has eigenvalue {eig.lambda_min:.3e}"
    elif residual > check:
        trouble = f"constraint residual {residual:.3e}"
    gap = float("nan")
    dual_X = None
    if psd.dual_value is not None:
        dual_X = np.asarray(psd.dual_value)
        gap = float(np.sum(np.conj(dual_X) * Xv).real)
        if trouble is None and abs(gap) > check * (1.0 + abs(objective)):
            trouble = f"complementarity gap {gap:.3e}"
    if trouble is not None:
        _LOGGER.warning("Rejected %s solution: %s", solver, trouble)
        return SdpSolution(status=SdpStatus.numerical_trouble, solver=solver, message=trouble)
    vecs = eig.eigenvectors
    clipped = (vecs * np.clip(eig.eigenvalues, 0.0, None)) @ vecs.conj().T
    duals = tuple(
        float(np.real(con.dual_value)) if con.dual_value is not None else float("nan")
        for con in equalities
    )
    return SdpSolution(
        status=SdpStatus.optimal,
        X=clipped,
        free=free,
        objective=objective,
        duals=duals,
        dual_X=dual_X,
        gap=gap,
        residual=residual,
        solver=solver,
        message=message,
    )


def strict_feasibility(
    problem: SdpProblem,
    margin: float = DEFAULT_TOLERANCES.certificate_margin,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
) -> StrictWitness | None:
    """Maximize the smallest eigenvalue of the LMI over |u| <= 1, return values above margin."""
    if problem.lmi is None or problem.sense is not SdpSense.feasibility:
        raise InvalidInputError("Strict feasibility needs a pure LMI feasibility problem")
    count = problem.free_count
    eye = np.eye(problem.size, dtype=problem.lmi.constant.dtype)
    augmented = replace(
        problem,
        free_count=count + 1,
        constraints=tuple(
            replace(con, free=None if con.free is None else np.append(con.free, 0.0))
            for con in problem.constraints
        ),
        lmi=LinearMatrixInequality(
            constant=problem.lmi.constant,
            coefficients=np.concatenate([problem.lmi.coefficients, -eye[None]]),
        ),
        objective_free=np.eye(count + 1)[count],
        sense=SdpSense.maximize,
        norm_bound=(count, 1.0),
    )
    solution = solve(augmented, tolerances)
    if solution.status is SdpStatus.infeasible:
        return None
    raise_for_status(solution, "Strict feasibility")
    values = solution.free[:count]
    level = linalg.hermitian_eig(problem.lmi.evaluate(values)).lambda_min
    _LOGGER.debug("Strict feasibility level %.6g (solver %.6g)", level, solution.free[count])
    if level <= margin:
        return None
    return StrictWitness(values=values, level=level)
