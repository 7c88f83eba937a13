"""Convex cut of the image: z_max = min over C- of z(c).

All descent quantities live in normalized coordinates where c_plus.A = I and
c_plus.b = 0. A normal c is represented by its component orthogonal to
c_plus, its projection onto the boundary of K is p = c - c_plus lambda_min(c.A)
and z(c) = |v|^2 with v = Q^+ (c.b), Q = p.A.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.linalg import null_space

from . import linalg
from .errors import (
    DegenerateNormalsError,
    DimensionUnsupportedError,
    KernelDimExceededError,
    NoCMinusFoundError,
    NotDefiniteError,
    TrivialBError,
)
from .nonconvexity import CMinusPoint, iter_c_minus
from .quadmap import (
    CutTransform,
    QuadraticMap,
    find_definite_direction,
    is_b_trivial,
    normalize_for_cut,
)
from .types import (
    DEFAULT_DESCENT,
    DEFAULT_TOLERANCES,
    DescentConfig,
    Termination,
    ToleranceConfig,
    Topology,
)

_LOGGER: logging.Logger = logging.getLogger(__name__)

# Gram determinant below which the normals of C- no longer span a plane
NORMALS_TOL: float = 1e-14
BACKTRACK_STEPS: int = 30
# Relative eigenvalue size, per unit of walking step, still counted as a rank drop
ENDPOINT_GAP: float = 10.0


@dataclass(frozen=True, eq=False)
class DescentState:
    """Every quantity of the descent evaluated at one normal c orthogonal to c_plus."""

    nmap: QuadraticMap
    c_plus: np.ndarray
    c: np.ndarray
    p: np.ndarray
    lam0: float
    x0: np.ndarray
    kernel_dim: int
    qinv: np.ndarray
    cb: np.ndarray
    w: complex
    v: np.ndarray
    z: float
    u: np.ndarray
    qdot: np.ndarray
    n: np.ndarray

    @classmethod
    def build(
        cls,
        nmap: QuadraticMap,
        c_plus,
        c,
        tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    ) -> DescentState:
        """Evaluate the state at the unit component of c orthogonal to c_plus."""
        c_plus = linalg.unit(nmap.coefficients(c_plus))
        c = nmap.coefficients(c)
        c = linalg.unit(c - c_plus * float(c_plus @ c))
        eig = linalg.hermitian_eig(nmap.pencil(c))
        values, vecs = eig.eigenvalues, eig.eigenvectors
        lam0 = eig.lambda_min
        shifted = values - lam0
        keep = shifted > tolerances.kernel_tol * eig.scale
        rest = vecs[:, keep]
        qinv = (rest / shifted[keep]) @ rest.conj().T
        x0 = vecs[:, 0]
        cb = nmap.linear(c)
        v = qinv @ cb
        u = np.einsum("i,kij,j->k", x0.conj(), nmap.A, x0).real
        # derivative of c.A - lambda_min(c) I along each coordinate
        qdot = nmap.A - u[:, None, None] * np.eye(nmap.n)
        dx0 = np.array([linalg.kernel_vector_derivative(qinv, qdot[k], x0) for k in range(nmap.m)])
        return cls(
            nmap=nmap,
            c_plus=c_plus,
            c=c,
            p=c - c_plus * lam0,
            lam0=lam0,
            x0=x0,
            kernel_dim=int(np.count_nonzero(~keep)),
            qinv=qinv,
            cb=cb,
            w=complex(np.vdot(x0, cb)),
            v=v,
            z=float(np.vdot(v, v).real),
            u=u,
            qdot=qdot,
            n=dx0.conj() @ cb + nmap.b @ x0.conj(),
        )

    @property
    def residual(self) -> float:
        """Return |x0*(c.b)|, zero exactly on C-."""
        return abs(self.w)

    @property
    def normals(self) -> list[np.ndarray]:
        """Return the normals of C- inside c_plus^perp, Re n and for complex maps Im n."""
        if self.nmap.is_complex:
            return [self.n.real, self.n.imag]
        return [self.n.real]

    def pencil_residual(self) -> float:
        """Return |(p.A) v - c.b| relative to 1 + |c.b|."""
        Q = self.nmap.pencil(self.p)
        return float(np.linalg.norm(Q @ self.v - self.cb)) / (
            1.0 + float(np.linalg.norm(self.cb))
        )


@dataclass(frozen=True, eq=False)
class DescentStep:
    """One trial of the descent."""

    c: np.ndarray
    z: float
    beta: float
    outcome: str


@dataclass(frozen=True, eq=False)
class DescentTrace:
    """Trials of a descent and its termination reason."""

    steps: tuple[DescentStep, ...]
    reason: Termination

    @property
    def accepted(self) -> list[DescentStep]:
        """Start and accepted iterates."""
        return [step for step in self.steps if step.outcome != "rejected"]


@dataclass(frozen=True, eq=False)
class DescentResult:
    """Local minimum of z reached from one C- start."""

    z: float
    c: np.ndarray
    p: np.ndarray
    start_z: float
    trace: DescentTrace

    @property
    def reason(self) -> Termination:
        """Termination reason of the descent."""
        return self.trace.reason


@dataclass(frozen=True)
class ZMaxOptions:
    """Dataclass for the restart loop of get_z_max."""

    seed: int = 0
    restarts: int = 100
    z_guess: float | None = None
    # Original image coordinates, defaults to f(0) = 0
    base_point: tuple[float, ...] | None = None


@dataclass(frozen=True, eq=False)
class ZMaxRun:
    """One restart: its C- start, duplicate group and descent."""

    start: CMinusPoint
    start_c: np.ndarray
    group: int
    result: DescentResult


@dataclass(frozen=True, eq=False)
class ZMaxResult:
    """Global minimum of z over all restarts."""

    z_max: float
    cut_level: float
    c_star: np.ndarray
    runs: tuple[ZMaxRun, ...]
    groups: int
    z_guess: float | None
    improved: bool
    transform: CutTransform

    @property
    def local_minima(self) -> list[float]:
        """Return the smallest z of each duplicate group, ordered by group."""
        best: dict[int, float] = {}
        for run in self.runs:
            best[run.group] = min(best.get(run.group, np.inf), run.result.z)
        return [best[group] for group in sorted(best)]


@dataclass(frozen=True, eq=False)
class ComponentTrace:
    """Polyline sampled along one connected component of C-."""

    points: np.ndarray
    z: np.ndarray
    topology: Topology
    endpoints: tuple[np.ndarray, ...] = field(default=())


def project_to_dK(nmap: QuadraticMap, c_plus, c) -> np.ndarray:
    """Return p = c - c_plus lambda_min(c.A), singular and positive semidefinite for c_plus.A = I."""
    c = nmap.coefficients(c)
    return c - nmap.coefficients(c_plus) * linalg.hermitian_eig(nmap.pencil(c)).lambda_min


def _require_simple_kernel(state: DescentState) -> None:
    if state.kernel_dim != 1:
        raise KernelDimExceededError(
            f"Kernel of p.A has dimension {state.kernel_dim} at {state.c}"
        )


def z_of_c(state: DescentState) -> float:
    """Return z(c) = v*v."""
    _require_simple_kernel(state)
    return state.z


def gradient_z(state: DescentState) -> np.ndarray:
    """Return the gradient of z = v*v from the derivative of v = Q^+ (c.b) along each coordinate.

    On C- this equals 2 Re(v* Q^+ q_k).
    """
    _require_simple_kernel(state)
    dv = np.array(
        [
            linalg.pseudo_inverse_derivative(state.qinv, qdot, state.x0) @ state.cb
            for qdot in state.qdot
        ]
    ) + state.nmap.b @ state.qinv.T
    return 2 * (dv @ state.v.conj()).real


def project_gradient(
    grad, c, c_plus, normals, tol: float = NORMALS_TOL
) -> np.ndarray:
    """Project the gradient onto the tangent space of C-, orthogonal to c, c_plus and the normals."""
    grad = np.asarray(grad, dtype=float)
    span = np.vstack([np.asarray(c, dtype=float), np.asarray(c_plus, dtype=float)])
    basis = np.linalg.qr(span.T)[0]

    def reject(vec: np.ndarray) -> np.ndarray:
        return vec - basis @ (basis.T @ vec)

    g = reject(grad)
    normals = [reject(np.asarray(n, dtype=float)) for n in normals]
    if len(normals) == 1:
        (n1,) = normals
        norm2 = float(n1 @ n1)
        if norm2 <= tol:
            raise DegenerateNormalsError(f"Normal of C- vanishes (|n|^2 = {norm2:.3e})")
        return g - n1 * (n1 @ g) / norm2
    n1, n2 = normals
    gram = np.array([[n1 @ n1, n1 @ n2], [n2 @ n1, n2 @ n2]])
    det = float(np.linalg.det(gram))
    if det <= tol * max(1.0, float(np.trace(gram)) ** 2):
        raise DegenerateNormalsError(f"Normals of C- are degenerate (Gram determinant {det:.3e})")
    a = np.linalg.solve(gram, np.array([n1 @ g, n2 @ g]))
    return g - a[0] * n1 - a[1] * n2


def _lowest_pair(nmap: QuadraticMap, c: np.ndarray) -> linalg.EigDecomposition:
    return linalg.hermitian_eig(nmap.pencil(c))


def retract_real(
    nmap: QuadraticMap,
    c_plus,
    c_prime,
    n,
    lam0: float,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    descent: DescentConfig = DEFAULT_DESCENT,
) -> np.ndarray | None:
    """Return the unit root of x0*(c.b) on c' + lambda n, |lambda| <= lam0, by bisection."""
    c_prime = np.asarray(c_prime, dtype=float)
    n = linalg.unit(np.asarray(n, dtype=float))
    bscale = 1.0 + float(np.linalg.norm(nmap.b))
    reference = _lowest_pair(nmap, c_prime).eigenvectors[:, 0]

    def residual(lam: float) -> float | None:
        c = c_prime + lam * n
        eig = _lowest_pair(nmap, c)
        if eig.eigenvalues[1] - eig.eigenvalues[0] <= tolerances.kernel_tol * eig.scale:
            return None
        x0 = eig.eigenvectors[:, 0]
        if x0 @ reference < 0:
            x0 = -x0
        return float(x0 @ nmap.linear(c))

    root_tol = descent.root_tol * bscale
    mid_value = residual(0.0)
    if mid_value is None:
        return None
    if abs(mid_value) < root_tol:
        return linalg.unit(c_prime)
    low, high = -abs(lam0), abs(lam0)
    f_low, f_high = residual(low), residual(high)
    if f_low is None or f_high is None or f_low * f_high > 0:
        _LOGGER.debug("No sign change of x0*(c.b) on [%.3e, %.3e]", low, high)
        return None
    for _ in range(descent.bisection_iters):
        mid = (low + high) / 2
        f_mid = residual(mid)
        if f_mid is None:
            _LOGGER.debug("Rank of Q dropped during bisection at lambda = %.3e", mid)
            return None
        if abs(f_mid) < root_tol:
            return linalg.unit(c_prime + mid * n)
        if (f_mid < 0) == (f_low < 0):
            low, f_low = mid, f_mid
        else:
            high = mid
    mid = (low + high) / 2
    f_mid = residual(mid)
    if f_mid is None or abs(f_mid) > tolerances.orthogonality_tol * bscale:
        return None
    return linalg.unit(c_prime + mid * n)


def _rho(nmap: QuadraticMap, c_plus: np.ndarray, c: np.ndarray, tolerances: ToleranceConfig):
    state = DescentState.build(nmap, c_plus, c, tolerances)
    return state, abs(state.w) ** 2


def retract_complex(
    nmap: QuadraticMap,
    c_plus,
    c_prime,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    descent: DescentConfig = DEFAULT_DESCENT,
) -> np.ndarray | None:
    """Drive rho = |x0*(c.b)|^2 to zero within the unit sphere of c_plus^perp."""
    c_plus = linalg.unit(nmap.coefficients(c_plus))
    rho_tol = descent.rho_tol * (1.0 + float(np.linalg.norm(nmap.b))) ** 2
    state, rho = _rho(nmap, c_plus, c_prime, tolerances)
    for _ in range(descent.retraction_iters):
        if state.kernel_dim != 1:
            _LOGGER.debug("Complex retraction left the simple kernel stratum")
            return None
        if rho < rho_tol:
            return state.c
        n1, n2 = state.n.real, state.n.imag
        rows = np.vstack([n1, n2, state.c, c_plus])
        rhs = np.array([-state.w.real, -state.w.imag, 0.0, 0.0])
        directions = [linalg.min_norm_solve(rows, rhs)]
        grad = 2 * (state.w.real * n1 + state.w.imag * n2)
        grad = grad - state.c * (state.c @ grad) - c_plus * (c_plus @ grad)
        if float(np.linalg.norm(grad)) > 0.0:
            directions.append(-grad * rho / float(grad @ grad))
        moved = False
        for direction in directions:
            step = 1.0
            for _ in range(BACKTRACK_STEPS):
                trial, trial_rho = _rho(nmap, c_plus, state.c + step * direction, tolerances)
                if trial.kernel_dim == 1 and trial_rho < rho:
                    state, rho, moved = trial, trial_rho, True
                    break
                step /= 2
            if moved:
                break
        if not moved:
            _LOGGER.debug("Complex retraction stalled at rho = %.3e", rho)
            return None
    if state.kernel_dim == 1 and rho < rho_tol:
        return state.c
    return None


def _retract(
    state: DescentState,
    c_prime: np.ndarray,
    tolerances: ToleranceConfig,
    descent: DescentConfig,
) -> np.ndarray | None:
    if state.nmap.is_complex:
        return retract_complex(state.nmap, state.c_plus, c_prime, tolerances, descent)
    return retract_real(
        state.nmap,
        state.c_plus,
        c_prime,
        state.n.real,
        float(np.linalg.norm(state.c - c_prime)),
        tolerances,
        descent,
    )


def descend(
    nmap: QuadraticMap,
    c_plus,
    c_start,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    descent: DescentConfig = DEFAULT_DESCENT,
) -> DescentResult:
    """Projected gradient descent of z along C- from a C- start with a one dimensional kernel."""
    state = DescentState.build(nmap, c_plus, c_start, tolerances)
    _require_simple_kernel(state)
    start_z = state.z
    steps = [DescentStep(c=state.c, z=state.z, beta=0.0, outcome="start")]
    beta = descent.beta0
    successes = 0
    reason = Termination.iter_cap
    for _ in range(descent.max_iters):
        grad = gradient_z(state)
        try:
            direction = project_gradient(grad, state.c, state.c_plus, state.normals)
        except DegenerateNormalsError as err:
            _LOGGER.debug("Descent stopped: %s", err)
            reason = Termination.degenerate_normals
            break
        if float(np.linalg.norm(direction)) < descent.gradient_tol * (
            1.0 + float(np.linalg.norm(grad))
        ):
            reason = Termination.gradient_collinear_with_normal
            break
        accepted = None
        wide_kernel = False
        while beta >= descent.beta_min:
            c_prime = state.c - beta * direction
            c_new = _retract(state, c_prime, tolerances, descent)
            if c_new is not None:
                trial = DescentState.build(nmap, state.c_plus, c_new, tolerances)
                if trial.kernel_dim != 1:
                    wide_kernel = True
                elif trial.z <= state.z + descent.z_slack:
                    accepted = trial
                    break
            steps.append(DescentStep(c=c_prime, z=float("nan"), beta=beta, outcome="rejected"))
            beta /= 2
            successes = 0
        if accepted is None:
            reason = Termination.kernel_dim_exceeded if wide_kernel else Termination.step_underflow
            break
        state = accepted
        steps.append(DescentStep(c=state.c, z=state.z, beta=beta, outcome="accepted"))
        successes += 1
        if successes >= descent.grow_after:
            beta = min(2 * beta, descent.beta0)
            successes = 0
    _LOGGER.debug(
        "Descent from z = %.9g ended at z = %.9g after %s trials (%s)",
        start_z,
        state.z,
        len(steps) - 1,
        reason.value,
    )
    return DescentResult(
        z=state.z,
        c=state.c,
        p=state.p,
        start_z=start_z,
        trace=DescentTrace(steps=tuple(steps), reason=reason),
    )


def _group(starts: list[np.ndarray], c: np.ndarray, threshold: float) -> int:
    """Return the index of the first start with |cos| above threshold, or a new index."""
    for index, other in enumerate(starts):
        if abs(float(other @ c)) > threshold:
            return index
    starts.append(c)
    return len(starts) - 1


def get_z_max(
    qmap: QuadraticMap,
    c_plus=None,
    options: ZMaxOptions | None = None,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    descent: DescentConfig = DEFAULT_DESCENT,
) -> ZMaxResult:
    """Return the minimum of z over all C- points reached from options.restarts random directions.

    options.z_guess never prunes a restart or seeds the incumbent; every C- start
    is descended and the result only reports whether the guess was improved.
    """
    options = options or ZMaxOptions()
    if is_b_trivial(qmap, tolerances.triviality_tol).trivial:
        raise TrivialBError(
            f"Map '{qmap.name}' has trivial b, its image is a cone without convex cut"
        )
    if c_plus is None:
        c_plus = find_definite_direction(qmap, tolerances)
        if c_plus is None:
            raise NotDefiniteError(f"Map '{qmap.name}' admits no c_plus with c_plus.A > 0")
    nmap, transform = normalize_for_cut(qmap, c_plus, tolerances)
    unit_plus = transform.c_plus
    base = transform.to_normalized_image(
        np.zeros(qmap.m) if options.base_point is None else qmap.coefficients(options.base_point)
    )
    starts: list[np.ndarray] = []
    runs: list[ZMaxRun] = []
    for point in iter_c_minus(
        nmap, base, options.seed, options.restarts, unit_plus, tolerances, descent
    ):
        if point.kernel_dim != 1:
            _LOGGER.debug("Skipping C- start with kernel dimension %s", point.kernel_dim)
            continue
        start = linalg.unit(point.p - unit_plus * float(unit_plus @ point.p))
        group = _group(starts, start, descent.duplicate_cos)
        try:
            result = descend(nmap, unit_plus, start, tolerances, descent)
        except KernelDimExceededError as err:
            _LOGGER.warning("Restart %s skipped: %s", point.iteration, err)
            continue
        runs.append(ZMaxRun(start=point, start_c=start, group=group, result=result))
    if not runs:
        raise NoCMinusFoundError(
            f"No C- point after {options.restarts} directions, the image of '{qmap.name}' is likely convex"
        )
    best = min(runs, key=lambda run: run.result.z)
    z_max = best.result.z
    improved = options.z_guess is None or z_max < options.z_guess
    if not improved:
        _LOGGER.info("z_max %.9g did not improve on the guess %.9g", z_max, options.z_guess)
    _LOGGER.info(
        "Map '%s': z_max = %.9g from %s runs in %s groups", qmap.name, z_max, len(runs), len(starts)
    )
    return ZMaxResult(
        z_max=z_max,
        cut_level=transform.cut_level(z_max),
        c_star=linalg.unit(best.result.p),
        runs=tuple(runs),
        groups=len(starts),
        z_guess=options.z_guess,
        improved=improved,
        transform=transform,
    )


def _tangent(state: DescentState, previous: np.ndarray | None) -> np.ndarray | None:
    """Return the unit tangent of a one dimensional C-, oriented along previous."""
    space = null_space(np.vstack([state.c, state.c_plus, state.n.real]))
    if space.shape[1] != 1:
        return None
    tangent = space[:, 0]
    if previous is not None and tangent @ previous < 0:
        tangent = -tangent
    return tangent


def _segment_distance(point: np.ndarray, start: np.ndarray, end: np.ndarray) -> float:
    segment = end - start
    length2 = float(segment @ segment)
    t = 0.0 if length2 == 0.0 else min(1.0, max(0.0, float((point - start) @ segment) / length2))
    return float(np.linalg.norm(start + t * segment - point))


def _stop(state: DescentState, step: float) -> str:
    """Classify a point where the walk cannot continue.

    Only a rank drop of the pencil to n - 2 near the point ends the component;
    any other failure leaves the trace incomplete.
    """
    rank, _ = linalg.rank_and_kernel(state.nmap.pencil(state.p), min(ENDPOINT_GAP * step, 0.5))
    if state.nmap.n - rank >= 2:
        return "endpoint"
    _LOGGER.debug("Walk stalled at %s without a rank drop (rank %s)", state.c, rank)
    return "stalled"


def _walk(
    first: DescentState,
    direction: np.ndarray,
    step: float,
    max_points: int,
    tolerances: ToleranceConfig,
    descent: DescentConfig,
) -> tuple[list[DescentState], str]:
    """Follow C- from first along direction, returning the states and "loop", "endpoint", "stalled" or "cap"."""
    states = [first]
    tangent = direction
    state = first
    while len(states) < max_points:
        h = step
        moved = None
        while h >= 1e-4 * step:
            c_new = retract_real(
                state.nmap, state.c_plus, state.c + h * tangent, state.n.real, h, tolerances, descent
            )
            if c_new is not None:
                trial = DescentState.build(state.nmap, state.c_plus, c_new, tolerances)
                if trial.kernel_dim == 1 and trial.residual <= tolerances.orthogonality_tol * (
                    1.0 + float(np.linalg.norm(state.nmap.b))
                ):
                    moved = trial
                    break
            h /= 2
        if moved is None:
            return states, _stop(state, step)
        if len(states) >= 3 and _segment_distance(first.c, state.c, moved.c) < step / 2:
            return states, "loop"
        following = _tangent(moved, tangent)
        if following is None:
            states.append(moved)
            return states, _stop(moved, step)
        states.append(moved)
        state, tangent = moved, following
    return states, "cap"


def sample_c_minus_component(
    nmap: QuadraticMap,
    c_plus,
    c_start,
    step: float = 0.01,
    max_points: int = 5000,
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES,
    descent: DescentConfig = DEFAULT_DESCENT,
) -> ComponentTrace:
    """Trace the connected component of a one dimensional C- through c_start (real maps with m = 4)."""
    if nmap.is_complex or nmap.m != 4:
        raise DimensionUnsupportedError(
            f"Component tracing needs a real map with m = 4, got {nmap.field.value} m = {nmap.m}"
        )
    first = DescentState.build(nmap, c_plus, c_start, tolerances)
    _require_simple_kernel(first)
    tangent = _tangent(first, None)
    if tangent is None:
        raise DegenerateNormalsError(f"No unique tangent of C- at {first.c}")
    forward, outcome = _walk(first, tangent, step, max_points, tolerances, descent)
    endpoints: list[np.ndarray] = []
    if outcome == "loop":
        states, topology = forward, Topology.loop
    else:
        if outcome == "endpoint":
            endpoints.append(forward[-1].c)
        backward, back_outcome = _walk(
            first, -tangent, step, max(2, max_points - len(forward) + 1), tolerances, descent
        )
        if back_outcome == "endpoint":
            endpoints.append(backward[-1].c)
        states = backward[:0:-1] + forward
        topology = (
            Topology.interval
            if outcome == "endpoint" and back_outcome == "endpoint"
            else Topology.incomplete
        )
    _LOGGER.info(
        "Traced C- component with %s points as %s", len(states), topology.value
    )
    return ComponentTrace(
        points=np.array([s.c for s in states]),
        z=np.array([s.z for s in states]),
        topology=topology,
        endpoints=tuple(endpoints),
    )
