"""Collocation system B x̂ = f̂ with B = B1 - λ B2, its solution and error measurement.

Unknowns are (α_0 .. α_{n_B-1}, β_0 .. β_{n_d-1}): spline coefficients
followed by Heaviside coefficients. Rows are the n_B node collocation points
followed by one row per jump angle.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .basis import LAGRANGE_MAX_NODES, BSplineBasis, LagrangeBasis
from .context import SolverContext
from .contour import TWO_PI, Contour, NodeSet, same_angle
from .errors import ConfigurationError, EvaluationError
from .linalg import lu_factor, residual_inf
from .piecewise import ErrorGrid, JumpSet, PiecewiseFn, error_grid
from .quadrature import Kernel, QuadratureConfig, apply_discrete_operator, integral_blocks

logger = logging.getLogger(__name__)

COLLOCATION_RULES = ("offset", "nodes")
TRIAL_BASES = ("spline", "lagrange")
RESIDUAL_RTOL = 1e-10
CONDITION_WARN = 1e12


@dataclass(frozen=True, eq=False)
class Problem:
    contour: Contour
    kernel: Kernel
    lam: complex
    rhs: PiecewiseFn
    exact_solution: PiecewiseFn | None = None
    name: str = "problem"

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        if self.rhs.contour != self.contour:
            raise ConfigurationError("right-hand side is defined on a different contour")
        rng = np.random.default_rng(0)
        theta = rng.uniform(0.0, TWO_PI, size=(2, 16))
        try:
            values = self.kernel(self.contour.point(theta[0]), self.contour.point(theta[1]))
        except EvaluationError as err:
            raise ConfigurationError(f"kernel {self.kernel.text!r} cannot be evaluated on the contour: {err}") from err
        if not np.all(np.isfinite(values)):
            raise ConfigurationError(f"kernel {self.kernel.text!r} is not finite on the contour")

    @property
    def jumps(self) -> JumpSet:
        return self.rhs.jumps


@dataclass(frozen=True)
class Discretization:
    n_B: int
    m: int = 4
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    eps2: float = 0.01
    rule: str = "offset"
    basis: str = "spline"

    def __post_init__(self):
        if self.m not in (2, 3, 4):
            raise ConfigurationError(f"spline order m={self.m} must be 2, 3 or 4")
        if self.n_B < max(self.m, 4):
            raise ConfigurationError(f"n_B={self.n_B} must be at least max(m, 4)={max(self.m, 4)}")
        if not 0.0 < self.eps2 < TWO_PI / self.n_B:
            raise ConfigurationError(f"eps2={self.eps2} must lie in (0, 2π/n_B={TWO_PI / self.n_B:.6g})")
        if self.rule not in COLLOCATION_RULES:
            raise ConfigurationError(f"collocation rule {self.rule!r} must be one of {COLLOCATION_RULES}")
        if self.basis not in TRIAL_BASES:
            raise ConfigurationError(f"trial basis {self.basis!r} must be one of {TRIAL_BASES}")
        if self.basis == "lagrange" and self.n_B > LAGRANGE_MAX_NODES:
            raise ConfigurationError(
                f"Lagrange collocation is limited to n_B <= {LAGRANGE_MAX_NODES} (got {self.n_B}); use the spline basis"
            )

    @property
    def offset(self) -> int:
        """Index shift of the node rows; any value only reorders the rows of B and f̂."""
        if self.rule == "nodes":
            return 0
        return 1 if self.m == 2 else 2

    def trial_basis(self, contour: Contour) -> BSplineBasis | LagrangeBasis:
        if self.basis == "lagrange":
            return LagrangeBasis.build(contour, self.n_B)
        return BSplineBasis.build(contour, self.n_B, self.m)


@dataclass(frozen=True, eq=False)
class CollocationPoints:
    """θ^C for the n_B node rows then the jump rows; ``anchors`` holds the jump a node was moved off (NaN if none)."""

    angles: np.ndarray
    anchors: np.ndarray
    n_B: int

    @property
    def n(self) -> int:
        return len(self.angles)

    @property
    def shifted(self) -> np.ndarray:
        return ~np.isnan(self.anchors)


def collocation_points(disc: Discretization, nodes: NodeSet, jumps: JumpSet) -> CollocationPoints:
    n_B = nodes.n_B
    if n_B != disc.n_B:
        raise ConfigurationError(f"node set has {n_B} nodes, discretization expects {disc.n_B}")
    angles = nodes.angles[(np.arange(n_B) + disc.offset) % n_B].copy()
    anchors = np.full(n_B, np.nan)
    for j, theta in enumerate(angles):
        for jump in jumps:
            if same_angle(theta, jump):
                shifted = jump - disc.eps2
                for other in jumps:
                    if same_angle(shifted, other):
                        raise ConfigurationError(
                            f"node {j} shifted to {shifted!r} lands on jump {other!r}; choose a different eps2"
                        )
                logger.warning("collocation node %d at theta=%.6f sits on a jump, moved to %.6f", j, theta, shifted)
                angles[j], anchors[j] = shifted, jump
                break
    jump_angles = np.array(jumps.angles, dtype=float)
    return CollocationPoints(
        angles=np.concatenate([angles, jump_angles]),
        anchors=np.concatenate([anchors, np.full(len(jump_angles), np.nan)]),
        n_B=n_B,
    )


@dataclass(frozen=True, eq=False)
class CollocationSystem:
    basis: BSplineBasis | LagrangeBasis
    jumps: JumpSet
    points: CollocationPoints
    lam: complex
    B1: np.ndarray
    B2: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_B(self) -> int:
        return self.basis.n_B

    @property
    def n_d(self) -> int:
        return self.jumps.n_d


def rhs_vector(f: PiecewiseFn, points: CollocationPoints, jumps: JumpSet) -> np.ndarray:
    """f at node rows (value next to the jump for shifted rows), f(θ^d + 0) at jump rows."""
    values = np.empty(points.n, dtype=np.complex128)
    node_angles = points.angles[: points.n_B]
    plain = ~points.shifted[: points.n_B]
    values[: points.n_B][plain] = np.atleast_1d(f.eval(node_angles[plain]))
    for j in np.flatnonzero(~plain):
        values[j] = f.value_near(float(node_angles[j]), float(points.anchors[j]))
    for r, jump in enumerate(jumps):
        values[points.n_B + r] = f.right_limit(jump)
    return values


def assemble(
    problem: Problem,
    disc: Discretization,
    context: SolverContext | None = None,
    enrich: bool = True,
) -> CollocationSystem:
    """B1 (basis values), B2 (kernel integrals), B = B1 - λ B2 and f̂.

    With ``enrich=False`` the Heaviside columns and jump rows are dropped.
    """
    context = context or SolverContext.create()
    trace = context.trace
    jumps = problem.jumps if enrich else JumpSet()
    with trace.stage("nodes", n_B=disc.n_B, m=disc.m, basis=disc.basis):
        basis = disc.trial_basis(problem.contour)
        points = collocation_points(disc, basis.nodes, jumps)
    n_B, n_d = disc.n_B, jumps.n_d
    n = n_B + n_d
    theta_c = points.angles
    t_c = np.asarray(problem.contour.point(theta_c))

    with trace.stage("basis_matrix", n=n):
        B1 = np.zeros((n, n), dtype=np.complex128)
        B1[:, :n_B] = basis.eval_matrix(theta_c)
        for r, h in enumerate(jumps.heavisides(problem.contour)):
            B1[:, n_B + r] = h(theta_c)

    with trace.stage("integrals", quad_N=disc.quad.N):
        if problem.lam == 0:
            B2 = np.zeros((n, n), dtype=np.complex128)
        else:
            try:
                blocks = integral_blocks(
                    basis, t_c, problem.kernel, jumps.angles, disc.quad, context.executor, jumps.ramp(problem.contour)
                )
            except EvaluationError as err:
                raise EvaluationError(f"assembling B2 failed: {err}") from err
            B2 = np.concatenate([blocks.I1, blocks.I2], axis=1)

    with trace.stage("rhs"):
        rhs = rhs_vector(problem.rhs, points, jumps)
        if not np.all(np.isfinite(rhs)):
            row = int(np.flatnonzero(~np.isfinite(rhs))[0])
            raise EvaluationError(f"right-hand side is not finite at collocation row {row}", theta=float(theta_c[row]))

    matrix = B1 - problem.lam * B2
    logger.info(
        "assembled %dx%d collocation system (%s basis, n_B=%d, n_d=%d, m=%d)", n, n, disc.basis, n_B, n_d, disc.m
    )
    return CollocationSystem(
        basis=basis, jumps=jumps, points=points, lam=problem.lam, B1=B1, B2=B2, matrix=matrix, rhs=rhs
    )


@dataclass(frozen=True)
class SolveDiagnostics:
    residual_inf: float
    rhs_inf: float
    condition_estimate_1norm: float
    rcond: float = 0.0

    @property
    def residual_tolerance(self) -> float:
        return RESIDUAL_RTOL * max(self.rhs_inf, np.finfo(float).tiny)

    @property
    def residual_within_tolerance(self) -> bool:
        return self.residual_inf <= self.residual_tolerance


@dataclass(frozen=True, eq=False)
class Solution:
    """φ^H(θ) = Σ α_k b_k(θ) + Σ β_r H_{θ^d_r}(θ), b_k the splines B_{m,k} or the Lagrange ℓ_k."""

    basis: BSplineBasis | LagrangeBasis
    jumps: JumpSet
    alpha: np.ndarray
    beta: np.ndarray
    diagnostics: SolveDiagnostics

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    def evaluate(self, theta):
        theta_arr = np.atleast_1d(np.asarray(theta, dtype=float))
        values = self.basis.eval_matrix(theta_arr) @ self.alpha
        for beta, h in zip(self.beta, self.jumps.heavisides(self.basis.contour)):
            values = values + beta * h(theta_arr)
        return complex(values[0]) if np.ndim(theta) == 0 else values

    __call__ = evaluate


def solve(system: CollocationSystem, context: SolverContext | None = None) -> Solution:
    """Dense LU with partial pivoting; residual and 1-norm condition estimate are always computed."""
    context = context or SolverContext.create()
    with context.trace.stage("solve", n=system.n) as detail:
        factor = lu_factor(system.matrix)
        x = factor.solve(system.rhs)
        residual = residual_inf(system.matrix, x, system.rhs)
        rhs_inf = float(np.linalg.norm(system.rhs, np.inf))
        rcond = factor.rcond()
        condition = float("inf") if rcond == 0.0 else 1.0 / rcond
        detail.update(residual_inf=residual, condition_estimate_1norm=condition)
    diagnostics = SolveDiagnostics(
        residual_inf=residual, rhs_inf=rhs_inf, condition_estimate_1norm=condition, rcond=rcond
    )
    if not diagnostics.residual_within_tolerance:
        logger.warning(
            "residual %.3e exceeds %.0e * |f|_inf = %.3e", residual, RESIDUAL_RTOL, diagnostics.residual_tolerance
        )
    if condition > CONDITION_WARN:
        logger.warning("collocation matrix is ill-conditioned: cond_1 ~ %.3e", condition)
    logger.info("solved n=%d: residual %.3e, cond_1 %.3e", system.n, residual, condition)
    return Solution(
        basis=system.basis,
        jumps=system.jumps,
        alpha=x[: system.n_B],
        beta=x[system.n_B :],
        diagnostics=diagnostics,
    )


def evaluate_solution(sol: Solution, theta):
    return sol.evaluate(theta)


def solve_problem(problem: Problem, disc: Discretization, context: SolverContext | None = None) -> Solution:
    context = context or SolverContext.create()
    return solve(assemble(problem, disc, context), context)


def solve_without_enrichment(
    problem: Problem, disc: Discretization, context: SolverContext | None = None
) -> Solution:
    """Same pipeline with no Heaviside columns (n = n_B); the Gibbs baseline."""
    context = context or SolverContext.create()
    return solve(assemble(problem, disc, context, enrich=False), context)


def manufactured_problem(
    contour: Contour,
    kernel: Kernel,
    lam: complex,
    phi_exact: PiecewiseFn,
    cfg: QuadratureConfig | None = None,
    rule: str = "gauss",
    name: str = "manufactured",
) -> Problem:
    """Problem whose solution is ``phi_exact``: f = φ - λ K φ with the fine rule."""
    cfg = cfg or QuadratureConfig()
    operator = apply_discrete_operator(kernel, lam, phi_exact, contour, cfg, rule=rule)

    def piece(index: int) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        def fn(theta, t):
            return np.asarray(phi_exact.piece_values(index, theta)) - np.asarray(operator(theta))

        return fn

    pieces = [(p.lo, p.hi, piece(i)) for i, p in enumerate(phi_exact.pieces)]
    rhs = PiecewiseFn.from_callables(contour, pieces, phi_exact.jumps.angles)
    return Problem(contour=contour, kernel=kernel, lam=lam, rhs=rhs, exact_solution=phi_exact, name=name)


@dataclass(frozen=True, eq=False)
class ErrorReport:
    grid: ErrorGrid
    abs_err: np.ndarray
    max_excluded: float
    max_included: float


def measure_error(
    approx: Callable[[np.ndarray], np.ndarray],
    exact: Callable[[np.ndarray], np.ndarray],
    jumps: JumpSet,
    size: int = 2000,
    half_width: float = 0.02,
) -> ErrorReport:
    """Max |approx - exact| on a uniform grid, with and without the jump / reference neighbourhoods."""
    grid = error_grid(size, [0.0, *jumps.angles], half_width)
    abs_err = np.abs(np.asarray(approx(grid.theta)) - np.asarray(exact(grid.theta)))
    excluded = float(np.max(abs_err[grid.keep])) if np.any(grid.keep) else 0.0
    return ErrorReport(grid=grid, abs_err=abs_err, max_excluded=excluded, max_included=float(np.max(abs_err)))


def near_jump_error(
    approx: Callable[[np.ndarray], np.ndarray],
    exact: Callable[[np.ndarray], np.ndarray],
    jump: float,
    size: int = 2000,
) -> float:
    """Largest error at the two grid samples adjacent to ``jump`` (one on each side, jump excluded)."""
    theta = TWO_PI * np.arange(1, size + 1) / size
    left = theta[theta < jump - 1e-9]
    right = theta[theta > jump + 1e-9]
    picks = []
    if left.size:
        picks.append(left[-1])
    if right.size:
        picks.append(right[0])
    picks = np.array(picks)
    return float(np.max(np.abs(np.asarray(approx(picks)) - np.asarray(exact(picks)))))


def away_from_jumps_error(
    approx: Callable[[np.ndarray], np.ndarray],
    exact: Callable[[np.ndarray], np.ndarray],
    jumps: JumpSet,
    size: int = 2000,
    distance: float = 0.5,
) -> float:
    """Max error over grid samples at least ``distance`` radians from every jump and the reference point."""
    grid = error_grid(size, [0.0, *jumps.angles], distance)
    if not np.any(grid.keep):
        return 0.0
    kept = grid.kept
    return float(np.max(np.abs(np.asarray(approx(kept)) - np.asarray(exact(kept)))))
