"""Trapezoid rule on θ, kernel integrals I¹ / I² and the discretised integral operator.

Every contour integral is pulled back to the parameter θ:

    ∫_Γ F(s) ds = ∫ F(ψ(e^{iθ})) ψ'(e^{iθ}) i e^{iθ} dθ

and split at the knot angles, so each piece is smooth and the same N
subintervals are used on every segment.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import Executor
from dataclasses import dataclass
from functools import cache
from typing import TYPE_CHECKING

import numpy as np

from . import expr
from .contour import TWO_PI, Contour
from .errors import ConfigurationError, EvaluationError, InsufficientDataError

if TYPE_CHECKING:
    from .basis import BSplineBasis, LagrangeBasis, WindingRamp
    from .piecewise import PiecewiseFn

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

GAUSS_ORDER = 20


@dataclass(frozen=True)
class QuadratureConfig:
    N: int = 200
    oracle_N: int = 4000

    def __post_init__(self):
        if self.N < 2:
            raise ConfigurationError(f"quad_N={self.N} must be at least 2")
        if self.oracle_N < 4 * self.N:
            raise ConfigurationError(f"oracle_N={self.oracle_N} must be at least 4*quad_N={4 * self.N}")

    @property
    def oracle(self) -> QuadratureConfig:
        return QuadratureConfig(N=self.oracle_N, oracle_N=4 * self.oracle_N)


@dataclass(frozen=True)
class Kernel:
    """K(t, s) given as an expression in ``t`` and ``s``."""

    text: str
    tree: expr.Expression

    @classmethod
    def from_text(cls, text: str) -> Kernel:
        tree = expr.parse(text)
        extra = expr.variables(tree) - {"t", "s"}
        if extra:
            raise ConfigurationError(f"kernel may only use 't' and 's', found {sorted(extra)}")
        return cls(text=text, tree=tree)

    def __call__(self, t, s):
        return expr.evaluate(self.tree, {"t": t, "s": s})


def _check_finite(values: np.ndarray, theta: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(values)
    if np.any(bad):
        first = np.argwhere(bad)[0]
        node = float(np.broadcast_to(theta, values.shape)[tuple(first)])
        raise EvaluationError("non-finite integrand value", theta=node)
    return values


def trapezoid_weights(a: float, b: float, N: int) -> tuple[np.ndarray, np.ndarray]:
    h = (b - a) / N
    theta = a + h * np.arange(N + 1)
    theta[-1] = b
    weights = np.full(N + 1, h)
    weights[0] = weights[-1] = 0.5 * h
    return theta, weights


def trapezoid(g: Integrand, theta_in: float, theta_f: float, N: int) -> complex:
    """I_N = h (g(θ_in)/2 + Σ_{j=1}^{N-1} g(θ_in + jh) + g(θ_f)/2), h = (θ_f - θ_in)/N."""
    if N < 1:
        raise ConfigurationError(f"trapezoid needs N >= 1, got {N}")
    if theta_f < theta_in:
        raise ConfigurationError(f"empty interval [{theta_in}, {theta_f}]")
    if theta_f == theta_in:
        return 0j
    theta, weights = trapezoid_weights(theta_in, theta_f, N)
    values = np.broadcast_to(np.asarray(g(theta), dtype=np.complex128), theta.shape)
    return complex(np.dot(_check_finite(values, theta), weights))


@cache
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_weights(a: float, b: float, panels: int, order: int = GAUSS_ORDER) -> tuple[np.ndarray, np.ndarray]:
    x, w = _legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    theta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return theta, weights


def gauss_legendre(g: Integrand, a: float, b: float, panels: int = 16, order: int = GAUSS_ORDER) -> complex:
    """Composite Gauss-Legendre rule; accurate on non-periodic smooth arcs."""
    if b < a:
        raise ConfigurationError(f"empty interval [{a}, {b}]")
    if b == a:
        return 0j
    theta, weights = gauss_weights(a, b, panels, order)
    values = np.broadcast_to(np.asarray(g(theta), dtype=np.complex128), theta.shape)
    return complex(np.dot(_check_finite(values, theta), weights))


def integral_I1(basis: BSplineBasis, k: int, t_c: complex, kernel: Kernel, cfg: QuadratureConfig) -> complex:
    """I^{1,m}_k(t_c) = ∫_Γ K(t_c, s) B_{m,k}(s) ds, branch by branch."""
    contour = basis.contour
    total = 0j
    for r in range(basis.order):
        a, b = basis.knots.angles[k + r], basis.knots.angles[k + r + 1]

        def g(theta, r=r):
            s = contour.point(theta)
            return kernel(t_c, s) * basis.segment_values(k, r, theta) * contour.tangent_factor(theta)

        total += trapezoid(g, a, b, cfg.N)
    return total


def jump_segments(jump_angle: float, node_angles: np.ndarray) -> list[tuple[float, float]]:
    """[θ^d, 2π] split at the node angles inside it."""
    if not 0.0 < jump_angle <= TWO_PI:
        raise ConfigurationError(f"jump angle {jump_angle} outside (0, 2π]")
    if jump_angle >= TWO_PI - 1e-12:
        return []
    inner = [float(a) for a in node_angles if a > jump_angle + 1e-12]
    breaks = [jump_angle, *inner, TWO_PI]
    return list(zip(breaks[:-1], breaks[1:]))


def integral_I2(
    jump_angle: float,
    t_c: complex,
    kernel: Kernel,
    contour: Contour,
    cfg: QuadratureConfig,
    node_angles: np.ndarray | None = None,
) -> complex:
    """I²_r(t_c) = ∫_{θ^d}^{2π} K(t_c, ψ(e^{iθ})) ψ'(e^{iθ}) i e^{iθ} dθ.

    With ``node_angles`` the interval is split on the knot grid the way
    assembly does it; otherwise one segment of N subintervals is used.
    """
    if node_angles is None:
        segments = [] if jump_angle >= TWO_PI - 1e-12 else [(jump_angle, TWO_PI)]
        if not 0.0 < jump_angle <= TWO_PI:
            raise ConfigurationError(f"jump angle {jump_angle} outside (0, 2π]")
    else:
        segments = jump_segments(jump_angle, node_angles)

    def q(theta):
        return kernel(t_c, contour.point(theta)) * contour.tangent_factor(theta)

    return sum((trapezoid(q, a, b, cfg.N) for a, b in segments), 0j)


@dataclass(frozen=True, eq=False)
class SegmentGrid:
    """Trapezoid grid on one knot arc: θ samples, contour points, dθ-weighted tangents."""

    arc: int
    theta: np.ndarray
    points: np.ndarray
    weighted_tangent: np.ndarray

    @classmethod
    def build(cls, contour: Contour, arc: int, a: float, b: float, N: int) -> SegmentGrid:
        theta, weights = trapezoid_weights(a, b, N)
        return cls(
            arc=arc,
            theta=theta,
            points=np.asarray(contour.point(theta)),
            weighted_tangent=np.asarray(contour.tangent_factor(theta)) * weights,
        )

    def kernel_block(self, kernel: Kernel, t_c: np.ndarray) -> np.ndarray:
        """K(t_c[i], s_q) ψ'·i·w · w_q, shape (len(t_c), N+1)."""
        block = kernel(t_c[:, None], self.points[None, :]) * self.weighted_tangent[None, :]
        bad = ~np.isfinite(block)
        if np.any(bad):
            row, col = np.argwhere(bad)[0]
            raise EvaluationError(
                f"non-finite kernel value for collocation row {row} on knot arc {self.arc}",
                theta=float(self.theta[col]),
            )
        return block


@dataclass(frozen=True, eq=False)
class IntegralBlocks:
    I1: np.ndarray
    I2: np.ndarray


def integral_blocks(
    basis: BSplineBasis | LagrangeBasis,
    t_c: np.ndarray,
    kernel: Kernel,
    jump_angles: Sequence[float],
    cfg: QuadratureConfig,
    executor: Executor | None = None,
    ramp: WindingRamp | None = None,
) -> IntegralBlocks:
    """All I¹ and I² entries for the collocation points ``t_c`` in one pass over the knot arcs.

    Arc contributions are computed independently (optionally on ``executor``)
    and summed in arc order, so the result does not depend on scheduling.
    With a closing ``ramp`` every I² column also loses ∫_Γ K(t_c, s) W(s) ds.
    """
    n_B = basis.n_B
    contour = basis.contour
    angles = basis.arc_angles
    t_c = np.asarray(t_c, dtype=np.complex128)

    def arc_work(a: int):
        grid = SegmentGrid.build(contour, a, angles[a], angles[a + 1], cfg.N)
        block = grid.kernel_block(kernel, t_c)
        alive, values = basis.segment_block(a, grid.theta)
        columns = block @ values
        ramped = block @ ramp.on_interval(grid.theta) if ramp is not None else None
        return alive, columns, block.sum(axis=1), ramped

    mapper = executor.map if executor is not None else map
    I1 = np.zeros((len(t_c), n_B), dtype=np.complex128)
    arc_totals = np.zeros((len(t_c), n_B), dtype=np.complex128)
    ramp_integral = np.zeros(len(t_c), dtype=np.complex128)
    for a, (alive, columns, total, ramped) in enumerate(mapper(arc_work, range(n_B))):
        I1[:, alive] += columns
        arc_totals[:, a] = total
        if ramped is not None:
            ramp_integral += ramped

    I2 = np.zeros((len(t_c), len(jump_angles)), dtype=np.complex128)
    node_angles = basis.nodes.angles
    for col, theta_d in enumerate(jump_angles):
        for a, b in jump_segments(theta_d, node_angles):
            arc = basis.nodes.arc_index(a)
            if abs(a - angles[arc]) <= 1e-12 and abs(b - angles[arc + 1]) <= 1e-12:
                I2[:, col] += arc_totals[:, arc]
            else:
                grid = SegmentGrid.build(contour, arc, a, b, cfg.N)
                I2[:, col] += grid.kernel_block(kernel, t_c).sum(axis=1)
        if ramp is not None:
            I2[:, col] -= ramp_integral
    logger.debug("integrated %d x %d I1 block and %d I2 columns", len(t_c), n_B, len(jump_angles))
    return IntegralBlocks(I1=I1, I2=I2)


def _arc_rule(a: float, b: float, cfg: QuadratureConfig, rule: str) -> tuple[np.ndarray, np.ndarray]:
    if rule == "trapezoid":
        return trapezoid_weights(a, b, cfg.oracle_N)
    if rule == "gauss":
        return gauss_weights(a, b, max(4, cfg.oracle_N // 50))
    raise ConfigurationError(f"unknown quadrature rule {rule!r}; choose 'trapezoid' or 'gauss'")


def apply_discrete_operator(
    kernel: Kernel,
    lam: complex,
    g: PiecewiseFn,
    contour: Contour,
    cfg: QuadratureConfig,
    rule: str = "trapezoid",
    chunk: int = 256,
) -> Callable[[np.ndarray], np.ndarray]:
    """θ ↦ λ ∫_Γ K(ψ(e^{iθ}), s) g(s) ds with the fine (oracle) rule.

    The σ integral is split at the reference angle and at every jump of ``g``;
    on each arc the owning piece is evaluated on the closed arc.
    """
    lam = complex(lam)
    if lam == 0:
        return lambda theta: np.zeros(np.shape(theta), dtype=np.complex128) if np.ndim(theta) else 0j
    if not g.closed_form:
        raise InsufficientDataError("the discrete operator needs off-node values of g; sample tables have none")

    sigma_parts, weight_parts = [], []
    for piece_index, a, b in g.arcs():
        sigma, weights = _arc_rule(a, b, cfg, rule)
        values = np.asarray(g.piece_values(piece_index, sigma), dtype=np.complex128)
        sigma_parts.append(sigma)
        weight_parts.append(values * np.asarray(contour.tangent_factor(sigma)) * weights)
    s = np.asarray(contour.point(np.concatenate(sigma_parts)))
    gw = _check_finite(np.concatenate(weight_parts), np.concatenate(sigma_parts))

    def operator(theta):
        theta_arr = np.atleast_1d(np.asarray(theta, dtype=float))
        t = np.asarray(contour.point(theta_arr))
        out = np.empty(len(t), dtype=np.complex128)
        for start in range(0, len(t), chunk):
            rows = t[start : start + chunk]
            out[start : start + chunk] = lam * (kernel(rows[:, None], s[None, :]) @ gw)
        return complex(out[0]) if np.ndim(theta) == 0 else out

    return operator
