"""Approximation operators: spline interpolation, the spline-Heaviside projection and
the Lagrange-Heaviside interpolant."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .basis import BSplineBasis, LagrangeBasis
from .colloc import Discretization, collocation_points
from .contour import TWO_PI
from .errors import ConfigurationError, InterpolationSingularError
from .linalg import lu_factor
from .piecewise import Decomposition, JumpSet, PiecewiseFn

logger = logging.getLogger(__name__)

INTERP_PIVOT_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class SplineInterpolant:
    basis: BSplineBasis
    coefficients: np.ndarray

    def __call__(self, theta):
        values = self.basis.eval_matrix(np.atleast_1d(np.asarray(theta, dtype=float))) @ self.coefficients
        return complex(values[0]) if np.ndim(theta) == 0 else values


def spline_interpolate(values, basis: BSplineBasis, angles=None) -> SplineInterpolant:
    """Solve Σ_j a_j B_{m,j}(θ_k) = v_k at ``angles`` (the nodes by default)."""
    angles = basis.nodes.angles if angles is None else np.asarray(angles, dtype=float)
    values = np.asarray(values, dtype=np.complex128)
    if values.shape != (basis.n_B,) or angles.shape != (basis.n_B,):
        raise ConfigurationError(f"need {basis.n_B} values and angles, got {values.shape} and {angles.shape}")
    factor = lu_factor(basis.eval_matrix(angles), pivot_tol=INTERP_PIVOT_TOL, error=InterpolationSingularError)
    return SplineInterpolant(basis=basis, coefficients=factor.solve(values))


@dataclass(frozen=True, eq=False)
class EnrichedInterpolant:
    """B_n f_C + Σ β_r H_{θ^d_r}."""

    spline: SplineInterpolant
    jump_coeffs: np.ndarray
    jumps: JumpSet

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.spline.coefficients, self.jump_coeffs])

    def heaviside_part(self, theta):
        theta = np.asarray(theta, dtype=float)
        total = np.zeros(theta.shape, dtype=np.complex128)
        for beta, h in zip(self.jump_coeffs, self.jumps.heavisides(self.spline.basis.contour)):
            total = total + beta * np.asarray(h(theta))
        return complex(total) if total.ndim == 0 else total

    def __call__(self, theta):
        return self.spline(theta) + self.heaviside_part(theta)

    def as_piecewise(self) -> PiecewiseFn:
        """The interpolant as a left-continuous function with one piece per arc between jumps."""
        contour = self.spline.basis.contour
        interior = [a for a in self.jumps if a < TWO_PI - 1e-12]
        ramp = self.jumps.ramp(contour)
        closing = complex(sum(self.jump_coeffs)) if ramp is not None else 0j
        bounds = [0.0, *interior, TWO_PI]
        pieces = []
        for i, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
            level = complex(sum(self.jump_coeffs[:i]))

            def fn(theta, t, level=level):
                values = np.asarray(self.spline(theta)) + level
                if ramp is not None:
                    values = values - closing * np.asarray(ramp.on_interval(theta))
                return values

            pieces.append((lo, hi, fn))
        return PiecewiseFn.from_callables(contour, pieces, self.jumps.angles if ramp is not None else interior)


def bh_project(f: PiecewiseFn, basis: BSplineBasis, disc: Discretization | None = None) -> EnrichedInterpolant:
    """Spline interpolation of f_C at the node collocation angles plus the exact jump part.

    Nodes that sit on a jump are moved to θ^d - ε₂ exactly as in collocation.
    """
    disc = disc or Discretization(n_B=basis.n_B, m=basis.order)
    decomposition = f.decompose()
    points = collocation_points(disc, basis.nodes, f.jumps)
    angles = points.angles[: basis.n_B]
    values = np.empty(basis.n_B, dtype=np.complex128)
    for j, theta in enumerate(angles):
        anchor = points.anchors[j]
        if np.isnan(anchor):
            values[j] = decomposition.continuous_part(float(theta))
        else:
            values[j] = decomposition.continuous_value_near(float(theta), float(anchor))
    spline = spline_interpolate(values, basis, angles)
    mismatch = decomposition.wrap_mismatch()
    if abs(mismatch) > 1e-8 * (1 + abs(values).max()):
        logger.warning("continuous part does not close up at the reference point: mismatch %.3e", abs(mismatch))
    return EnrichedInterpolant(spline=spline, jump_coeffs=decomposition.betas, jumps=f.jumps)


@dataclass(frozen=True, eq=False)
class LagrangeInterpolant:
    """Polynomial through the node values in the Lagrange basis, optionally plus a Heaviside part."""

    basis: LagrangeBasis
    values: np.ndarray
    decomposition: Decomposition | None = None

    def polynomial(self, theta):
        out = self.basis.eval_matrix(theta) @ self.values
        return complex(out[0]) if np.ndim(theta) == 0 else out

    def __call__(self, theta):
        value = self.polynomial(theta)
        if self.decomposition is not None:
            value = value + self.decomposition.heaviside_part(theta)
        return value


def lagrange_heaviside(f: PiecewiseFn, n_B: int) -> LagrangeInterpolant:
    """L_{n_B} f_C + f_H with f_C sampled at the nodes t_j (left limit on jump nodes)."""
    basis = LagrangeBasis.build(f.contour, n_B)
    decomposition = f.decompose()
    values = np.atleast_1d(decomposition.continuous_part(basis.nodes.angles))
    return LagrangeInterpolant(basis=basis, values=values.astype(np.complex128), decomposition=decomposition)


def lagrange_plain(f: PiecewiseFn, n_B: int) -> LagrangeInterpolant:
    """L_{n_B} f without enrichment; oscillates near the jumps."""
    basis = LagrangeBasis.build(f.contour, n_B)
    return LagrangeInterpolant(basis=basis, values=np.atleast_1d(f.eval(basis.nodes.angles)).astype(np.complex128))


def spline_plain(f: PiecewiseFn, basis: BSplineBasis, disc: Discretization | None = None) -> SplineInterpolant:
    """B_n f at the node collocation angles, jumps ignored."""
    disc = disc or Discretization(n_B=basis.n_B, m=basis.order)
    angles = collocation_points(disc, basis.nodes, JumpSet()).angles
    return spline_interpolate(np.atleast_1d(f.eval(angles)), basis, angles)
