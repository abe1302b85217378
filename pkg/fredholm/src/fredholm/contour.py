"""Closed contours given as the image of the unit circle under a conformal map."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import expr
from .errors import ConfigurationError, DegenerateKnotError, EvaluationError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

PRESETS = {
    "circle": "w",
    "astroid": "w+1/(3*w^3)",
}


def wrap_angle(theta):
    """Reduce to [0, 2π); tiny negative angles that round up to 2π come back as 0."""
    reduced = np.mod(theta, TWO_PI)
    if np.ndim(reduced) == 0:
        return 0.0 if reduced >= TWO_PI else float(reduced)
    return np.where(reduced >= TWO_PI, 0.0, reduced)


def wrap_angle_closed(theta):
    """Reduce to (0, 2π]; the reference point is reported as 2π."""
    reduced = np.mod(theta, TWO_PI)
    if np.ndim(reduced) == 0:
        return TWO_PI if reduced == 0.0 else float(reduced)
    return np.where(reduced == 0.0, TWO_PI, reduced)


def same_angle(a: float, b: float, tol: float = 1e-12) -> bool:
    """True when two angles agree modulo 2π."""
    d = abs(np.mod(a - b + np.pi, TWO_PI) - np.pi)
    return bool(d <= tol)


@dataclass(frozen=True)
class ConformalMap:
    map_text: str
    map_expr: expr.Expression
    derivative_expr: expr.Expression

    @classmethod
    def from_text(cls, map_text: str, derivative_text: str | None = None) -> ConformalMap:
        tree = expr.parse(map_text)
        extra = expr.variables(tree) - {"w"}
        if extra:
            raise ConfigurationError(f"map expression may only use 'w', found {sorted(extra)}")
        if derivative_text:
            derivative = expr.parse(derivative_text)
            extra = expr.variables(derivative) - {"w"}
            if extra:
                raise ConfigurationError(f"derivative expression may only use 'w', found {sorted(extra)}")
        else:
            derivative = expr.differentiate(tree, "w")
        return cls(map_text=map_text, map_expr=tree, derivative_expr=derivative)

    def __call__(self, w):
        return expr.evaluate(self.map_expr, {"w": w})

    def derivative(self, w):
        return expr.evaluate(self.derivative_expr, {"w": w})


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Quasi-uniform parameter nodes θ_j = 2πj/n_B (zero-based) and their images."""

    angles: np.ndarray
    points: np.ndarray

    @property
    def n_B(self) -> int:
        return len(self.angles)

    @property
    def min_spacing(self) -> float:
        """h_min = min_j |t_{j+1} - t_j|, wrap pair included."""
        return float(np.min(np.abs(np.roll(self.points, -1) - self.points)))

    def arc_index(self, theta):
        """Index j with θ in [θ_j, θ_{j+1}) after reduction mod 2π (left-closed arcs)."""
        reduced = wrap_angle(theta)
        idx = np.searchsorted(self.angles, reduced, side="right") - 1
        idx = np.clip(idx, 0, self.n_B - 1)
        if np.ndim(idx) == 0:
            return int(idx)
        return idx


@dataclass(frozen=True)
class Contour:
    """Γ = {ψ(e^{i(θ₀+θ)}) : θ ∈ [0, 2π)}; every θ in the library is measured from θ₀."""

    map: ConformalMap
    reference_angle: float = 0.0
    name: str = field(default="custom", compare=False)

    @classmethod
    def from_preset(cls, preset: str) -> Contour:
        try:
            text = PRESETS[preset]
        except KeyError:
            raise ConfigurationError(
                f"unknown contour preset {preset!r}; choose from {sorted(PRESETS)}"
            ) from None
        return cls(map=ConformalMap.from_text(text), name=preset)

    @classmethod
    def from_text(cls, map_text: str, derivative_text: str | None = None) -> Contour:
        return cls(map=ConformalMap.from_text(map_text, derivative_text), name=map_text)

    def _unit(self, theta):
        return np.exp(1j * (self.reference_angle + np.asarray(theta, dtype=float)))

    def point(self, theta):
        """ψ(e^{iθ}); periodic in θ with period 2π."""
        try:
            return self.map(self._unit(theta))
        except EvaluationError as err:
            raise EvaluationError(str(err), theta=_scalar_or_none(theta)) from err

    def tangent_factor(self, theta):
        """dψ(e^{iθ})/dθ = ψ'(e^{iθ}) · i e^{iθ}."""
        w = self._unit(theta)
        try:
            return self.map.derivative(w) * 1j * w
        except EvaluationError as err:
            raise EvaluationError(str(err), theta=_scalar_or_none(theta)) from err

    def generate_nodes(self, n_B: int, order: int = 4) -> NodeSet:
        if n_B < max(order, 4):
            raise ConfigurationError(f"n_B={n_B} is too small for splines of order {order} (need n_B >= {max(order, 4)})")
        angles = TWO_PI * np.arange(n_B) / n_B
        points = np.asarray(self.point(angles))
        if not np.all(np.isfinite(points)):
            raise EvaluationError("contour map produced non-finite node points")
        nodes = NodeSet(angles=angles, points=points)
        if nodes.min_spacing <= 0.0:
            raise DegenerateKnotError(f"coincident nodes for n_B={n_B}")
        logger.debug("generated %d nodes on %s, h_min=%.3e", n_B, self.name, nodes.min_spacing)
        return nodes

    def validate(self, n_B: int = 40, rtol: float = 1e-6, fd_step: float = 1e-6) -> None:
        """Cross-check dψ(e^{iθ})/dθ against central differences in θ and look for
        repeated images among 10·n_B samples.

        Injectivity is only sampled, never proven.
        """
        n_samples = 10 * n_B
        theta = TWO_PI * np.arange(n_samples) / n_samples
        exact = np.asarray(self.tangent_factor(theta))
        fd = (np.asarray(self.point(theta + fd_step)) - np.asarray(self.point(theta - fd_step))) / (2 * fd_step)
        bad = np.abs(exact - fd) > rtol * np.maximum(1.0, np.abs(fd))
        if np.any(bad):
            where = float(theta[np.argmax(bad)])
            raise ConfigurationError(
                f"derivative of {self.map.map_text!r} disagrees with finite differences near theta={where:.6f}"
            )
        pts = np.asarray(self.point(theta))
        xy = np.column_stack([pts.real, pts.imag])
        dist, _ = cKDTree(xy).query(xy, k=2)
        if np.any(dist[:, 1] <= 1e-9 * max(1.0, float(np.max(np.abs(pts))))):
            raise ConfigurationError(
                f"map {self.map.map_text!r} is not injective on {n_samples} sampled circle points"
            )
        logger.debug("validated %s on %d samples", self.name, n_samples)


def _scalar_or_none(theta) -> float | None:
    return float(theta) if np.ndim(theta) == 0 else None
