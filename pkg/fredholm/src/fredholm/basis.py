"""Trial bases on Γ: periodic complex-knot B-splines (Cox-de Boor form), Lagrange cardinal
polynomials and contour Heaviside steps.

The splines follow the integral-normalised recursion

    B_{1,j}(t) = 1 / (t_{j+1} - t_j)            on arc [t_j, t_{j+1})
    B_{p,j}(t) = p/(p-1) * ((t - t_j) B_{p-1,j}(t) + (t_{j+p} - t) B_{p-1,j+1}(t)) / (t_{j+p} - t_j)

with complex knots t_j = ψ(e^{iθ_j}) extended periodically (t_{n+k} = t_k,
θ_{n+k} = θ_k + 2π). Arc membership is decided on θ, never on the complex
values. All indices are zero-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cache

import numpy as np

from .contour import TWO_PI, Contour, NodeSet, wrap_angle_closed
from .errors import ConfigurationError, DegenerateKnotError
from .quadrature import trapezoid

RAMP_SAMPLES = 2048
LAGRANGE_MAX_NODES = 64


@dataclass(frozen=True, eq=False)
class KnotSet:
    nodes: NodeSet
    order: int
    angles: np.ndarray
    points: np.ndarray

    @classmethod
    def build(cls, nodes: NodeSet, order: int) -> KnotSet:
        n = nodes.n_B
        if not 1 <= order <= n:
            raise ConfigurationError(f"spline order {order} must lie in [1, n_B={n}]")
        ext = np.arange(n + order)
        angles = nodes.angles[ext % n] + TWO_PI * (ext // n)
        points = nodes.points[ext % n]
        for p in range(1, order + 1):
            gaps = np.abs(points[p : p + n] - points[:n])
            if np.any(gaps == 0.0):
                j = int(np.argmax(gaps == 0.0))
                raise DegenerateKnotError(f"knots {j} and {j + p} coincide (n_B={n}, order={order})")
        return cls(nodes=nodes, order=order, angles=angles, points=points)

    @property
    def n_B(self) -> int:
        return self.nodes.n_B

    def local(self, k):
        """Knots t_k .. t_{k+m} of spline k, shape (..., m+1)."""
        idx = np.asarray(k)[..., None] + np.arange(self.order + 1)
        return self.points[idx]


@dataclass(frozen=True, eq=False)
class BSplineBasis:
    contour: Contour
    knots: KnotSet

    @classmethod
    def build(cls, contour: Contour, n_B: int, order: int = 4) -> BSplineBasis:
        nodes = contour.generate_nodes(n_B, order=order)
        return cls(contour=contour, knots=KnotSet.build(nodes, order))

    @property
    def order(self) -> int:
        return self.knots.order

    @property
    def n_B(self) -> int:
        return self.knots.n_B

    @property
    def nodes(self) -> NodeSet:
        return self.knots.nodes

    def _check_index(self, k: int) -> None:
        if not 0 <= k < self.n_B:
            raise IndexError(f"spline index {k} outside [0, {self.n_B})")

    def branch(self, k, r, s):
        """Polynomial piece r (0 <= r < m) of B_{m,k} at complex s, by the recursion.

        Valid on the closed knot segment, which is what quadrature needs at the
        segment end points.
        """
        m = self.order
        t = self.knots.local(k)
        s = np.asarray(s)
        r = np.asarray(r)
        dt = np.diff(t, axis=-1)
        vals = [np.where(r == i, 1.0 / dt[..., i], 0.0) for i in range(m)]
        for p in range(2, m + 1):
            factor = p / (p - 1)
            vals = [
                factor
                * ((s - t[..., i]) * vals[i] + (t[..., i + p] - s) * vals[i + 1])
                / (t[..., i + p] - t[..., i])
                for i in range(m - p + 1)
            ]
        out = vals[0]
        return complex(out) if np.ndim(out) == 0 else out

    def branch_m4(self, k: int, r: int, s):
        """Explicit cubic pieces p^{(r+1)}_k of the order-4 spline."""
        if self.order != 4:
            raise ConfigurationError("explicit branch polynomials exist for order 4 only")
        self._check_index(k)
        return branch_poly_m4(self.knots, k, r, s)

    def eval(self, k: int, theta):
        """B_{m,k}(ψ(e^{iθ})); exactly zero outside the support [θ_k, θ_{k+m}) mod 2π."""
        self._check_index(k)
        theta = np.asarray(theta, dtype=float)
        r = np.mod(self.nodes.arc_index(theta) - k, self.n_B)
        inside = r < self.order
        out = np.zeros(theta.shape, dtype=np.complex128)
        if np.any(inside):
            s = self.contour.point(theta[inside])
            out[inside] = self.branch(np.full(np.count_nonzero(inside), k), r[inside], s)
        return complex(out) if out.ndim == 0 else out

    def eval_matrix(self, theta) -> np.ndarray:
        """Matrix of B_{m,k}(θ_i), shape (len(θ), n_B)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        arcs = self.nodes.arc_index(theta)
        s = self.contour.point(theta)
        rows = np.arange(len(theta))
        out = np.zeros((len(theta), self.n_B), dtype=np.complex128)
        for r in range(self.order):
            k = np.mod(arcs - r, self.n_B)
            out[rows, k] = self.branch(k, np.full(len(theta), r), s)
        return out

    @property
    def arc_angles(self) -> np.ndarray:
        """θ_0 .. θ_{n_B} with θ_{n_B} = 2π."""
        return self.knots.angles[: self.n_B + 1]

    def segment_block(self, a: int, theta) -> tuple[np.ndarray, np.ndarray]:
        """Splines alive on knot arc a and their pieces at θ, shape (len(θ), m)."""
        ks = np.array([(a - r) % self.n_B for r in range(self.order)])
        values = np.column_stack([self.segment_values(int(k), r, theta) for r, k in enumerate(ks)])
        return ks, values

    def segment_values(self, k: int, r: int, theta) -> np.ndarray:
        """Piece r of spline k along θ (extended angles allowed), closed segment."""
        s = self.contour.point(theta)
        if self.order == 4:
            return branch_poly_m4(self.knots, k, r, s)
        return self.branch(np.full(np.shape(theta), k), np.full(np.shape(theta), r), s)

    def contour_integral(self, k: int, N: int = 400) -> complex:
        """∫_Γ B_{m,k}(s) ds by the trapezoid rule on each support segment."""
        self._check_index(k)
        if N < 64:
            raise ConfigurationError(f"N={N} is below the minimum of 64 for contour integrals")
        total = 0j
        for r in range(self.order):
            a, b = self.knots.angles[k + r], self.knots.angles[k + r + 1]
            total += trapezoid(
                lambda th, r=r: self.segment_values(k, r, th) * self.contour.tangent_factor(th), a, b, N
            )
        return total


@dataclass(frozen=True, eq=False)
class LagrangeBasis:
    """Cardinal polynomials ℓ_j(t) of degree n_B - 1 through the nodes t_j, barycentric form."""

    contour: Contour
    nodes: NodeSet
    weights: np.ndarray

    @classmethod
    def build(cls, contour: Contour, n_B: int) -> LagrangeBasis:
        if n_B > LAGRANGE_MAX_NODES:
            raise ConfigurationError(
                f"Lagrange interpolation is limited to n_B <= {LAGRANGE_MAX_NODES} (got {n_B}); "
                "use the spline variant for larger node counts"
            )
        nodes = contour.generate_nodes(n_B, order=1)
        diff = nodes.points[:, None] - nodes.points[None, :]
        np.fill_diagonal(diff, 1.0)
        return cls(contour=contour, nodes=nodes, weights=1.0 / np.prod(diff, axis=1))

    @property
    def n_B(self) -> int:
        return self.nodes.n_B

    @property
    def arc_angles(self) -> np.ndarray:
        return np.append(self.nodes.angles, TWO_PI)

    def eval_matrix(self, theta) -> np.ndarray:
        """ℓ_j(ψ(e^{iθ_i})), shape (len(θ), n_B); rows on a node are unit vectors."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        t = np.asarray(self.contour.point(theta))
        diff = t[:, None] - self.nodes.points[None, :]
        exact = np.abs(diff) <= 1e-14
        diff[exact] = 1.0
        terms = self.weights[None, :] / diff
        terms[np.any(exact, axis=1), :] = 0.0
        rows, cols = np.nonzero(exact)
        terms[rows, cols] = 1.0
        return terms / terms.sum(axis=1, keepdims=True)

    def segment_block(self, a: int, theta) -> tuple[np.ndarray, np.ndarray]:
        """Every cardinal polynomial is alive on every arc."""
        return np.arange(self.n_B), self.eval_matrix(theta)


def branch_poly_m4(knots: KnotSet, k: int, r: int, s):
    """p^{(r+1)}_k(s) for the cubic (m=4) spline, term by term as in the closed form."""
    if knots.order != 4:
        raise ConfigurationError("explicit branch polynomials exist for order 4 only")
    if not 0 <= r < 4:
        raise IndexError(f"branch {r} outside [0, 4)")
    t0, t1, t2, t3, t4 = (complex(v) for v in knots.points[k : k + 5])
    d = {
        (i, j): tj - ti
        for i, ti in enumerate((t0, t1, t2, t3, t4))
        for j, tj in enumerate((t0, t1, t2, t3, t4))
        if j > i
    }
    if any(v == 0 for v in d.values()):
        raise DegenerateKnotError(f"coincident knots in the support of spline {k}")
    s = np.asarray(s, dtype=np.complex128)
    if r == 0:
        out = 4 * (s - t0) ** 3 / (d[0, 4] * d[0, 3] * d[0, 2] * d[0, 1])
    elif r == 1:
        i1 = (s - t0) / d[0, 4] * (
            (s - t0) * (t2 - s) / (d[0, 3] * d[0, 2] * d[1, 2])
            + (s - t1) * (t3 - s) / (d[0, 3] * d[1, 3] * d[1, 2])
        )
        i2 = (t4 - s) * (s - t1) ** 2 / (d[0, 4] * d[1, 4] * d[1, 3] * d[1, 2])
        out = 4 * (i1 + i2)
    elif r == 2:
        i3 = (t3 - s) ** 2 * (s - t0) / (d[0, 4] * d[0, 3] * d[1, 3] * d[2, 3])
        i4 = (t4 - s) / d[0, 4] * (
            (s - t1) * (t3 - s) / (d[1, 4] * d[1, 3] * d[2, 3])
            + (s - t2) * (t4 - s) / (d[1, 4] * d[2, 4] * d[2, 3])
        )
        out = 4 * (i3 + i4)
    else:
        out = 4 * (t4 - s) ** 3 / (d[0, 4] * d[1, 4] * d[2, 4] * d[3, 4])
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class WindingRamp:
    """W(θ) = (log(t - c) - log(t(0) - c)) / (2πi·w) along Γ, with the branch carried by θ.

    c is the centroid of the node polygon and w the winding number of Γ around
    it. W is analytic in t away from the reference point, W(0⁺) = 0 and
    W(2π) = 1, so subtracting it from a step moves the return drop of the step
    into a smooth ramp.
    """

    contour: Contour
    centre: complex
    winding: int
    grid: np.ndarray
    unwrapped: np.ndarray

    @classmethod
    def build(cls, contour: Contour, samples: int = RAMP_SAMPLES) -> WindingRamp:
        grid = TWO_PI * np.arange(samples + 1) / samples
        points = np.asarray(contour.point(grid))
        ring = points[:-1]
        cross = (np.conj(ring) * np.roll(ring, -1)).imag
        area = 0.5 * cross.sum()
        if abs(area) <= 1e-14 * max(1.0, float(np.max(np.abs(ring))) ** 2):
            raise ConfigurationError(f"contour {contour.name!r} encloses no area; a reference-point jump cannot be closed")
        centre = complex(np.sum((ring + np.roll(ring, -1)) * cross) / (6.0 * area))
        unwrapped = np.unwrap(np.angle(points - centre))
        winding = int(np.rint((unwrapped[-1] - unwrapped[0]) / TWO_PI))
        if winding == 0:
            raise ConfigurationError(
                f"contour {contour.name!r} does not wind around its centroid; a reference-point jump cannot be closed"
            )
        return cls(contour=contour, centre=centre, winding=winding, grid=grid, unwrapped=unwrapped)

    def on_interval(self, theta):
        """W at θ ∈ [0, 2π] taken literally: θ = 0 gives 0 and θ = 2π gives 1."""
        theta = np.asarray(theta, dtype=float)
        z = np.asarray(self.contour.point(theta)) - self.centre
        principal = np.angle(z)
        guide = np.interp(theta, self.grid, self.unwrapped)
        arg = principal + TWO_PI * np.rint((guide - principal) / TWO_PI)
        start = np.log(abs(self.contour.point(0.0) - self.centre)) + 1j * self.unwrapped[0]
        out = (np.log(np.abs(z)) + 1j * arg - start) / (TWO_PI * 1j * self.winding)
        return complex(out) if np.ndim(out) == 0 else out

    def __call__(self, theta):
        return self.on_interval(wrap_angle_closed(np.asarray(theta, dtype=float)))


@cache
def winding_ramp(contour: Contour) -> WindingRamp:
    return WindingRamp.build(contour)


@dataclass(frozen=True)
class HeavisideFn:
    """H(θ) = 1 on [θ^d, 2π], 0 on (0, θ^d), with θ reduced to (0, 2π].

    θ^d = 2π gives the single-point step that is 1 only at the reference point.
    With a ``ramp`` the step returns to zero through -W instead of dropping at
    the reference point; θ^d = 2π then becomes a genuine +1 step there.
    """

    jump_angle: float
    ramp: WindingRamp | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 < self.jump_angle <= TWO_PI:
            raise ConfigurationError(f"jump angle {self.jump_angle} outside (0, 2π]")

    def __call__(self, theta):
        reduced = wrap_angle_closed(theta)
        if np.ndim(reduced) == 0:
            step = 1.0 if reduced >= self.jump_angle else 0.0
        else:
            step = (reduced >= self.jump_angle).astype(float)
        if self.ramp is None:
            return step
        return step - self.ramp.on_interval(reduced)
