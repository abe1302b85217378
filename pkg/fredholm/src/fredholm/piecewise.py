"""Left-continuous piecewise functions on Γ, jump decomposition and piecewise-Hölder norms."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .basis import HeavisideFn, WindingRamp, winding_ramp
from .contour import TWO_PI, Contour, same_angle, wrap_angle, wrap_angle_closed
from .errors import ConfigurationError, InsufficientDataError

logger = logging.getLogger(__name__)

ANGLE_TOL = 1e-12
PH_EDGE_MARGIN = 1e-4


@dataclass(frozen=True)
class JumpSet:
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "angles", angles)
        for a in angles:
            if not 0.0 < a <= TWO_PI:
                raise ConfigurationError(f"jump angle {a} outside (0, 2π]")
        if any(b - a <= ANGLE_TOL for a, b in zip(angles, angles[1:])):
            raise ConfigurationError(f"jump angles must be strictly increasing and distinct: {angles}")

    @property
    def n_d(self) -> int:
        return len(self.angles)

    def __len__(self) -> int:
        return len(self.angles)

    def __iter__(self) -> Iterator[float]:
        return iter(self.angles)

    @property
    def closes_at_reference(self) -> bool:
        """True when the reference point itself is a listed jump."""
        return bool(self.angles) and self.angles[-1] >= TWO_PI - ANGLE_TOL

    def ramp(self, contour: Contour) -> WindingRamp | None:
        return winding_ramp(contour) if self.closes_at_reference else None

    def heavisides(self, contour: Contour | None = None) -> list[HeavisideFn]:
        """Steps at the jump angles.

        When the reference point is a jump every step closes through the
        winding ramp of ``contour``, so jump sizes that do not sum to zero
        leave no drop in the continuous part.
        """
        if self.closes_at_reference:
            if contour is None:
                raise ConfigurationError("a jump at the reference point needs the contour to close its steps")
            ramp = winding_ramp(contour)
            return [HeavisideFn(a, ramp) for a in self.angles]
        return [HeavisideFn(a) for a in self.angles]


class PieceSource:
    """Values of one piece; ``values`` receives reduced θ and the contour points t."""

    closed_form = True

    def values(self, theta: np.ndarray, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class ExpressionSource(PieceSource):
    text: str
    tree: expr.Expression

    @classmethod
    def from_text(cls, text: str) -> ExpressionSource:
        tree = expr.parse(text)
        extra = expr.variables(tree) - {"t", "theta"}
        if extra:
            raise ConfigurationError(f"piece expression {text!r} may only use 't' and 'theta', found {sorted(extra)}")
        return cls(text=text, tree=tree)

    def values(self, theta, t):
        return expr.evaluate(self.tree, {"t": t, "theta": theta})


@dataclass(frozen=True)
class CallableSource(PieceSource):
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def values(self, theta, t):
        return np.broadcast_to(np.asarray(self.fn(theta, t), dtype=np.complex128), np.shape(theta))


@dataclass(frozen=True, eq=False)
class SampleSource(PieceSource):
    """Values known only at listed angles (node samples plus the jump values)."""

    angles: np.ndarray
    samples: np.ndarray
    closed_form = False

    def lookup(self, theta) -> np.ndarray:
        theta = np.atleast_1d(wrap_angle(np.asarray(theta, dtype=float)))
        order = np.argsort(self.angles)
        sorted_angles = self.angles[order]
        out = np.empty(theta.shape, dtype=np.complex128)
        for i, th in enumerate(theta):
            pos = np.searchsorted(sorted_angles, th)
            hit = None
            for cand in (pos - 1, pos, pos + 1, 0, len(sorted_angles) - 1):
                if 0 <= cand < len(sorted_angles) and same_angle(sorted_angles[cand], th, 1e-9):
                    hit = order[cand]
                    break
            if hit is None:
                raise InsufficientDataError(f"no sample at theta={th!r}; sampled data has no off-node values")
            out[i] = self.samples[hit]
        return out

    def values(self, theta, t):
        return self.lookup(theta).reshape(np.shape(theta))

    def next_sample_after(self, theta: float) -> complex:
        """Value at the nearest sample angle strictly after θ along the orientation."""
        ahead = np.mod(self.angles - theta, TWO_PI)
        ahead[ahead <= 1e-9] = np.inf
        if not np.any(np.isfinite(ahead)):
            raise InsufficientDataError(f"no sample to the right of theta={theta!r}")
        return complex(self.samples[int(np.argmin(ahead))])


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    source: PieceSource


@dataclass(frozen=True, eq=False)
class PiecewiseFn:
    """f on Γ with pieces (lo, hi] partitioning (0, 2π]; θ = 0 is evaluated as θ = 2π."""

    contour: Contour
    pieces: tuple[Piece, ...]
    jumps: JumpSet = field(default_factory=JumpSet)

    def __post_init__(self):
        if not self.pieces:
            raise ConfigurationError("a piecewise function needs at least one piece")
        if abs(self.pieces[0].lo) > ANGLE_TOL or abs(self.pieces[-1].hi - TWO_PI) > ANGLE_TOL:
            raise ConfigurationError("pieces must cover (0, 2π] starting at 0 and ending at 2π")
        for left, right in zip(self.pieces, self.pieces[1:]):
            if abs(left.hi - right.lo) > ANGLE_TOL:
                raise ConfigurationError(f"pieces leave a gap or overlap at {left.hi} / {right.lo}")
        for piece in self.pieces:
            if piece.hi - piece.lo <= ANGLE_TOL:
                raise ConfigurationError(f"empty piece ({piece.lo}, {piece.hi}]")
            if piece.hi < TWO_PI - ANGLE_TOL and not any(abs(piece.hi - a) <= ANGLE_TOL for a in self.jumps):
                raise ConfigurationError(f"piece boundary {piece.hi} is not a jump angle")

    @classmethod
    def from_expressions(
        cls, contour: Contour, pieces: Sequence[tuple[float, float, str]], jumps: Sequence[float] = ()
    ) -> PiecewiseFn:
        return cls(
            contour=contour,
            pieces=tuple(Piece(lo, hi, ExpressionSource.from_text(text)) for lo, hi, text in pieces),
            jumps=JumpSet(tuple(jumps)),
        )

    @classmethod
    def from_expression(cls, contour: Contour, text: str) -> PiecewiseFn:
        return cls.from_expressions(contour, [(0.0, TWO_PI, text)])

    @classmethod
    def from_samples(
        cls,
        contour: Contour,
        angles: Sequence[float],
        values: Sequence[complex],
        jumps: Sequence[float] = (),
        jump_values: Sequence[complex] = (),
    ) -> PiecewiseFn:
        if len(angles) != len(values):
            raise ConfigurationError(f"{len(angles)} sample angles but {len(values)} values")
        if len(jumps) != len(jump_values):
            raise ConfigurationError(f"{len(jumps)} jumps but {len(jump_values)} jump values")
        node_angles = wrap_angle(np.asarray(angles, dtype=float))
        node_values = np.asarray(values, dtype=np.complex128)
        # the jump value is f(θ^d) itself and wins over a node sample at the same angle
        keep = np.array([not any(same_angle(a, d, 1e-9) for d in jumps) for a in node_angles], dtype=bool)
        source = SampleSource(
            angles=np.concatenate([node_angles[keep], wrap_angle(np.asarray(jumps, dtype=float))]),
            samples=np.concatenate([node_values[keep], np.asarray(jump_values, dtype=np.complex128)]),
        )
        bounds = [0.0, *[a for a in jumps if a < TWO_PI - ANGLE_TOL], TWO_PI]
        pieces = tuple(Piece(lo, hi, source) for lo, hi in zip(bounds[:-1], bounds[1:]))
        return cls(contour=contour, pieces=pieces, jumps=JumpSet(tuple(jumps)))

    @classmethod
    def from_callables(
        cls,
        contour: Contour,
        pieces: Sequence[tuple[float, float, Callable[[np.ndarray, np.ndarray], np.ndarray]]],
        jumps: Sequence[float] = (),
    ) -> PiecewiseFn:
        return cls(
            contour=contour,
            pieces=tuple(Piece(lo, hi, CallableSource(fn)) for lo, hi, fn in pieces),
            jumps=JumpSet(tuple(jumps)),
        )

    @property
    def closed_form(self) -> bool:
        return all(p.source.closed_form for p in self.pieces)

    def piece_index(self, theta):
        """Index of the piece owning reduced θ ∈ (0, 2π] (left-open, right-closed)."""
        his = np.array([p.hi for p in self.pieces])
        his[-1] = np.inf
        idx = np.searchsorted(his, np.asarray(theta) - ANGLE_TOL, side="left")
        return idx

    def piece_values(self, index: int, theta):
        """Piece ``index`` evaluated at θ as given (no reduction), for closed-arc quadrature."""
        theta = np.asarray(theta, dtype=float)
        t = self.contour.point(theta)
        out = self.pieces[index].source.values(theta, t)
        return complex(out) if np.ndim(out) == 0 else np.asarray(out, dtype=np.complex128)

    def eval(self, theta):
        reduced = np.atleast_1d(wrap_angle_closed(np.asarray(theta, dtype=float)))
        idx = np.atleast_1d(self.piece_index(reduced))
        out = np.empty(reduced.shape, dtype=np.complex128)
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = np.asarray(self.piece_values(int(i), reduced[mask]))
        return complex(out[0]) if np.ndim(theta) == 0 else out.reshape(np.shape(theta))

    __call__ = eval

    def value_near(self, theta: float, anchor: float) -> complex:
        """f at a point shifted off a jump; sampled data falls back to the value at the jump."""
        if self.closed_form:
            return self.eval(theta)
        return self.eval(anchor)

    def right_limit(self, theta: float) -> complex:
        """f(θ+0); at θ = 2π the limit is taken at 0⁺ on the first piece."""
        reduced = wrap_angle_closed(theta)
        if reduced >= TWO_PI - ANGLE_TOL:
            index, at = 0, 0.0
        else:
            his = np.array([p.hi for p in self.pieces])
            index, at = int(np.searchsorted(his, reduced + ANGLE_TOL, side="left")), reduced
        source = self.pieces[index].source
        if isinstance(source, SampleSource):
            return source.next_sample_after(at)
        return self.piece_values(index, at)

    def jump_sizes(self) -> np.ndarray:
        """β_r = f(θ^d_r + 0) - f(θ^d_r) for every listed jump."""
        return np.array([self.right_limit(a) - self.eval(a) for a in self.jumps], dtype=np.complex128)

    def arcs(self) -> list[tuple[int, float, float]]:
        """(owning piece, a, b) for each arc between {0}, jumps, piece ends and 2π."""
        breaks = sorted({0.0, TWO_PI, *(p.hi for p in self.pieces), *self.jumps})
        merged = [breaks[0]]
        for b in breaks[1:]:
            if b - merged[-1] > ANGLE_TOL:
                merged.append(b)
        merged[-1] = TWO_PI
        out = []
        for a, b in zip(merged[:-1], merged[1:]):
            out.append((int(self.piece_index(b)), a, b))
        return out

    def decompose(self) -> Decomposition:
        return Decomposition(f=self, betas=self.jump_sizes())


@dataclass(frozen=True, eq=False)
class Decomposition:
    """f = f_C + f_H with f_H = Σ β_r H_{θ^d_r}.

    At a jump angle f_C is reported by its left limit, so it stays continuous
    there; f_C + f_H = f holds everywhere else. When the reference point is a
    jump the steps close through the winding ramp and f_C picks up
    (Σ β_r)·W.
    """

    f: PiecewiseFn
    betas: np.ndarray

    @property
    def jumps(self) -> JumpSet:
        return self.f.jumps

    def heaviside_part(self, theta):
        total = np.zeros(np.shape(theta), dtype=np.complex128)
        for beta, h in zip(self.betas, self.jumps.heavisides(self.f.contour)):
            total = total + beta * np.asarray(h(theta))
        return complex(total) if np.ndim(theta) == 0 else total

    def _left_levels(self, theta):
        reduced = wrap_angle_closed(np.asarray(theta, dtype=float))
        total = np.zeros(np.shape(theta), dtype=np.complex128)
        for beta, angle in zip(self.betas, self.jumps):
            total = total + beta * (reduced > angle)
        ramp = self.jumps.ramp(self.f.contour)
        if ramp is not None:
            total = total - self.betas.sum() * np.asarray(ramp.on_interval(reduced))
        return complex(total) if np.ndim(theta) == 0 else total

    def continuous_part(self, theta):
        return self.f.eval(theta) - self._left_levels(theta)

    def continuous_value_near(self, theta: float, anchor: float) -> complex:
        return self.f.value_near(theta, anchor) - self._left_levels(theta)

    def wrap_mismatch(self) -> complex:
        """f_C(0⁺) - f_C(2π).

        Without a jump at the reference point this is Σ β_r + f(0⁺) - f(2π),
        zero when the listed jumps account for every drop; with one it is zero
        by construction.
        """
        return self.f.right_limit(TWO_PI) - self.continuous_part(TWO_PI)


@dataclass(frozen=True)
class HoelderNormEstimate:
    alpha: float
    per_arc: tuple[tuple[float, float], ...]
    total: float


def ph_norm_arcs(jumps: Sequence[float]) -> list[tuple[float, float]]:
    breaks = [0.0, *jumps]
    if breaks[-1] < TWO_PI - ANGLE_TOL:
        breaks.append(TWO_PI)
    arcs = list(zip(breaks[:-1], breaks[1:]))
    for a, b in arcs:
        if b - a <= ANGLE_TOL:
            raise ConfigurationError(f"empty arc between jump angles {a} and {b}")
    return arcs


def ph_norm_estimate(
    fn: Callable[[np.ndarray], np.ndarray],
    contour: Contour,
    jumps: Sequence[float] = (),
    alpha: float = 1.0,
    P: int = 64,
) -> HoelderNormEstimate:
    """Sampled ‖fn‖_{PH_α}: per arc, sup |fn| plus the largest chord Hölder quotient.

    The arc ends are sampled at a fixed inset, so the samples for P are a subset of those for any multiple of P.
    """
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError(f"alpha={alpha} must lie in (0, 1]")
    if P < 8:
        raise ConfigurationError(f"P={P} samples per arc is below the minimum of 8")
    per_arc = []
    for a, b in ph_norm_arcs(list(jumps)):
        margin = (b - a) * PH_EDGE_MARGIN
        theta = a + (b - a) * np.arange(P + 1) / P
        theta[0], theta[-1] = a + margin, b - margin
        values = np.asarray(fn(theta), dtype=np.complex128)
        points = np.asarray(contour.point(theta))
        sup = float(np.max(np.abs(values)))
        dist = np.abs(points[:, None] - points[None, :])
        diff = np.abs(values[:, None] - values[None, :])
        valid = dist > 0
        quotient = float(np.max(diff[valid] / dist[valid] ** alpha)) if np.any(valid) else 0.0
        per_arc.append((sup, quotient))
    total = max(s + q for s, q in per_arc)
    return HoelderNormEstimate(alpha=alpha, per_arc=tuple(per_arc), total=total)


@dataclass(frozen=True, eq=False)
class ErrorGrid:
    theta: np.ndarray
    keep: np.ndarray

    @property
    def kept(self) -> np.ndarray:
        return self.theta[self.keep]


def error_grid(size: int, centres: Sequence[float], half_width: float) -> ErrorGrid:
    """Uniform θ grid on (0, 2π] and a mask dropping |θ - c| < half_width (mod 2π) around each centre."""
    if size < 2:
        raise ConfigurationError(f"grid size {size} must be at least 2")
    theta = TWO_PI * np.arange(1, size + 1) / size
    keep = np.ones(size, dtype=bool)
    for c in centres:
        d = np.abs(np.mod(theta - c + np.pi, TWO_PI) - np.pi)
        keep &= d >= half_width
    return ErrorGrid(theta=theta, keep=keep)
