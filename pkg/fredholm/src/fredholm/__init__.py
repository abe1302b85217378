"""B-spline / Heaviside collocation for second-kind Fredholm equations on closed contours."""

from .colloc import (
    Discretization,
    Problem,
    Solution,
    assemble,
    manufactured_problem,
    solve,
    solve_problem,
    solve_without_enrichment,
)
from .contour import Contour
from .piecewise import JumpSet, PiecewiseFn
from .quadrature import Kernel, QuadratureConfig

__all__ = [
    "Contour",
    "Discretization",
    "JumpSet",
    "Kernel",
    "PiecewiseFn",
    "Problem",
    "QuadratureConfig",
    "Solution",
    "assemble",
    "manufactured_problem",
    "solve",
    "solve_problem",
    "solve_without_enrichment",
]
