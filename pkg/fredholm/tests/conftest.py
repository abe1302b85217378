import numpy as np
import pytest
from fredholm.contour import TWO_PI, Contour
from fredholm.piecewise import PiecewiseFn
from fredholm.quadrature import Kernel

THETA_D = 0.7 * np.pi
U = "((0.78148-0.081271i)*t^2 + 0.91818+0.025237i)"


@pytest.fixture
def circle() -> Contour:
    return Contour.from_preset("circle")


@pytest.fixture
def astroid() -> Contour:
    return Contour.from_preset("astroid")


@pytest.fixture
def kernel() -> Kernel:
    return Kernel.from_text("t^2 + s^2")


@pytest.fixture
def astroid_phi(astroid) -> PiecewiseFn:
    """Exact solution of the astroid benchmark."""
    return PiecewiseFn.from_expressions(
        astroid, [(0.0, THETA_D, "2*t"), (THETA_D, TWO_PI, "t^3 + 2*t")], [THETA_D, TWO_PI]
    )


@pytest.fixture
def astroid_rhs(astroid) -> PiecewiseFn:
    return PiecewiseFn.from_expressions(
        astroid,
        [(0.0, THETA_D, f"2*t - 0.5*{U}"), (THETA_D, TWO_PI, f"t^3 + 2*t - 0.5*{U}")],
        [THETA_D, TWO_PI],
    )


@pytest.fixture
def circle_phi(circle) -> PiecewiseFn:
    """exp(t) plus a unit step at π; the drop at the reference point is the step's own."""
    return PiecewiseFn.from_expressions(circle, [(0.0, np.pi, "exp(t)"), (np.pi, TWO_PI, "exp(t) + 1")], [np.pi])
