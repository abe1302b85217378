import numpy as np
import pytest
from fredholm.basis import BSplineBasis
from fredholm.colloc import measure_error, near_jump_error
from fredholm.contour import TWO_PI
from fredholm.errors import ConfigurationError
from fredholm.interp import (
    EnrichedInterpolant,
    SplineInterpolant,
    bh_project,
    lagrange_heaviside,
    lagrange_plain,
    spline_interpolate,
    spline_plain,
)
from fredholm.piecewise import JumpSet

INTERIOR_JUMPS = JumpSet((1.0, 4.0))


def random_element(basis, jumps, seed=0):
    rng = np.random.default_rng(seed)
    alpha = rng.normal(size=basis.n_B) + 1j * rng.normal(size=basis.n_B)
    beta = rng.normal(size=jumps.n_d) + 1j * rng.normal(size=jumps.n_d)
    return EnrichedInterpolant(spline=SplineInterpolant(basis, alpha), jump_coeffs=beta, jumps=jumps)


@pytest.mark.parametrize("contour_name", ["circle", "astroid"])
@pytest.mark.parametrize("m", [2, 4])
def test_projection_reproduces_enriched_splines(request, contour_name, m):
    contour = request.getfixturevalue(contour_name)
    basis = BSplineBasis.build(contour, 20, m)
    element = random_element(basis, INTERIOR_JUMPS)
    f = element.as_piecewise()
    projected = bh_project(f, basis)
    scale = np.max(np.abs(element.coefficients))
    np.testing.assert_allclose(projected.coefficients, element.coefficients, rtol=0, atol=1e-10 * scale)
    np.testing.assert_array_equal(projected.jump_coeffs, f.jump_sizes())


def test_projection_reproduces_closing_steps(astroid):
    basis = BSplineBasis.build(astroid, 20, 4)
    element = random_element(basis, JumpSet((1.0, TWO_PI)), seed=3)
    f = element.as_piecewise()
    assert abs(f.decompose().wrap_mismatch()) < 1e-10
    projected = bh_project(f, basis)
    scale = np.max(np.abs(element.coefficients))
    np.testing.assert_allclose(projected.coefficients, element.coefficients, rtol=0, atol=1e-9 * scale)
    theta = np.linspace(0.05, TWO_PI - 0.05, 40)
    np.testing.assert_allclose(projected(theta), element(theta), rtol=0, atol=1e-9 * scale)


def test_projection_is_idempotent(circle_phi):
    basis = BSplineBasis.build(circle_phi.contour, 24, 4)
    once = bh_project(circle_phi, basis)
    twice = bh_project(once.as_piecewise(), basis)
    np.testing.assert_allclose(twice.coefficients, once.coefficients, atol=1e-10)


def test_projection_converges_for_smooth_continuous_part(circle_phi):
    errors = []
    for n_B in (20, 40):
        basis = BSplineBasis.build(circle_phi.contour, n_B, 4)
        errors.append(measure_error(bh_project(circle_phi, basis), circle_phi, circle_phi.jumps).max_excluded)
    assert errors[1] < 1e-3
    assert errors[0] / errors[1] > 6


def test_jump_is_represented_exactly(circle_phi):
    basis = BSplineBasis.build(circle_phi.contour, 40, 4)
    enriched = bh_project(circle_phi, basis)
    plain = spline_plain(circle_phi, basis)
    assert enriched.jump_coeffs[0] == pytest.approx(1.0)
    assert near_jump_error(enriched, circle_phi, np.pi) < 1e-3
    assert near_jump_error(plain, circle_phi, np.pi) > 0.25


def test_spline_interpolation_checks_sizes(circle):
    basis = BSplineBasis.build(circle, 8, 4)
    with pytest.raises(ConfigurationError):
        spline_interpolate(np.ones(7), basis)


def test_spline_interpolation_hits_values(astroid):
    basis = BSplineBasis.build(astroid, 16, 4)
    values = np.asarray(astroid.point(basis.nodes.angles)) ** 2
    interpolant = spline_interpolate(values, basis)
    np.testing.assert_allclose(interpolant(basis.nodes.angles), values, atol=1e-12)


def test_lagrange_heaviside_is_spectral_on_circle(circle_phi):
    approx = lagrange_heaviside(circle_phi, 16)
    report = measure_error(approx, circle_phi, circle_phi.jumps)
    assert report.max_excluded < 1e-10
    plain = lagrange_plain(circle_phi, 16)
    assert near_jump_error(plain, circle_phi, np.pi) > 0.1


def test_lagrange_reproduces_node_values(circle_phi):
    approx = lagrange_heaviside(circle_phi, 12)
    # the Heaviside step is right-continuous, so the node on the jump is skipped
    nodes = TWO_PI * np.array([1, 2, 3, 4, 5, 7, 8, 9, 10, 11]) / 12
    np.testing.assert_allclose(approx(nodes), circle_phi(nodes), atol=1e-12)


def test_lagrange_node_limit(circle_phi):
    with pytest.raises(ConfigurationError, match="limited to n_B"):
        lagrange_heaviside(circle_phi, 65)
