import dataclasses

import numpy as np
import pytest
from fredholm.basis import BSplineBasis
from fredholm.colloc import (
    Discretization,
    Problem,
    assemble,
    away_from_jumps_error,
    collocation_points,
    manufactured_problem,
    measure_error,
    near_jump_error,
    solve,
    solve_problem,
    solve_without_enrichment,
)
from fredholm.contour import TWO_PI
from fredholm.errors import ConfigurationError, EvaluationError, SingularSystemError
from fredholm.interp import EnrichedInterpolant, SplineInterpolant, bh_project
from fredholm.piecewise import JumpSet, PiecewiseFn
from fredholm.quadrature import Kernel, QuadratureConfig

THETA_D = 0.7 * np.pi
SMALL_QUAD = QuadratureConfig(N=50, oracle_N=200)


def test_discretization_checks():
    with pytest.raises(ConfigurationError):
        Discretization(n_B=16, m=5)
    with pytest.raises(ConfigurationError):
        Discretization(n_B=3, m=2)
    with pytest.raises(ConfigurationError, match="eps2"):
        Discretization(n_B=8, eps2=1.0)
    with pytest.raises(ConfigurationError):
        Discretization(n_B=8, rule="midpoints")
    with pytest.raises(ConfigurationError, match="n_B <= 64"):
        Discretization(n_B=80, basis="lagrange")
    with pytest.raises(ConfigurationError, match="trial basis"):
        Discretization(n_B=16, basis="chebyshev")


@pytest.mark.parametrize(("m", "rule", "offset"), [(2, "offset", 1), (3, "offset", 2), (4, "offset", 2), (4, "nodes", 0)])
def test_collocation_offset(m, rule, offset):
    assert Discretization(n_B=16, m=m, rule=rule).offset == offset


def test_collocation_points_start_after_offset(circle):
    nodes = circle.generate_nodes(8)
    points = collocation_points(Discretization(n_B=8), nodes, JumpSet())
    np.testing.assert_array_equal(points.angles, nodes.angles[[2, 3, 4, 5, 6, 7, 0, 1]])
    assert not points.shifted.any()


def test_node_on_jump_is_moved_off(circle):
    nodes = circle.generate_nodes(8)
    points = collocation_points(Discretization(n_B=8), nodes, JumpSet((np.pi,)))
    assert points.n == 9
    # node 4 sits on the jump and is row 2
    assert points.angles[2] == pytest.approx(np.pi - 0.01)
    assert points.anchors[2] == np.pi
    assert points.shifted.sum() == 1
    assert points.angles[-1] == np.pi


def test_shift_onto_another_jump_is_rejected(circle):
    nodes = circle.generate_nodes(8)
    jumps = JumpSet((np.pi / 2 - 0.01, np.pi / 2))
    with pytest.raises(ConfigurationError, match="eps2"):
        collocation_points(Discretization(n_B=8, eps2=0.01), nodes, jumps)


def test_node_count_must_match(circle):
    with pytest.raises(ConfigurationError):
        collocation_points(Discretization(n_B=8), circle.generate_nodes(12), JumpSet())


def test_assembled_system_layout(circle, kernel, circle_phi):
    problem = Problem(contour=circle, kernel=kernel, lam=0.5, rhs=circle_phi)
    system = assemble(problem, Discretization(n_B=16, quad=SMALL_QUAD))
    assert system.matrix.shape == (17, 17)
    assert system.n_B == 16 and system.n_d == 1
    np.testing.assert_allclose(system.matrix, system.B1 - 0.5 * system.B2)
    # the row moved off the jump sees no step, the jump row does
    assert system.points.angles[6] == pytest.approx(np.pi - 0.01)
    assert system.B1[6, 16] == 0.0
    assert system.B1[16, 16] == 1.0
    assert system.rhs[16] == pytest.approx(circle_phi.right_limit(np.pi))


def test_zero_lambda_skips_integrals(circle, kernel, circle_phi):
    problem = Problem(contour=circle, kernel=kernel, lam=0.0, rhs=circle_phi)
    system = assemble(problem, Discretization(n_B=16))
    assert not system.B2.any()
    np.testing.assert_array_equal(system.matrix, system.B1)


def test_plain_assembly_drops_heaviside_part(circle, kernel, circle_phi):
    problem = Problem(contour=circle, kernel=kernel, lam=0.5, rhs=circle_phi)
    system = assemble(problem, Discretization(n_B=16, quad=SMALL_QUAD), enrich=False)
    assert system.matrix.shape == (16, 16)
    assert system.n_d == 0


def test_problem_checks_kernel(circle, circle_phi):
    with pytest.raises(ConfigurationError):
        Problem(contour=circle, kernel=Kernel.from_text("1/(0*s)"), lam=0.5, rhs=circle_phi)


@pytest.mark.parametrize("angles", [(1.0, 4.0), (1.0, TWO_PI)])
def test_zero_lambda_recovers_enriched_spline(circle, kernel, angles):
    basis = BSplineBasis.build(circle, 20, 4)
    jumps = JumpSet(angles)
    rng = np.random.default_rng(11)
    element = EnrichedInterpolant(
        spline=SplineInterpolant(basis, rng.normal(size=20) + 1j * rng.normal(size=20)),
        jump_coeffs=np.array([0.5 - 1j, -2.0 + 0.25j]),
        jumps=jumps,
    )
    f = element.as_piecewise()
    solution = solve_problem(Problem(contour=circle, kernel=kernel, lam=0.0, rhs=f), Discretization(n_B=20))
    projected = bh_project(f, basis)
    scale = np.max(np.abs(element.coefficients))
    np.testing.assert_allclose(solution.coefficients, element.coefficients, rtol=0, atol=1e-9 * scale)
    np.testing.assert_allclose(solution.coefficients, projected.coefficients, rtol=0, atol=1e-9 * scale)


def test_manufactured_rhs_matches_astroid_data(astroid, kernel, astroid_phi, astroid_rhs):
    problem = manufactured_problem(astroid, kernel, 0.5, astroid_phi)
    rng = np.random.default_rng(5)
    theta = rng.uniform(0.1, TWO_PI - 0.1, size=12)
    theta = theta[np.abs(theta - THETA_D) > 0.05]
    np.testing.assert_allclose(problem.rhs(theta), astroid_rhs(theta), rtol=0, atol=2e-4)


def test_manufactured_circle_converges(circle, kernel, circle_phi):
    problem = manufactured_problem(circle, kernel, 0.5, circle_phi)
    errors = []
    for n_B in (40, 80, 160):
        solution = solve_problem(problem, Discretization(n_B=n_B))
        assert solution.diagnostics.residual_inf <= 1e-10 * solution.diagnostics.rhs_inf
        errors.append(measure_error(solution, circle_phi, circle_phi.jumps).max_excluded)
    assert errors[0] > errors[1] > errors[2]
    assert np.log2(errors[0] / errors[2]) / 2 >= 1
    assert errors[2] <= 1e-3


def test_enrichment_removes_gibbs_oscillation(circle, kernel, circle_phi):
    problem = manufactured_problem(circle, kernel, 0.5, circle_phi)
    disc = Discretization(n_B=80)
    enriched = solve_problem(problem, disc)
    plain = solve_without_enrichment(problem, disc)
    beta = abs(circle_phi.jump_sizes()[0])
    assert enriched.beta[0] == pytest.approx(1.0, abs=1e-3)
    assert near_jump_error(enriched, circle_phi, np.pi) < 0.05 * beta
    assert near_jump_error(plain, circle_phi, np.pi) > 0.25 * beta
    assert plain.beta.size == 0


def test_singular_matrix_is_reported(circle, kernel, circle_phi):
    problem = Problem(contour=circle, kernel=kernel, lam=0.5, rhs=circle_phi)
    system = assemble(problem, Discretization(n_B=8, quad=SMALL_QUAD))
    broken = dataclasses.replace(system, matrix=np.zeros_like(system.matrix))
    with pytest.raises(SingularSystemError):
        solve(broken)


def test_kernel_failure_names_the_stage(circle, circle_phi):
    # s = 1 is hit exactly at the reference point of the quadrature grid
    problem = Problem(contour=circle, kernel=Kernel.from_text("1/(s-1)"), lam=0.5, rhs=circle_phi)
    with pytest.raises(EvaluationError, match="assembling B2"):
        assemble(problem, Discretization(n_B=8, quad=SMALL_QUAD))


def test_measure_error_excludes_neighbourhoods(circle_phi):
    def shifted(theta):
        return np.asarray(circle_phi(theta)) + np.where(np.abs(np.asarray(theta) - np.pi) < 0.01, 5.0, 0.0)

    report = measure_error(shifted, circle_phi, circle_phi.jumps)
    assert report.max_excluded == 0.0
    assert report.max_included == pytest.approx(5.0)


@pytest.mark.slow
def test_astroid_benchmark(astroid, kernel, astroid_rhs, astroid_phi):
    problem = Problem(contour=astroid, kernel=kernel, lam=0.5, rhs=astroid_rhs, exact_solution=astroid_phi)
    exact_beta = astroid_phi.jump_sizes()
    errors, away, beta_errors = {}, {}, {}
    for n_B in (160, 320):
        solution = solve_problem(problem, Discretization(n_B=n_B))
        assert solution.diagnostics.residual_inf <= 1e-10 * solution.diagnostics.rhs_inf
        errors[n_B] = measure_error(solution, astroid_phi, astroid_phi.jumps).max_excluded
        away[n_B] = away_from_jumps_error(solution, astroid_phi, astroid_phi.jumps, distance=0.3)
        beta_errors[n_B] = abs(solution.beta[0] - exact_beta[0])
    # the cusp sits on the reference point; its neighbourhood converges too
    assert errors[320] < errors[160]
    assert errors[320] <= 0.1
    assert away[320] < away[160]
    assert away[320] <= 1e-2
    assert beta_errors[320] <= 0.01 * abs(exact_beta[0])


@pytest.mark.slow
def test_enrichment_removes_gibbs_oscillation_on_astroid(astroid, kernel, astroid_rhs, astroid_phi):
    problem = Problem(contour=astroid, kernel=kernel, lam=0.5, rhs=astroid_rhs, exact_solution=astroid_phi)
    disc = Discretization(n_B=160)
    beta = abs(astroid_phi.jump_sizes()[0])
    enriched = solve_problem(problem, disc)
    plain = solve_without_enrichment(problem, disc)
    assert near_jump_error(enriched, astroid_phi, THETA_D) < 0.05 * beta
    assert near_jump_error(plain, astroid_phi, THETA_D) > 0.25 * beta


def test_lagrange_collocation_at_zero_lambda_takes_node_values(circle, kernel):
    f = PiecewiseFn.from_expression(circle, "exp(t)")
    problem = Problem(contour=circle, kernel=kernel, lam=0.0, rhs=f)
    solution = solve_problem(problem, Discretization(n_B=16, basis="lagrange"))
    np.testing.assert_allclose(solution.alpha, np.exp(solution.basis.nodes.points), rtol=0, atol=1e-12)
    theta = np.linspace(0.1, 6.2, 25)
    np.testing.assert_allclose(solution(theta), np.exp(circle.point(theta)), rtol=0, atol=1e-10)


def test_lagrange_collocation_solves_manufactured_circle(circle, kernel, circle_phi):
    problem = manufactured_problem(circle, kernel, 0.5, circle_phi)
    lagrange = solve_problem(problem, Discretization(n_B=32, basis="lagrange"))
    spline = solve_problem(problem, Discretization(n_B=32))
    for solution in (lagrange, spline):
        assert solution.diagnostics.residual_within_tolerance
        assert 0.0 < solution.diagnostics.rcond <= 1.0
        assert solution.diagnostics.condition_estimate_1norm == pytest.approx(1.0 / solution.diagnostics.rcond)
    assert lagrange.beta[0] == pytest.approx(1.0, abs=1e-4)
    assert measure_error(lagrange, circle_phi, circle_phi.jumps).max_excluded < 1e-4


def test_lagrange_system_has_unit_rows_at_unshifted_nodes(circle, kernel, circle_phi):
    problem = Problem(contour=circle, kernel=kernel, lam=0.5, rhs=circle_phi)
    system = assemble(problem, Discretization(n_B=16, basis="lagrange", quad=SMALL_QUAD))
    assert system.matrix.shape == (17, 17)
    rows = np.flatnonzero(~system.points.shifted[:16])
    np.testing.assert_allclose(np.abs(system.B1[rows, :16]).max(axis=1), 1.0)
    np.testing.assert_allclose(np.abs(system.B1[rows, :16]).sum(axis=1), 1.0, atol=1e-12)


def test_residual_above_tolerance_is_flagged(monkeypatch, caplog, circle, kernel, circle_phi):
    monkeypatch.setattr("fredholm.colloc.residual_inf", lambda a, x, b: 1.0)
    problem = Problem(contour=circle, kernel=kernel, lam=0.0, rhs=circle_phi)
    solution = solve_problem(problem, Discretization(n_B=16))
    assert not solution.diagnostics.residual_within_tolerance
    assert "exceeds" in caplog.text


def test_solution_depends_smoothly_on_lambda(circle, kernel, circle_phi):
    problem = Problem(contour=circle, kernel=kernel, lam=0.5, rhs=circle_phi)
    system = assemble(problem, Discretization(n_B=16, quad=SMALL_QUAD))

    def coefficients(lam):
        shifted = dataclasses.replace(system, lam=lam, matrix=system.B1 - lam * system.B2)
        return solve(shifted).coefficients

    base = coefficients(0.5)
    step = coefficients(0.5 + 1e-6) - base
    double = coefficients(0.5 + 2e-6) - base
    assert np.max(np.abs(step)) <= 1e-3 * np.max(np.abs(base))
    np.testing.assert_allclose(double, 2 * step, rtol=1e-3, atol=1e-12)
