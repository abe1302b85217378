import numpy as np
import pytest
from fredholm.basis import BSplineBasis
from fredholm.colloc import Discretization, collocation_points
from fredholm.contour import TWO_PI
from fredholm.errors import ConfigurationError, EvaluationError, InsufficientDataError
from fredholm.piecewise import JumpSet, PiecewiseFn
from fredholm.quadrature import (
    Kernel,
    QuadratureConfig,
    apply_discrete_operator,
    gauss_legendre,
    integral_blocks,
    integral_I1,
    integral_I2,
    jump_segments,
    trapezoid,
)
from scipy.special import i0

THETA_D = 0.7 * np.pi
EXP_COS = 2 * np.pi * i0(1.0)


def exp_cos(theta):
    return np.exp(np.cos(theta))


def test_trapezoid_is_spectral_on_periodic_integrand():
    errors = {N: abs(trapezoid(exp_cos, 0.0, TWO_PI, N) - EXP_COS) for N in (4, 8, 16, 32)}
    assert errors[4] > errors[8] > errors[16]
    assert errors[32] <= 1e-9
    assert abs(trapezoid(exp_cos, 0.0, TWO_PI, 32) - trapezoid(exp_cos, 0.0, TWO_PI, 4096)) <= 1e-9


def test_trapezoid_interval_checks():
    assert trapezoid(exp_cos, 1.0, 1.0, 10) == 0
    with pytest.raises(ConfigurationError):
        trapezoid(exp_cos, 2.0, 1.0, 10)
    with pytest.raises(ConfigurationError):
        trapezoid(exp_cos, 0.0, 1.0, 0)


def test_trapezoid_reports_non_finite_node():
    with pytest.raises(EvaluationError) as info:
        trapezoid(lambda th: np.where(th > 0.5, np.inf, 1.0), 0.0, 1.0, 4)
    assert info.value.theta == pytest.approx(0.75)


def test_gauss_legendre_exact_for_polynomials():
    assert gauss_legendre(lambda x: x**5, 0.0, 1.0, panels=2) == pytest.approx(1 / 6, abs=1e-15)
    assert gauss_legendre(exp_cos, 0.0, TWO_PI, panels=8) == pytest.approx(EXP_COS, abs=1e-13)


def test_quadrature_config_checks():
    assert QuadratureConfig().N == 200
    assert QuadratureConfig(N=10, oracle_N=40).oracle.N == 40
    with pytest.raises(ConfigurationError):
        QuadratureConfig(N=1)
    with pytest.raises(ConfigurationError):
        QuadratureConfig(N=200, oracle_N=400)


def test_kernel_variables():
    assert Kernel.from_text("t^2 + s^2")(2.0, 1j) == pytest.approx(3.0)
    with pytest.raises(ConfigurationError):
        Kernel.from_text("t + w")


def test_jump_segments_follow_knot_grid():
    nodes = TWO_PI * np.arange(8) / 8
    segments = jump_segments(3.0, nodes)
    assert segments[0] == (3.0, nodes[4])
    assert segments[-1] == (nodes[7], TWO_PI)
    assert len(segments) == 5
    assert jump_segments(TWO_PI, nodes) == []


def _astroid_system(astroid, n_B=40):
    disc = Discretization(n_B=n_B)
    basis = BSplineBasis.build(astroid, n_B, 4)
    jumps = JumpSet((THETA_D, TWO_PI))
    points = collocation_points(disc, basis.nodes, jumps)
    return basis, jumps, np.asarray(astroid.point(points.angles))


def test_blocks_match_entrywise_integrals(astroid, kernel):
    basis, jumps, t_c = _astroid_system(astroid, 12)
    cfg = QuadratureConfig(N=50, oracle_N=200)
    blocks = integral_blocks(basis, t_c, kernel, jumps.angles, cfg)
    for i in (0, 5, 12):
        for k in (0, 3, 11):
            assert blocks.I1[i, k] == pytest.approx(integral_I1(basis, k, t_c[i], kernel, cfg), rel=1e-12)
        split = integral_I2(THETA_D, t_c[i], kernel, astroid, cfg, basis.nodes.angles)
        assert blocks.I2[i, 0] == pytest.approx(split, rel=1e-12)
        assert blocks.I2[i, 1] == 0


def test_blocks_do_not_depend_on_executor(astroid, kernel):
    from concurrent.futures import ThreadPoolExecutor

    basis, jumps, t_c = _astroid_system(astroid, 16)
    cfg = QuadratureConfig(N=40, oracle_N=160)
    serial = integral_blocks(basis, t_c, kernel, jumps.angles, cfg)
    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded = integral_blocks(basis, t_c, kernel, jumps.angles, cfg, pool)
    np.testing.assert_array_equal(serial.I1, threaded.I1)
    np.testing.assert_array_equal(serial.I2, threaded.I2)


def test_blocks_match_fine_oracle(astroid, kernel):
    basis, jumps, t_c = _astroid_system(astroid, 40)
    cfg = QuadratureConfig(N=200, oracle_N=4000)
    blocks = integral_blocks(basis, t_c, kernel, jumps.angles, cfg)
    oracle = integral_blocks(basis, t_c, kernel, jumps.angles, cfg.oracle)
    for ours, fine in ((blocks.I1, oracle.I1), (blocks.I2, oracle.I2)):
        np.testing.assert_allclose(ours, fine, rtol=1e-6, atol=1e-6 * np.max(np.abs(fine)))


def test_single_segment_and_split_I2_agree(astroid, kernel):
    t_c = astroid.point(1.0)
    cfg = QuadratureConfig(N=20000, oracle_N=80000)
    whole = integral_I2(THETA_D, t_c, kernel, astroid, cfg)
    split = integral_I2(THETA_D, t_c, kernel, astroid, QuadratureConfig(), astroid.generate_nodes(40).angles)
    assert whole == pytest.approx(split, rel=1e-5)


def test_operator_on_astroid_solution(astroid, kernel, astroid_phi):
    operator = apply_discrete_operator(kernel, 0.5, astroid_phi, astroid, QuadratureConfig(), rule="gauss")
    t = 4 / 3
    u = (0.78148 - 0.081271j) * t**2 + 0.91818 + 0.025237j
    assert abs(operator(0.0) - 0.5 * u) <= 2e-4


def test_operator_rules_agree(astroid, kernel, astroid_phi):
    cfg = QuadratureConfig()
    theta = np.array([0.3, 2.0, 5.0])
    gauss = apply_discrete_operator(kernel, 0.5, astroid_phi, astroid, cfg, rule="gauss")(theta)
    trap = apply_discrete_operator(kernel, 0.5, astroid_phi, astroid, cfg, rule="trapezoid")(theta)
    np.testing.assert_allclose(trap, gauss, rtol=1e-5)
    with pytest.raises(ConfigurationError):
        apply_discrete_operator(kernel, 0.5, astroid_phi, astroid, cfg, rule="simpson")


def test_operator_with_zero_lambda(circle, kernel, circle_phi):
    operator = apply_discrete_operator(kernel, 0.0, circle_phi, circle, QuadratureConfig())
    assert operator(1.0) == 0
    np.testing.assert_array_equal(operator(np.ones(3)), np.zeros(3))


def test_operator_needs_closed_form(circle, kernel):
    angles = TWO_PI * np.arange(8) / 8
    samples = PiecewiseFn.from_samples(circle, angles, np.ones(8))
    with pytest.raises(InsufficientDataError):
        apply_discrete_operator(kernel, 0.5, samples, circle, QuadratureConfig())


def test_trapezoid_is_linear():
    def g(theta):
        return np.sin(theta) ** 2

    combined = trapezoid(lambda th: (2 - 1j) * exp_cos(th) + 3.0 * g(th), 0.2, 2.9, 37)
    separate = (2 - 1j) * trapezoid(exp_cos, 0.2, 2.9, 37) + 3.0 * trapezoid(g, 0.2, 2.9, 37)
    assert combined == pytest.approx(separate, rel=1e-13)


def test_trapezoid_adds_over_adjacent_segments():
    # equal step on both pieces, so the node sets coincide
    whole = trapezoid(exp_cos, 0.0, 3.0, 30)
    assert trapezoid(exp_cos, 0.0, 1.0, 10) + trapezoid(exp_cos, 1.0, 3.0, 20) == pytest.approx(whole, rel=1e-13)
