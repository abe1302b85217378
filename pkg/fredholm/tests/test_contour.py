import numpy as np
import pytest
from fredholm.contour import TWO_PI, Contour, same_angle, wrap_angle, wrap_angle_closed
from fredholm.errors import ConfigurationError


def test_astroid_points_and_derivative(astroid):
    assert astroid.point(0.0) == pytest.approx(4 / 3)
    assert astroid.map.derivative(1.0) == pytest.approx(0.0)
    theta = 0.4
    w = np.exp(1j * theta)
    assert astroid.tangent_factor(theta) == pytest.approx((1 - w**-4) * 1j * w)


def test_point_is_periodic(astroid):
    theta = np.linspace(0.0, TWO_PI, 17)
    np.testing.assert_allclose(astroid.point(theta + TWO_PI), astroid.point(theta), atol=1e-13)


def test_explicit_derivative_is_used(circle):
    contour = Contour.from_text("2*w", "2")
    assert contour.tangent_factor(0.0) == pytest.approx(2j)
    contour.validate()


def test_validate_rejects_wrong_derivative():
    with pytest.raises(ConfigurationError, match="finite differences"):
        Contour.from_text("w + 1/(3*w^3)", "1").validate()


def test_validate_rejects_non_injective_map():
    with pytest.raises(ConfigurationError, match="not injective"):
        Contour.from_text("w^2").validate()


def test_map_may_only_use_w():
    with pytest.raises(ConfigurationError):
        Contour.from_text("w + t")


def test_unknown_preset():
    with pytest.raises(ConfigurationError, match="unknown contour preset"):
        Contour.from_preset("ellipse")


def test_reference_angle_rotates_parametrisation():
    rotated = Contour(map=Contour.from_preset("circle").map, reference_angle=np.pi / 2)
    assert rotated.point(0.0) == pytest.approx(1j)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_generate_nodes(astroid, order):
    nodes = astroid.generate_nodes(16, order=order)
    np.testing.assert_allclose(nodes.angles, TWO_PI * np.arange(16) / 16)
    assert nodes.points[0] == pytest.approx(4 / 3)
    assert nodes.min_spacing > 0


def test_generate_nodes_needs_enough_nodes(circle):
    with pytest.raises(ConfigurationError):
        circle.generate_nodes(3, order=1)
    with pytest.raises(ConfigurationError):
        circle.generate_nodes(3, order=4)


def test_arc_index_is_left_closed(circle):
    nodes = circle.generate_nodes(8)
    h = TWO_PI / 8
    assert nodes.arc_index(0.0) == 0
    assert nodes.arc_index(h) == 1
    assert nodes.arc_index(h - 1e-9) == 0
    assert nodes.arc_index(TWO_PI) == 0
    assert nodes.arc_index(TWO_PI - 1e-9) == 7


def test_angle_helpers():
    assert wrap_angle(TWO_PI) == 0.0
    assert wrap_angle_closed(0.0) == TWO_PI
    assert wrap_angle_closed(TWO_PI) == TWO_PI
    np.testing.assert_allclose(wrap_angle_closed(np.array([0.0, 1.0, TWO_PI + 1.0])), [TWO_PI, 1.0, 1.0])
    assert same_angle(0.0, TWO_PI)
    assert not same_angle(0.0, 1e-6)


def test_arc_index_of_tiny_negative_angle(circle):
    nodes = circle.generate_nodes(8)
    # np.mod(-1e-17, 2π) rounds to 2π
    assert wrap_angle(-1e-17) == 0.0
    assert nodes.arc_index(-1e-17) == 0
    np.testing.assert_array_equal(nodes.arc_index(np.array([-1e-17, -1e-3])), [0, 7])
    assert wrap_angle_closed(-1e-17) == TWO_PI


def test_injectivity_is_sampled_at_ten_points_per_node():
    seven_fold = Contour.from_text("w^7")
    # 400 samples never land on a repeated image, 700 do
    seven_fold.validate(n_B=40)
    with pytest.raises(ConfigurationError, match="700 sampled"):
        seven_fold.validate(n_B=70)


def test_derivative_is_checked_along_theta():
    rotated = Contour(map=Contour.from_text("w + 1/(3*w^3)").map, reference_angle=0.3)
    rotated.validate(n_B=16)
    with pytest.raises(ConfigurationError, match="finite differences"):
        Contour(map=Contour.from_text("w + 1/(3*w^3)", "1 + w^-4").map, reference_angle=0.3).validate(n_B=16)
