import math

import numpy as np
import pytest

from wettix.anisotropy import (
    Constant,
    Harmonics,
    Induced,
    Shifted,
    SqrtTrig,
    SurfaceTensionTriple,
    admissible_radii,
    check_tension,
    contact_angle,
    contact_condition_residual,
    convexity_margin,
    parse_anisotropy,
    winterbottom_shape,
    wulff_boundary,
)
from wettix.errors import ConfigError, NoEquilibriumShape

FOUR_FOLD = Harmonics(1.0, ((-1.0 / 16.0, 4, 0.0),))
THETA = np.linspace(0.0, 2 * np.pi, 97)


@pytest.mark.parametrize(
    "fn, orders",
    [
        (SqrtTrig(1.0, math.pi / 3, "sin"), 4),
        (SqrtTrig(0.7, -math.pi / 8, "cos"), 4),
        (FOUR_FOLD, 4),
        (Induced(SqrtTrig(1.0, 0.3, "sin"), 1.0), 2),
    ],
)
def test_derivatives_match_central_differences(fn, orders):
    h = 1e-5
    for k in range(orders):
        fd = (fn(THETA + h, k) - fn(THETA - h, k)) / (2 * h)
        np.testing.assert_allclose(fd, fn(THETA, k + 1), rtol=1e-6, atol=1e-6)


def test_constant_has_zero_derivatives():
    c = Constant(1.5)
    np.testing.assert_array_equal(c(THETA), 1.5)
    for k in range(1, 5):
        np.testing.assert_array_equal(c(THETA, k), 0.0)


def test_four_fold_second_derivative_and_convexity_margin():
    assert FOUR_FOLD(0.0, 2) == pytest.approx(1.0)
    # σ + σ'' = 1 + (15/16) cos 4θ, smallest at θ = π/4
    assert convexity_margin(FOUR_FOLD) == pytest.approx(1.0 / 16.0, abs=1e-12)


def test_shifted_evaluates_base_at_shifted_angle():
    base = SqrtTrig(1.0, 0.2, "sin")
    s = Shifted(base, math.pi / 2)
    np.testing.assert_allclose(s(THETA), base(THETA + math.pi / 2))
    np.testing.assert_allclose(s(THETA, 3), base(THETA + math.pi / 2, 3))


def test_derivative_order_out_of_range():
    with pytest.raises(ConfigError):
        Induced(Constant(1.0))(0.0, 3)


def test_parse_expressions():
    assert parse_anisotropy("sqrt_sin2(a=1, phase=pi/3)") == SqrtTrig(1.0, math.pi / 3, "sin")
    assert parse_anisotropy("sqrt_cos2(1)") == SqrtTrig(1.0, 0.0, "cos")
    assert parse_anisotropy("1.5") == Constant(1.5)
    assert parse_anisotropy(2) == Constant(2.0)
    assert parse_anisotropy("sqrt(2)/2") == Constant(math.sqrt(2) / 2)
    h = parse_anisotropy("harmonics(c0=1, terms=[(-1/16, 4, 0)])")
    assert h == FOUR_FOLD
    ind = parse_anisotropy("induced(sqrt_sin2(a=1, phase=-pi/3), 1)")
    assert isinstance(ind, Induced) and ind.sigma == SqrtTrig(1.0, -math.pi / 3, "sin")


@pytest.mark.parametrize(
    "text",
    [
        "spline(1)",
        "sqrt_sin2(a=1, b=2)",
        "harmonics(1, [(1, 3, 0)])",
        "__import__('os')",
        "1 +",
        "sqrt_sin2()",
        "x",
    ],
)
def test_parse_rejects(text):
    with pytest.raises(ConfigError):
        parse_anisotropy(text)


def test_check_tension_rejects_nonconvex_and_nonpositive():
    with pytest.raises(ConfigError, match="not convex"):
        check_tension(Harmonics(1.0, ((-0.1, 4, 0.0),)))
    with pytest.raises(ConfigError, match="positive"):
        check_tension(Constant(-1.0))
    check_tension(FOUR_FOLD)


def test_convexity_margin_needs_enough_samples():
    with pytest.raises(ConfigError):
        convexity_margin(FOUR_FOLD, samples=100)


def test_triangle_inequality():
    one = Constant(1.0)
    report = SurfaceTensionTriple(one, one, one, one, one, one).check()
    assert report.triangle_ok and report.strong_triangle
    with pytest.raises(ConfigError, match="triangle"):
        SurfaceTensionTriple(one, one, Constant(3.0), one, one, one).check()
    with pytest.raises(ConfigError, match="m_VS"):
        SurfaceTensionTriple(one, one, one, one, one, Constant(0.0)).check()


def test_admissible_radii_isotropic():
    lower, upper = admissible_radii(Constant(1.0), Constant(1.0))
    assert lower == pytest.approx(0.5)
    assert upper == pytest.approx(0.5)


def test_wulff_boundary_of_isotropic_tension_is_unit_circle():
    w = wulff_boundary(Constant(1.0), 720)
    assert w.closed
    np.testing.assert_allclose(np.hypot(w.points[:, 0], w.points[:, 1]), 1.0, atol=1e-12)


def test_wulff_boundary_support_function():
    pts = wulff_boundary(FOUR_FOLD).points
    phis = np.linspace(0.0, 2 * np.pi, 360, endpoint=False)
    support = np.max(pts[:, 0, None] * np.cos(phis) + pts[:, 1, None] * np.sin(phis), axis=0)
    np.testing.assert_allclose(support, FOUR_FOLD(phis), rtol=1e-5)


def test_wulff_boundary_requires_convexity():
    with pytest.raises(ConfigError):
        wulff_boundary(Harmonics(1.0, ((-0.1, 4, 0.0),)))


def test_winterbottom_half_disc():
    import shapely

    area = 0.05
    shape, lam = winterbottom_shape(Constant(1.0), 1.0, 1.0, area, 0.5, center_x=0.4)
    assert lam == pytest.approx(math.sqrt(2 * area / math.pi), rel=1e-5)
    poly = shapely.Polygon(shape.points)
    assert poly.area == pytest.approx(area, rel=1e-9)
    assert poly.centroid.x == pytest.approx(0.4, abs=1e-12)
    assert shape.points[:, 1].min() == pytest.approx(0.5, abs=1e-12)


def test_winterbottom_circular_segment():
    import shapely

    # σ_VS − σ_LS = −0.5 cuts the unit circle at y = −0.5, contact angle 2π/3
    theta_c = 2 * math.pi / 3
    unit_area = theta_c - math.sin(theta_c) * math.cos(theta_c)
    shape, lam = winterbottom_shape(Constant(1.0), 1.5, 1.0, unit_area, 0.5)
    assert lam == pytest.approx(1.0, rel=1e-5)
    assert shapely.Polygon(shape.points).area == pytest.approx(unit_area, rel=1e-9)


def test_winterbottom_without_partial_wetting():
    with pytest.raises(NoEquilibriumShape):
        winterbottom_shape(Constant(1.0), 1.0, 3.0, 0.05, 0.5)
    with pytest.raises(ConfigError):
        winterbottom_shape(Constant(1.0), 1.0, 1.0, 0.0, 0.5)


def test_contact_angle_young():
    assert contact_angle(Constant(1.0), 1.5, 1.0) == pytest.approx(2 * math.pi / 3, abs=1e-12)
    assert contact_angle(Constant(1.0), 1.0, 1.0) == pytest.approx(math.pi / 2, abs=1e-12)


def test_contact_angle_anisotropic_root():
    sigma = SqrtTrig(1.0, math.pi / 3, "sin")
    theta = contact_angle(sigma, 1.5, 1.0)
    assert 0 < theta < math.pi
    assert abs(contact_condition_residual(sigma, theta, 1.5, 1.0)) < 1e-12


def test_contact_angle_without_root():
    with pytest.raises(NoEquilibriumShape):
        contact_angle(Constant(1.0), 1.0, 3.0)
