import math

import numpy as np
import pytest

from wettix.anisotropy import Constant, Harmonics, SqrtTrig, admissible_radii
from wettix.errors import ConfigError, PositivityViolation
from wettix.kernels import (
    StencilSet,
    build_single_circle_kernel,
    build_two_circle_kernel,
    check_moments,
    discretize,
    kernel_table,
    triangle_check,
)

FOUR_FOLD = Harmonics(1.0, ((-1.0 / 16.0, 4, 0.0),))


def test_four_fold_two_circle_weights_closed_form():
    R1, R2 = 2.0, 0.1
    k = build_two_circle_kernel(FOUR_FOLD, Constant(1.0), R1=R1, R2=R2, q=1024)
    c4 = np.cos(4 * k.angles)
    w1, w2 = (c.weights for c in k.circles)
    np.testing.assert_allclose(w1, (16 - 64 * R2**2 + 15 * c4) / (64 * (R1**2 - R2**2)), atol=1e-12)
    np.testing.assert_allclose(w2, (-0.25 + R1**2 - 15 / 64 * c4) / (R1**2 - R2**2), atol=1e-12)
    assert k.radii == (R1, R2)
    assert k.min_weight > 0


def test_four_fold_needs_small_inner_radius():
    # 16 − 64·R2² < 15 once R2 > 1/8
    with pytest.raises(PositivityViolation):
        build_two_circle_kernel(FOUR_FOLD, Constant(1.0), R1=2.0, R2=0.25)


def test_isotropic_two_circle_weights():
    k = build_two_circle_kernel(Constant(1.0), Constant(1.0), 2.0, 0.25, q=64)
    np.testing.assert_allclose(k.circles[0].weights, 1 / 21)
    np.testing.assert_allclose(k.circles[1].weights, 20 / 21)


def test_two_circle_moments_reproduce_tension_and_mobility():
    sigma = SqrtTrig(1.0, math.pi / 3, "sin")
    m = SqrtTrig(1.0, 0.0, "cos")
    report = check_moments(build_two_circle_kernel(sigma, m, 2.0, 0.25, q=256))
    assert report.max_deviation < 1e-12


def test_negative_weight_reports_radius_bounds():
    with pytest.raises(PositivityViolation) as info:
        build_two_circle_kernel(Constant(1.0), Constant(1.0), R1=2.0, R2=1.0)
    err = info.value
    assert isinstance(err, ConfigError)
    assert err.r_max_bound == pytest.approx(0.5)
    assert err.r_min_bound == pytest.approx(0.5)
    assert 0.0 <= err.theta < 2 * math.pi


@pytest.mark.parametrize("radii", [(1.0, 1.0), (0.0, 1.0), (2.0, -0.25)])
def test_two_circle_rejects_bad_radii(radii):
    with pytest.raises(ConfigError):
        build_two_circle_kernel(Constant(1.0), Constant(1.0), *radii)


def test_single_circle_weights_and_induced_mobility():
    k, induced = build_single_circle_kernel(FOUR_FOLD, R=0.5, q=1024)
    w = k.circles[0].weights
    np.testing.assert_allclose(w, 1 + 15 / 16 * np.cos(4 * k.angles), atol=1e-12)
    assert w.min() == pytest.approx(1 / 16)
    assert induced(0.0) == pytest.approx(16 / 31)
    assert check_moments(k).max_deviation < 1e-12


def test_single_circle_rejects_nonconvex_tension():
    with pytest.raises(PositivityViolation):
        build_single_circle_kernel(Harmonics(1.0, ((-0.1, 4, 0.0),)), R=0.5)


def test_discretized_stencil_mass_and_radius():
    dt = 0.0004
    k = build_two_circle_kernel(Constant(1.0), Constant(1.0), 2.0, 0.25, q=100)
    s = discretize(k, dt)
    assert len(s) == 200
    # Σ R_i ω_i 2π = 2π (2/21 + 5/21)
    assert s.mass == pytest.approx(2 * math.pi / 3)
    assert s.max_radius == pytest.approx(2.0 * math.sqrt(dt))
    with pytest.raises(ConfigError):
        discretize(k, 0.0)


def test_triangle_check_and_alignment():
    one = Constant(1.0)
    vl = discretize(build_two_circle_kernel(one, one, 2.0, 0.25, 32, "VL"), 0.001)
    ls = discretize(build_two_circle_kernel(Constant(1.5), one, 2.0, 0.25, 32, "LS"), 0.001)
    vs = discretize(build_two_circle_kernel(one, one, 2.0, 0.25, 32, "VS"), 0.001)
    assert triangle_check(vl, ls, vs)
    far = discretize(build_two_circle_kernel(Constant(3.0), one, 2.0, 0.25, 32, "LS"), 0.001)
    assert not triangle_check(vl, far, vs)
    other_dt = discretize(build_two_circle_kernel(one, one, 2.0, 0.25, 32, "VS"), 0.002)
    with pytest.raises(ConfigError):
        StencilSet(vl, ls, other_dt)


def test_kernel_table_columns():
    k = build_two_circle_kernel(FOUR_FOLD, Constant(1.0), 2.0, 0.1, q=16)
    table = kernel_table(k)
    assert table.shape == (16, 3)
    np.testing.assert_allclose(table[:, 0], 2 * np.pi * np.arange(16) / 16)


def test_moments_for_random_admissible_pairs(rng):
    for _ in range(20):
        sigma = SqrtTrig(rng.uniform(0.1, 2.0), rng.uniform(0, np.pi), "sin")
        m = SqrtTrig(rng.uniform(0.1, 2.0), rng.uniform(0, np.pi), "cos")
        lower, upper = admissible_radii(sigma, m)
        k = build_two_circle_kernel(sigma, m, R1=2.0 * upper, R2=0.5 * lower, q=128)
        assert k.min_weight > 0
        assert check_moments(k).max_deviation < 1e-12
