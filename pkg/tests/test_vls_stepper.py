import numpy as np
import pytest

from wettix.anisotropy import Constant, Harmonics
from wettix.errors import ConfigError, PreconditionViolation
from wettix.fields import (
    Grid2D,
    LevelSetState,
    ScalarField,
    area_nonneg,
    extract_contour,
    sample_values,
    signed_distance_init,
)
from wettix.kernels import StencilSet, build_two_circle_kernel, discretize
from wettix.shapes import Disc, Substrate
from wettix.vls_stepper import (
    StepParams,
    _select,
    _Tables,
    default_band,
    level_decision_oracle,
    median_update_point,
    step,
    td_consistency_check,
)


def unit_trace_tables() -> _Tables:
    # neighbour values {1, 2, 3, 4}, unit weights, all fluid: D = −4 + 2·(swept count)
    s = np.array([[1.0, 2.0, 3.0, 4.0]])
    D = np.array([[-4.0, -2.0, 0.0, 2.0, 4.0]])
    return _Tables(s, np.maximum.accumulate(D, axis=1))


def test_exit_rule_trace():
    t = unit_trace_tables()
    assert _select(t, 0.0, False, 0.1)[0] == pytest.approx(3.5)
    assert _select(t, 0.0, True, 0.1)[0] == pytest.approx(2.5)


def test_exit_rule_boundaries():
    t = unit_trace_tables()
    assert _select(t, 10.0, False, 0.1)[0] == pytest.approx(4.1)
    assert _select(t, -10.0, False, 0.1)[0] == pytest.approx(0.9)


def test_constant_neighbourhood_returns_the_constant(iso_stencils, fluid_state):
    n = 16
    state = fluid_state(np.full((n, n), 0.3), np.full((n, n), -0.3))
    params = StepParams(0.001, iso_stencils(0.001))
    assert median_update_point((5, 7), state, params, 0.0) == pytest.approx(0.3)


def test_step_params_validation(iso_stencils):
    st = iso_stencils(0.001)
    with pytest.raises(ConfigError):
        StepParams(0.002, st)
    with pytest.raises(ConfigError):
        StepParams(0.001, st, comparison="sloppy")
    with pytest.raises(ConfigError):
        StepParams(0.001, st, band=-1.0)
    with pytest.raises(ConfigError):
        StepParams(0.001, st, mu_tol=0.0)
    with pytest.raises(ConfigError):
        StepParams(0.001, st, mu_bracket=(1.0, -1.0))
    assert StepParams(0.001, st, comparison="strict").strict


def test_oracle_on_a_uniform_field(iso_stencils, fluid_state):
    # uniform field: every neighbour is in {φ ≥ λ} for λ below the value, none above
    n = 16
    state = fluid_state(np.full((n, n), 0.3), np.full((n, n), -0.3))
    params = StepParams(0.001, iso_stencils(0.001))
    assert level_decision_oracle((3, 3), state, params, 0.0, 0.2)
    assert not level_decision_oracle((3, 3), state, params, 0.0, 0.4)


def test_median_update_agrees_with_level_oracle(iso_stencils, fluid_state, smooth_field, rng):
    n = 32
    dt = (3.0 / n / 2.0) ** 2
    params = StepParams(dt, iso_stencils(dt))
    st = params.stencils
    mass = st.vl.mass
    checked = 0
    for _ in range(3):
        phi = smooth_field(rng, n)
        state = fluid_state(phi)
        for _ in range(40):
            iy, ix = (int(v) for v in rng.integers(0, n, size=2))
            mu = float(rng.uniform(-0.6, 0.6) * mass)
            value = median_update_point((iy, ix), state, params, mu)
            vals = np.sort(sample_values(phi, ix / n + st.offsets[:, 0], iy / n + st.offsets[:, 1]))
            for lo, hi in zip(vals[:-1], vals[1:]):
                if hi - lo < 1e-9:
                    continue
                lam = 0.5 * (lo + hi)
                if abs(lam - value) < 1e-9:
                    continue
                assert level_decision_oracle((iy, ix), state, params, mu, lam) == (lam < value)
                checked += 1
    assert checked > 1000


def test_consistency_with_thresholding(iso_stencils, fluid_state, smooth_field, rng):
    n = 32
    dt = (3.0 / n / 2.0) ** 2
    params = StepParams(dt, iso_stencils(dt))
    state = fluid_state(smooth_field(rng, n, modes=4))
    assert td_consistency_check(state, params, trials=n * n, mu=0.0) == 0
    mass = params.stencils.vl.mass
    assert td_consistency_check(state, params, trials=n * n, mu=0.25 * mass) == 0
    # thresholding with the multiplier of the wrong sign disagrees near the interface
    assert td_consistency_check(state, params, trials=n * n, mu=0.5 * mass, td_mu=0.5 * mass) > 0


def droplet_state(n: int) -> LevelSetState:
    grid = Grid2D(n)
    phi_S = signed_distance_init(Substrate("flat", height=0.1), grid, "phi_S")
    drop = signed_distance_init(Disc((0.503, 0.55), 0.2), grid)
    cap = -phi_S.values
    phi_L = ScalarField(grid, np.minimum(drop.values, cap), "phi_L")
    phi_V = ScalarField(grid, np.minimum(-drop.values, cap), "phi_V")
    return LevelSetState(phi_L, phi_V, phi_S, area_nonneg(phi_L))


def test_step_conserves_area_and_respects_the_solid(iso_stencils):
    n = 32
    dt = 0.0005
    params = StepParams(dt, iso_stencils(dt))
    state = droplet_state(n)
    new, report = step(state, params)
    assert new.step_index == 1
    assert report.step == 1
    assert abs(area_nonneg(new.phi_L) - state.target_area) <= state.grid.dx**2
    assert report.area_achieved == pytest.approx(area_nonneg(new.phi_L))
    assert report.max_dphi > 0
    new.check()


def test_disc_stays_round(iso_stencils):
    n = 32
    dt = 0.0005
    params = StepParams(dt, iso_stencils(dt))
    state = droplet_state(n)
    for _ in range(3):
        state, _ = step(state, params)
    (curve,) = [c for c in extract_contour(state.phi_L) if c.closed]
    r = np.hypot(curve.points[:, 0] - 0.503, curve.points[:, 1] - 0.55)
    assert r.max() - r.min() < 1.5 * state.grid.dx


def test_narrow_band_leaves_far_nodes_alone(iso_stencils):
    n = 32
    dt = 0.0005
    st = iso_stencils(dt)
    band = default_band(st, 1.0 / n)
    state = droplet_state(n)
    new, _ = step(state, StepParams(dt, st, band=band))
    far = (np.abs(state.phi_L.values) > band) & (np.abs(state.phi_V.values) > band)
    assert far.any()
    np.testing.assert_array_equal(new.phi_L.values[far], np.minimum(state.phi_L.values, -state.phi_S.values)[far])


def test_empty_band_is_rejected(iso_stencils):
    n = 16
    dt = 0.0005
    grid = Grid2D(n)
    ones = ScalarField(grid, np.ones((n, n)))
    state = LevelSetState(ones, ones, ones.with_values(-np.ones((n, n))), 0.5)
    with pytest.raises(PreconditionViolation):
        step(state, StepParams(dt, iso_stencils(dt), band=0.01))


@pytest.mark.slow
def test_area_is_conserved_over_many_steps(iso_stencils):
    n = 64
    dt = 0.0002
    params = StepParams(dt, iso_stencils(dt, q=64))
    state = droplet_state(n)
    for _ in range(20):
        state, report = step(state, params)
        assert abs(report.area_achieved - state.target_area) <= state.grid.dx**2


def test_decided_level_sets_nest(rng):
    n = 32
    dt = 0.0005
    one = Constant(1.0)
    parts = [
        discretize(build_two_circle_kernel(Constant(s), one, 2.0, 0.25, 32, label), dt)
        for s, label in ((1.0, "VL"), (1.5, "LS"), (1.0, "VS"))
    ]
    params = StepParams(dt, StencilSet(*parts))
    assert params.stencils.triangle_ok
    state = droplet_state(n)
    mass = params.stencils.vl.mass
    for _ in range(1000):
        x = tuple(int(v) for v in rng.integers(0, n, size=2))
        lo, hi = np.sort(rng.uniform(-0.2, 0.2, size=2))
        mu = float(rng.uniform(-0.5, 0.5) * mass)
        for viewpoint in ("L", "V"):
            if level_decision_oracle(x, state, params, mu, hi, viewpoint):
                assert level_decision_oracle(x, state, params, mu, lo, viewpoint)


def unequal_stencils(dt: float) -> StencilSet:
    """Four-fold VL with σ_LS = 1.3 ≠ σ_VS = 1, so solid samples weigh differently per viewpoint."""
    one = Constant(1.0)
    tensions = (Harmonics(1.0, ((0.02, 4, 0.3),)), Constant(1.3), one)
    parts = [
        discretize(build_two_circle_kernel(sigma, one, 2.0, 0.25, 32, label), dt)
        for sigma, label in zip(tensions, ("VL", "LS", "VS"))
    ]
    return StencilSet(*parts)


def wetting_state(n: int, phi: np.ndarray | None = None, height: float = 0.1) -> LevelSetState:
    """Liquid touching a flat substrate: a disc cut by the solid, or ``phi`` capped by it."""
    grid = Grid2D(n)
    phi_S = signed_distance_init(Substrate("flat", height=height), grid, "phi_S")
    if phi is None:
        phi = signed_distance_init(Disc((0.503, 0.22), 0.2), grid).values
    cap = -phi_S.values
    phi_L = ScalarField(grid, np.minimum(phi, cap), "phi_L")
    phi_V = ScalarField(grid, np.minimum(-phi, cap), "phi_V")
    return LevelSetState(phi_L, phi_V, phi_S, area_nonneg(phi_L))


def test_median_update_agrees_with_level_oracle_next_to_the_solid(rng):
    n = 32
    dt = (3.0 / n / 2.0) ** 2
    params = StepParams(dt, unequal_stencils(dt))
    st = params.stencils
    mass = st.vl.mass
    state = wetting_state(n)
    near = np.flatnonzero(np.abs(state.phi_S.values.ravel()) <= 0.15)
    nodes = np.concatenate([rng.choice(near, size=140, replace=False), rng.integers(0, n * n, size=60)])
    checked = 0
    solid_nodes = 0
    for node in nodes:
        iy, ix = divmod(int(node), n)
        px, py = ix / n + st.offsets[:, 0], iy / n + st.offsets[:, 1]
        solid_nodes += bool(np.any(sample_values(state.phi_S.values, px, py) > 0))
        for viewpoint, own in (("L", state.phi_L.values), ("V", state.phi_V.values)):
            mu = float(rng.uniform(-0.6, 0.6) * mass)
            value = median_update_point((iy, ix), state, params, mu, viewpoint)
            vals = np.sort(sample_values(own, px, py))
            for lo, hi in zip(vals[:-1], vals[1:]):
                if hi - lo < 1e-9:
                    continue
                lam = 0.5 * (lo + hi)
                if abs(lam - value) < 1e-9:
                    continue
                assert level_decision_oracle((iy, ix), state, params, mu, lam, viewpoint) == (lam < value)
                checked += 1
    assert solid_nodes >= 60
    assert checked >= 10_000


@pytest.mark.slow
def test_consistency_with_thresholding_on_fine_grids(iso_stencils, smooth_field):
    n = 128
    dt = (3.0 / n / 2.0) ** 2
    params = StepParams(dt, iso_stencils(dt))
    mass = params.stencils.vl.mass
    for seed in range(10):
        rng = np.random.default_rng(seed)
        phi = smooth_field(rng, n, modes=4)
        if seed % 2:
            state = wetting_state(n, phi, height=0.2)
        else:
            grid = Grid2D(n)
            state = LevelSetState(
                ScalarField(grid, phi, "phi_L"),
                ScalarField(grid, -phi, "phi_V"),
                ScalarField(grid, np.full((n, n), -10.0), "phi_S"),
                0.1,
            )
        mu = float(rng.uniform(-0.25, 0.25) * mass)
        assert td_consistency_check(state, params, trials=2000, seed=seed, mu=mu) == 0


def test_median_update_is_monotone_in_the_multiplier(rng):
    n = 32
    dt = 0.0005
    params = StepParams(dt, unequal_stencils(dt))
    state = wetting_state(n)
    mus = np.linspace(-1.0, 1.0, 21) * params.stencils.vl.mass
    for _ in range(30):
        x = tuple(int(v) for v in rng.integers(0, n, size=2))
        a_L = [median_update_point(x, state, params, mu, "L") for mu in mus]
        a_V = [median_update_point(x, state, params, mu, "V") for mu in mus]
        assert np.all(np.diff(a_L) >= 0)
        # V thresholds against −μ
        assert np.all(np.diff(a_V) <= 0)


def test_step_commutes_with_grid_translation():
    n = 32
    dt = 0.0005
    params = StepParams(dt, unequal_stencils(dt))
    state = wetting_state(n)
    shift = (3, 5)

    def rolled(f: ScalarField) -> ScalarField:
        return f.with_values(np.roll(f.values, shift, axis=(0, 1)))

    moved = LevelSetState(rolled(state.phi_L), rolled(state.phi_V), rolled(state.phi_S), state.target_area)
    new, report = step(state, params)
    new_moved, report_moved = step(moved, params)
    assert report_moved.mu == pytest.approx(report.mu, abs=1e-12)
    np.testing.assert_allclose(new_moved.phi_L.values, rolled(new.phi_L).values, atol=1e-9)
    np.testing.assert_allclose(new_moved.phi_V.values, rolled(new.phi_V).values, atol=1e-9)


def test_step_leaves_the_solid_untouched():
    n = 32
    dt = 0.0005
    params = StepParams(dt, unequal_stencils(dt))
    state = wetting_state(n)
    before = state.phi_S.values.copy()
    solid = before >= 0
    for _ in range(3):
        state, _ = step(state, params)
        assert np.array_equal(state.phi_S.values, before)
        assert not np.any((state.phi_L.values > 0) & solid)
        assert not np.any((state.phi_V.values > 0) & solid)


def test_step_and_point_update_share_the_multiplier():
    n = 32
    dt = 0.0005
    params = StepParams(dt, unequal_stencils(dt))
    state = wetting_state(n)
    new, report = step(state, params)
    cap = -state.phi_S.values
    for x in ((12, 16), (4, 9), (20, 3), (7, 27)):
        for viewpoint, field in (("L", new.phi_L), ("V", new.phi_V)):
            value = median_update_point(x, state, params, report.mu, viewpoint)
            assert field.values[x] == pytest.approx(min(value, cap[x]), abs=1e-12)
