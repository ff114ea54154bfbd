# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.vls_stepper

One time step of the vectorial median filter for a liquid droplet L and its vapor V on a
fixed solid S.

At a node x the neighbour values v_j = φ_L(x + y_j) are sorted and swept in increasing
order while the running sum

    D = −‖K_VL‖ + Σ_{swept, fluid} 2·w_VL + Σ_{swept, solid} (w_LS − w_VS + w_VL)

stays ≤ μ (or < μ in strict mode). The new value is the midpoint of the gap where the sweep
stops. Equivalently, a level λ is kept ("in") iff the thresholding sum ψ_λ = D_k(λ) − μ ≤ 0,
which :func:`level_decision_oracle` evaluates directly. The V update swaps the roles of
(L, V) and (LS, VS) and uses −μ, so that the two phases keep partitioning the non-solid
region. μ is found by bisection on the subgrid area of the tentative φ_L.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError, PreconditionViolation
from .fields import LevelSetState, area_of_values, sample_values
from .kernels import StencilSet
from .threshold_dynamics import OTHER, OWN, SOLID, classify, decide, fluid_side, solve_multiplier

logger = logging.getLogger(__name__)

COMPARISONS = ("non-strict", "strict")
VIEWPOINTS = ("L", "V")


@dataclass(frozen=True)
class StepParams:
    """Controls of one median-filter step.

    ``mu_tol`` defaults to dx²/10 and ``mu_bracket`` to ±2‖K_VL‖ when left as None; ``band``
    None updates every node.
    """

    dt: float
    stencils: StencilSet
    mu_bracket: Optional[Tuple[float, float]] = None
    mu_tol: Optional[float] = None
    comparison: str = "non-strict"
    band: Optional[float] = None
    max_bisect: int = 64
    max_doublings: int = 40
    chunk_nodes: int = 16384

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if abs(self.stencils.dt - self.dt) > 1e-15 * max(1.0, self.dt):
            raise ConfigError(f"stencils were built for dt={self.stencils.dt}, step uses dt={self.dt}")
        if self.mu_tol is not None and not self.mu_tol > 0:
            raise ConfigError(f"mu_tol must be positive, got {self.mu_tol}")
        if self.comparison not in COMPARISONS:
            raise ConfigError(f"comparison must be one of {COMPARISONS}, got {self.comparison!r}")
        if self.band is not None and not self.band > 0:
            raise ConfigError(f"band must be positive, got {self.band}")
        if self.mu_bracket is not None and not self.mu_bracket[0] < self.mu_bracket[1]:
            raise ConfigError(f"mu_bracket must be increasing, got {self.mu_bracket}")

    @property
    def strict(self) -> bool:
        return self.comparison == "strict"


@dataclass(frozen=True)
class StepReport:
    step: int
    mu: float
    area_achieved: float
    bisection_iterations: int
    max_dphi: float
    converged: bool = True


def default_band(stencils: StencilSet, dx: float) -> float:
    """Narrow-band half width 1.5·(largest stencil radius) + 3dx."""
    return 1.5 * stencils.max_radius + 3.0 * dx


def _view(state: LevelSetState, viewpoint: str):
    if viewpoint not in VIEWPOINTS:
        raise ConfigError(f"viewpoint must be 'L' or 'V', got {viewpoint!r}")
    if viewpoint == "L":
        return state.phi_L.values, state.phi_V.values
    return state.phi_V.values, state.phi_L.values


def _oriented(mu: float, viewpoint: str) -> float:
    """The liquid multiplier as seen from ``viewpoint``: V thresholds against −μ."""
    return mu if viewpoint == "L" else -mu


def _increments(stencils: StencilSet, viewpoint: str) -> tuple[np.ndarray, np.ndarray]:
    """(fluid, solid) increments of D per stencil entry."""
    w_vl = stencils.vl.weights
    a, b = (stencils.ls.weights, stencils.vs.weights) if viewpoint == "L" else (stencils.vs.weights, stencils.ls.weights)
    return 2.0 * w_vl, a - b + w_vl


@dataclass
class _Tables:
    """Sorted neighbour values and running maxima of D for a block of nodes."""

    sorted_values: np.ndarray  # (N, m)
    running_max: np.ndarray  # (N, m + 1)


def _tables(own, other, solid, nodes: np.ndarray, stencils: StencilSet, viewpoint: str, chunk: int) -> _Tables:
    n = own.shape[0]
    dx = 1.0 / n
    d_fluid, d_solid = _increments(stencils, viewpoint)
    mass = stencils.vl.mass
    m = len(stencils)
    iy, ix = np.divmod(nodes, n)
    s_all = np.empty((len(nodes), m))
    cm_all = np.empty((len(nodes), m + 1))
    for start in range(0, len(nodes), chunk):
        sl = slice(start, start + chunk)
        px = ix[sl, None] * dx + stencils.offsets[None, :, 0]
        py = iy[sl, None] * dx + stencils.offsets[None, :, 1]
        v_own = sample_values(own, px, py)
        fluid = fluid_side(sample_values(other, px, py), sample_values(solid, px, py))
        order = np.argsort(v_own, axis=1, kind="stable")
        s_all[sl] = np.take_along_axis(v_own, order, axis=1)
        d = np.where(np.take_along_axis(fluid, order, axis=1), d_fluid[order], d_solid[order])
        D = np.empty((d.shape[0], m + 1))
        D[:, 0] = -mass
        np.cumsum(d, axis=1, out=D[:, 1:])
        D[:, 1:] -= mass
        cm_all[sl] = np.maximum.accumulate(D, axis=1)
    return _Tables(s_all, cm_all)


def _select(tables: _Tables, mu: float, strict: bool, dx: float) -> np.ndarray:
    s, cm = tables.sorted_values, tables.running_max
    m = s.shape[1]
    k = np.count_nonzero(cm < mu if strict else cm <= mu, axis=1)
    rows = np.arange(len(k))
    lo = np.clip(k - 1, 0, m - 1)
    hi = np.clip(k, 0, m - 1)
    out = 0.5 * (s[rows, lo] + s[rows, hi])
    out = np.where(k == 0, s[:, 0] - dx, out)
    return np.where(k >= m, s[:, -1] + dx, out)


def _exit_index(tables: _Tables, mu: float, strict: bool) -> np.ndarray:
    cm = tables.running_max
    return np.count_nonzero(cm < mu if strict else cm <= mu, axis=1)


def median_update_point(
    x: Tuple[int, int], state: LevelSetState, params: StepParams, mu: float, viewpoint: str = "L"
) -> float:
    """Median-filter value at node x = (iy, ix) before the solid clamp.

    ``mu`` is always the liquid multiplier, as reported by :func:`step`; the V viewpoint
    negates it.
    """
    own, other = _view(state, viewpoint)
    n = own.shape[0]
    node = np.array([int(x[0]) % n * n + int(x[1]) % n])
    tables = _tables(own, other, state.phi_S.values, node, params.stencils, viewpoint, params.chunk_nodes)
    return float(_select(tables, _oriented(mu, viewpoint), params.strict, 1.0 / n)[0])


def level_decision_oracle(
    x: Tuple[int, int],
    state: LevelSetState,
    params: StepParams,
    mu: float,
    level: float,
    viewpoint: str = "L",
) -> bool:
    """Brute-force thresholding of the super-level set {φ ≥ level} at node x; True means in.

    ``mu`` is the liquid multiplier, oriented for ``viewpoint`` like :func:`median_update_point`.
    """
    own, other = _view(state, viewpoint)
    n = own.shape[0]
    iy, ix = int(x[0]), int(x[1])
    st = params.stencils
    px = ix / n + st.offsets[:, 0]
    py = iy / n + st.offsets[:, 1]
    labels = classify(
        sample_values(own, px, py),
        sample_values(other, px, py),
        sample_values(state.phi_S.values, px, py),
        level,
    )
    a, b = (st.ls.weights, st.vs.weights) if viewpoint == "L" else (st.vs.weights, st.ls.weights)
    w = st.vl.weights
    psi = w[labels == OTHER].sum() - w[labels == OWN].sum() + (a - b)[labels == SOLID].sum()
    psi -= _oriented(mu, viewpoint)
    return bool(psi < 0.0) if params.strict else bool(psi <= 0.0)


def _active_nodes(state: LevelSetState, band: Optional[float]) -> np.ndarray:
    n = state.grid.n
    if band is None:
        return np.arange(n * n)
    near = (np.abs(state.phi_L.values) <= band) | (np.abs(state.phi_V.values) <= band)
    return np.flatnonzero(near)


def step(state: LevelSetState, params: StepParams) -> tuple[LevelSetState, StepReport]:
    """Advance φ_L and φ_V by one step, conserving the subgrid area of {φ_L ≥ 0}."""
    grid = state.grid
    dx = grid.dx
    stencils = params.stencils
    phi_L = state.phi_L.values
    phi_V = state.phi_V.values
    phi_S = state.phi_S.values
    cap = -phi_S.ravel()
    active = _active_nodes(state, params.band)
    if len(active) == 0:
        raise PreconditionViolation("narrow band holds no nodes; is there an interface?")

    tables_L = _tables(phi_L, phi_V, phi_S, active, stencils, "L", params.chunk_nodes)
    base_L = phi_L.ravel().copy()

    def tentative_L(mu: float) -> np.ndarray:
        out = base_L.copy()
        out[active] = _select(tables_L, mu, params.strict, dx)
        return np.minimum(out, cap).reshape(phi_L.shape)

    tol = params.mu_tol if params.mu_tol is not None else dx * dx / 10.0
    mass = stencils.vl.mass
    res = solve_multiplier(
        lambda mu: area_of_values(tentative_L(mu), dx),
        state.target_area,
        tol,
        params.mu_bracket or (-2.0 * mass, 2.0 * mass),
        increasing=True,
        max_doublings=params.max_doublings,
        max_iter=params.max_bisect,
    )
    if not res.converged:
        logger.warning(
            "Step %d: area %.8g misses target %.8g after %d bisections; keeping best multiplier",
            state.step_index + 1,
            res.area,
            state.target_area,
            res.iterations,
        )
    new_L = tentative_L(res.mu)

    tables_V = _tables(phi_V, phi_L, phi_S, active, stencils, "V", params.chunk_nodes)
    new_V = phi_V.ravel().copy()
    new_V[active] = _select(tables_V, _oriented(res.mu, "V"), params.strict, dx)
    new_V = np.minimum(new_V, cap).reshape(phi_V.shape)

    max_dphi = float(max(np.max(np.abs(new_L - phi_L)), np.max(np.abs(new_V - phi_V))))
    new_state = LevelSetState(
        state.phi_L.with_values(new_L),
        state.phi_V.with_values(new_V),
        state.phi_S,
        state.target_area,
        state.step_index + 1,
    )
    report = StepReport(new_state.step_index, res.mu, res.area, res.iterations, max_dphi, res.converged)
    logger.debug("Step %d: mu=%.6g area=%.8g iters=%d", report.step, report.mu, report.area_achieved, report.bisection_iterations)
    return new_state, report


def td_consistency_check(
    state: LevelSetState,
    params: StepParams,
    trials: int,
    seed: int = 0,
    mu: float = 0.0,
    td_mu: Optional[float] = None,
) -> int:
    """Count nodes where the sign of the median update disagrees with thresholding at level 0.

    Random non-solid nodes are drawn; the thresholding side classifies samples from the same
    level sets (shared classification) and uses multiplier ``td_mu`` (default −mu). Skipped:
    sweeps that leave the stencil, level-0 ties, and exit gaps containing 0, where the
    midpoint may fall on either side.
    """
    rng = np.random.default_rng(seed)
    n = state.grid.n
    free = np.flatnonzero(state.phi_S.values.ravel() < 0)
    if len(free) == 0:
        return 0
    nodes = rng.choice(free, size=min(trials, len(free)), replace=False)
    tables = _tables(
        state.phi_L.values, state.phi_V.values, state.phi_S.values, nodes, params.stencils, "L", params.chunk_nodes
    )
    values = _select(tables, mu, params.strict, 1.0 / n)
    k = _exit_index(tables, mu, params.strict)
    m = len(params.stencils)
    td_mu = -mu if td_mu is None else td_mu
    mismatches = 0
    s = tables.sorted_values
    for row, (node, value, kk) in enumerate(zip(nodes, values, k)):
        if kk == 0 or kk >= m:
            continue
        if s[row, kk - 1] <= 0.0 <= s[row, kk]:
            continue
        x = divmod(int(node), n)
        psi0 = _level_sum(x, state, params, mu)
        if abs(psi0) <= 1e-12:
            continue
        if (value >= 0.0) != decide(x, None, params.stencils, td_mu, state=state):
            mismatches += 1
    return mismatches


def _level_sum(x, state: LevelSetState, params: StepParams, mu: float) -> float:
    n = state.grid.n
    st = params.stencils
    px = x[1] / n + st.offsets[:, 0]
    py = x[0] / n + st.offsets[:, 1]
    labels = classify(
        sample_values(state.phi_L.values, px, py),
        sample_values(state.phi_V.values, px, py),
        sample_values(state.phi_S.values, px, py),
    )
    w = st.vl.weights
    solid = st.ls.weights - st.vs.weights
    return float(w[labels == OTHER].sum() - w[labels == OWN].sum() + solid[labels == SOLID].sum() - mu)
