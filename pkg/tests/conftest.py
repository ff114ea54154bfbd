# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""Shared fixtures: small grids, isotropic stencils and a minimal experiment config."""

from __future__ import annotations

import copy

import numpy as np
import pytest

from wettix.anisotropy import Constant
from wettix.fields import Grid2D, LevelSetState, ScalarField
from wettix.kernels import StencilSet, build_two_circle_kernel, discretize

SMALL_RAW = {
    "grid": {"n": 32},
    "time": {"dt": 0.0005, "T": 0.002},
    "kernel": {"mode": "two-circle", "R1": 2.0, "R2": 0.25, "q": 32},
    "shapes": {
        "droplets": [{"kind": "rectangle", "center": [0.5, 0.55], "width": 0.3, "height": 0.1}],
        "substrate": {"profile": "flat", "height": 0.5},
    },
    "reference": {"kind": "none"},
}


@pytest.fixture
def rng():
    return np.random.default_rng(20250101)


@pytest.fixture
def iso_stencils():
    """Factory: isotropic (σ = m = 1) two-circle stencils for a given dt."""

    def make(dt: float, q: int = 32) -> StencilSet:
        one = Constant(1.0)
        parts = [discretize(build_two_circle_kernel(one, one, 2.0, 0.25, q, label), dt) for label in ("VL", "LS", "VS")]
        return StencilSet(*parts)

    return make


@pytest.fixture
def smooth_field():
    """Factory: a random sum of low Fourier modes on an n × n periodic grid."""

    def make(rng, n: int, amplitude: float = 0.1, modes: int = 3) -> np.ndarray:
        grid = Grid2D(n)
        X, Y = grid.coords()
        out = np.zeros((n, n))
        for _ in range(modes):
            kx, ky = rng.integers(1, 4, size=2)
            a, px, py = rng.uniform(-1, 1), rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi)
            out += a * np.cos(2 * np.pi * kx * X + px) * np.cos(2 * np.pi * ky * Y + py)
        return amplitude * out / max(np.abs(out).max(), 1e-12)

    return make


@pytest.fixture
def fluid_state():
    """Factory: a state whose solid level set is far below every sample (no solid anywhere)."""

    def make(phi_L: np.ndarray, phi_V: np.ndarray | None = None, target_area: float = 0.1) -> LevelSetState:
        n = phi_L.shape[0]
        grid = Grid2D(n)
        phi_V = -phi_L if phi_V is None else phi_V
        return LevelSetState(
            ScalarField(grid, phi_L, "phi_L"),
            ScalarField(grid, phi_V, "phi_V"),
            ScalarField(grid, np.full((n, n), -10.0), "phi_S"),
            target_area,
        )

    return make


@pytest.fixture
def small_raw():
    """A tiny flat-substrate experiment: 32² grid, four steps."""
    return copy.deepcopy(SMALL_RAW)
