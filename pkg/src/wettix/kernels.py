# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.kernels

Convolution kernels supported on one or two concentric circles.

A kernel K(r, θ) = Σ_i ω_i(θ) δ(r − R_i) realizes a surface tension σ and a mobility m when

    Σ_i R_i² ω_i(θ) = ¼ (σ + σ'')(θ − π/2)   and   Σ_i ω_i(θ) = 1 / m(θ − π/2).

With two circles this is a 2×2 linear system per angle; with one circle the mobility is
whatever the tension induces, m = 4R²/(σ + σ''). Kernels are sampled at q uniform angles and
discretized into stencils of offsets R_i·√dt·(cos θ_j, sin θ_j).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .anisotropy import AnisotropyFn, Induced, MobilityFn, admissible_radii
from .errors import ConfigError, PositivityViolation

logger = logging.getLogger(__name__)

# One median-filter or threshold-dynamics step of size dt moves an interface with normal speed
# EFFECTIVE_TIME_SCALE · m (σ + σ'') κ under the moment normalization above.
EFFECTIVE_TIME_SCALE = 0.125

DEFAULT_Q = 100
INTERFACES = ("VL", "LS", "VS")


def kernel_angles(q: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(q) / q


@dataclass(frozen=True)
class Circle:
    radius: float
    weights: np.ndarray

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError(f"circle radius must be positive, got {self.radius}")
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class CircleKernel:
    """Weights sampled on one or two circles plus the (σ, m) pair they were built from."""

    circles: Tuple[Circle, ...]
    sigma: AnisotropyFn
    m: MobilityFn
    label: str = "VL"

    def __post_init__(self):
        if not self.circles:
            raise ConfigError("a kernel needs at least one circle")
        qs = {len(c.weights) for c in self.circles}
        if len(qs) != 1:
            raise ConfigError(f"all circles of a kernel need the same sample count, got {sorted(qs)}")

    @property
    def q(self) -> int:
        return len(self.circles[0].weights)

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(c.radius for c in self.circles)

    @property
    def angles(self) -> np.ndarray:
        return kernel_angles(self.q)

    @property
    def min_weight(self) -> float:
        return float(min(c.weights.min() for c in self.circles))


def _check_positive(label: str, weights: list[np.ndarray], theta: np.ndarray, sigma, m) -> None:
    worst = min(float(w.min()) for w in weights)
    if worst < 0:
        stacked = np.minimum.reduce(weights)
        j = int(np.argmin(stacked))
        lower, upper = admissible_radii(sigma, m)
        raise PositivityViolation(theta[j], upper, lower, f"{label} kernel, min weight {worst:.3g}")


def build_two_circle_kernel(
    sigma: AnisotropyFn,
    m: MobilityFn,
    R1: float = 2.0,
    R2: float = 0.25,
    q: int = DEFAULT_Q,
    label: str = "VL",
) -> CircleKernel:
    """Solve the two moment equations for (ω₁, ω₂) on circles of radii R1, R2.

    ω₁ = (g − R2² h)/(R1² − R2²),  ω₂ = (−g + R1² h)/(R1² − R2²)
    with g(θ) = ¼(σ + σ'')(θ − π/2) and h(θ) = 1/m(θ − π/2).
    """
    if R1 <= 0 or R2 <= 0:
        raise ConfigError(f"kernel radii must be positive, got R1={R1}, R2={R2}")
    if R1 == R2:
        raise ConfigError("two-circle kernel needs R1 != R2")
    if q < 4:
        raise ConfigError(f"kernel needs at least 4 samples per circle, got {q}")
    theta = kernel_angles(q)
    g = 0.25 * sigma.stiffness(theta - np.pi / 2)
    h = 1.0 / m(theta - np.pi / 2)
    det = R1**2 - R2**2
    w1 = (g - R2**2 * h) / det
    w2 = (-g + R1**2 * h) / det
    _check_positive(label, [w1, w2], theta, sigma, m)
    return CircleKernel((Circle(R1, w1), Circle(R2, w2)), sigma, m, label)


def build_single_circle_kernel(
    sigma: AnisotropyFn, R: float = 0.5, q: int = DEFAULT_Q, label: str = "VL"
) -> tuple[CircleKernel, Induced]:
    """ω(θ) = (σ + σ'')(θ − π/2)/(4R²); returns the kernel and the induced mobility 4R²/(σ + σ'')."""
    if R <= 0:
        raise ConfigError(f"kernel radius must be positive, got {R}")
    if q < 4:
        raise ConfigError(f"kernel needs at least 4 samples per circle, got {q}")
    theta = kernel_angles(q)
    induced = Induced(sigma, scale=4.0 * R**2)
    w = sigma.stiffness(theta - np.pi / 2) / (4.0 * R**2)
    _check_positive(label, [w], theta, sigma, induced)
    return CircleKernel((Circle(R, w),), sigma, induced, label), induced


@dataclass(frozen=True)
class MomentReport:
    """Reconstructed moments and their worst deviations from the target (σ, m)."""

    second_moment: np.ndarray
    inverse_mobility: np.ndarray
    sigma_deviation: float
    mobility_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.sigma_deviation, self.mobility_deviation)


def check_moments(k: CircleKernel) -> MomentReport:
    theta = k.angles
    second = sum(c.radius**2 * c.weights for c in k.circles)
    zeroth = sum(c.weights for c in k.circles)
    target_second = 0.25 * k.sigma.stiffness(theta - np.pi / 2)
    target_zeroth = 1.0 / k.m(theta - np.pi / 2)
    return MomentReport(
        second_moment=second,
        inverse_mobility=zeroth,
        sigma_deviation=float(np.max(np.abs(second - target_second))),
        mobility_deviation=float(np.max(np.abs(zeroth - target_zeroth))),
    )


@dataclass(frozen=True)
class Stencil:
    """Discrete kernel: offsets (m × 2, domain units) and weights, scaled for one dt."""

    offsets: np.ndarray
    weights: np.ndarray
    dt: float
    label: str = "VL"
    mass: float = field(init=False)

    def __post_init__(self):
        off = np.array(self.offsets, dtype=float).reshape(-1, 2)
        w = np.array(self.weights, dtype=float).ravel()
        if len(off) == 0:
            raise ConfigError(f"{self.label} stencil is empty")
        if len(off) != len(w):
            raise ConfigError(f"{self.label} stencil has {len(off)} offsets but {len(w)} weights")
        off.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "mass", float(w.sum()))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def max_radius(self) -> float:
        return float(np.max(np.hypot(self.offsets[:, 0], self.offsets[:, 1])))


def discretize(k: CircleKernel, dt: float) -> Stencil:
    """Offsets R_i√dt(cos θ_j, sin θ_j) with trapezoidal weights R_i ω_i(θ_j) 2π/q, circle-major."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    theta = k.angles
    unit = np.column_stack([np.cos(theta), np.sin(theta)])
    dtheta = 2.0 * np.pi / k.q
    offsets = np.vstack([c.radius * np.sqrt(dt) * unit for c in k.circles])
    weights = np.concatenate([c.radius * c.weights * dtheta for c in k.circles])
    return Stencil(offsets, weights, dt, k.label)


def triangle_check(vl: Stencil, ls: Stencil, vs: Stencil, tol: float = 1e-14) -> bool:
    """Pointwise K_LS + K_VL − K_VS ≥ 0 and K_VS + K_VL − K_LS ≥ 0 on shared offsets."""
    _require_aligned(vl, ls, vs)
    a = ls.weights + vl.weights - vs.weights
    b = vs.weights + vl.weights - ls.weights
    return bool(a.min() >= -tol and b.min() >= -tol)


def _require_aligned(*stencils: Stencil) -> None:
    first = stencils[0]
    for s in stencils[1:]:
        if s.offsets.shape != first.offsets.shape or not np.allclose(s.offsets, first.offsets, rtol=0, atol=1e-14):
            raise ConfigError(f"stencils {first.label} and {s.label} do not share offsets")
        if s.dt != first.dt:
            raise ConfigError(f"stencils {first.label} and {s.label} were built for different dt")


@dataclass(frozen=True)
class StencilSet:
    """The three interface stencils of one step, aligned on identical offsets."""

    vl: Stencil
    ls: Stencil
    vs: Stencil

    def __post_init__(self):
        _require_aligned(self.vl, self.ls, self.vs)

    @property
    def offsets(self) -> np.ndarray:
        return self.vl.offsets

    @property
    def dt(self) -> float:
        return self.vl.dt

    @property
    def max_radius(self) -> float:
        return self.vl.max_radius

    @property
    def triangle_ok(self) -> bool:
        return triangle_check(self.vl, self.ls, self.vs)

    def __len__(self) -> int:
        return len(self.vl)


def kernel_table(k: CircleKernel) -> np.ndarray:
    """Rows (θ_j, ω_1(θ_j), ω_2(θ_j), ...)."""
    return np.column_stack([k.angles] + [c.weights for c in k.circles])
