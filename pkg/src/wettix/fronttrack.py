# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.fronttrack

Marker-point front tracking of a single droplet on a flat substrate, used as the reference
solution for convergence studies.

The vapor-liquid curve runs from the left contact point over the top of the droplet to the
right contact point. Interior nodes move with the normal speed

    V = m(θ) (κ (σ + σ'')(θ) + μ)          (positive inward, κ > 0 for convex droplets)

by forward Euler, μ making the discrete normal flux vanish. Contact points slide along the
substrate with speed proportional to the residual of the contact condition, evaluated with
the tangent-indexed tension σ(φ + π/2) at the one-sided tangent angle φ. After each step the
nodes are redistributed to uniform arclength and the area is restored by a uniform normal
displacement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from shapely.geometry import LinearRing, box
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.geometry.polygon import orient
from tqdm import tqdm

from .anisotropy import AnisotropyFn, MobilityFn, Shifted, contact_condition_residual
from .errors import ConfigError, OracleBreakdown
from .fields import Polyline

logger = logging.getLogger(__name__)

MIN_NODES = 8
STABILITY = 0.4


@dataclass(frozen=True)
class MarkerCurve:
    nodes: np.ndarray
    substrate_height: float

    def __post_init__(self):
        p = np.array(self.nodes, dtype=float).reshape(-1, 2)
        if len(p) < MIN_NODES:
            raise OracleBreakdown(f"marker curve has {len(p)} nodes, needs at least {MIN_NODES}")
        p[0, 1] = p[-1, 1] = self.substrate_height
        p.setflags(write=False)
        object.__setattr__(self, "nodes", p)

    @property
    def M(self) -> int:
        return len(self.nodes) - 1

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.nodes, axis=0).T)))


def curve_area(c: MarkerCurve) -> float:
    """Area enclosed by the curve and the substrate segment between its end points."""
    x, y = c.nodes[:, 0], c.nodes[:, 1] - c.substrate_height
    # the closing segment lies on y' = 0 and contributes nothing
    return float(-0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def curve_polygon(c: MarkerCurve) -> ShapelyPolygon:
    return orient(ShapelyPolygon(c.nodes), 1.0)


def curve_polyline(c: MarkerCurve) -> Polyline:
    """Closed boundary of the droplet (curve plus substrate segment), counter-clockwise."""
    return Polyline(np.asarray(curve_polygon(c).exterior.coords)[:-1], closed=True)


def contact_angles(c: MarkerCurve) -> tuple[float, float]:
    """Angles inside the liquid between the substrate and the curve at (left, right) contact points."""
    e0 = c.nodes[1] - c.nodes[0]
    e1 = c.nodes[-2] - c.nodes[-1]
    return float(math.atan2(e0[1], e0[0])), float(math.atan2(e1[1], -e1[0]))


def stable_dt(c: MarkerCurve, sigma_VL: AnisotropyFn, m_VL: MobilityFn, samples: int = 4096) -> float:
    """Largest forward-Euler step allowed by the parabolic bound."""
    theta = 2.0 * np.pi * np.arange(samples) / samples
    speed = float(np.max(m_VL(theta) * sigma_VL.stiffness(theta)))
    h = float(np.min(np.hypot(*np.diff(c.nodes, axis=0).T)))
    return STABILITY * h * h / speed


def _normals(p: np.ndarray) -> np.ndarray:
    t = p[2:] - p[:-2]
    t /= np.hypot(t[:, 0], t[:, 1])[:, None]
    return np.column_stack([-t[:, 1], t[:, 0]])


def _redistribute(p: np.ndarray) -> np.ndarray:
    seg = np.hypot(*np.diff(p, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    u = np.linspace(0.0, s[-1], len(p))
    return np.column_stack([np.interp(u, s, p[:, 0]), np.interp(u, s, p[:, 1])])


def _correct_area(p: np.ndarray, c0: float, area: float, sweeps: int = 4) -> np.ndarray:
    for _ in range(sweeps):
        a = curve_area(MarkerCurve(p, c0))
        if abs(area - a) <= 1e-13 * area:
            break
        length = float(np.sum(np.hypot(*np.diff(p, axis=0).T)))
        p = p.copy()
        p[1:-1] += ((area - a) / length) * _normals(p)
    return p


def ft_step(
    c: MarkerCurve,
    sigma_VL: AnisotropyFn,
    m_VL: MobilityFn,
    sigma_LS: float,
    sigma_VS: float,
    dt: float,
    *,
    area: Optional[float] = None,
    eta: Optional[float] = None,
    check_simple: bool = True,
) -> MarkerCurve:
    """Advance the curve by one forward-Euler step of size dt."""
    bound = stable_dt(c, sigma_VL, m_VL)
    if dt > bound:
        raise OracleBreakdown(f"dt={dt:.3g} exceeds the stability bound {bound:.3g}")
    if eta is None:
        eta = 100.0 * float(np.max(m_VL(2.0 * np.pi * np.arange(4096) / 4096)))
    target = curve_area(c) if area is None else float(area)
    p = np.array(c.nodes)

    a = p[1:-1] - p[:-2]
    b = p[2:] - p[1:-1]
    la = np.hypot(a[:, 0], a[:, 1])
    lb = np.hypot(b[:, 0], b[:, 1])
    chord = np.hypot(*(p[2:] - p[:-2]).T)
    kappa = -2.0 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]) / (la * lb * chord)
    normal = _normals(p)
    theta = np.arctan2(normal[:, 1], normal[:, 0])
    mob = m_VL(theta)
    drive = kappa * sigma_VL.stiffness(theta)
    ds = 0.5 * (la + lb)
    mu = -float(np.sum(mob * drive * ds) / np.sum(mob * ds))
    speed = mob * (drive + mu)
    p[1:-1] -= dt * speed[:, None] * normal

    tangent_sigma = Shifted(sigma_VL, math.pi / 2)
    phi_left = math.atan2(c.nodes[1, 1] - c.nodes[0, 1], c.nodes[1, 0] - c.nodes[0, 0])
    phi_right = math.atan2(c.nodes[-1, 1] - c.nodes[-2, 1], c.nodes[-1, 0] - c.nodes[-2, 0])
    p[0, 0] += dt * eta * contact_condition_residual(tangent_sigma, phi_left, sigma_LS, sigma_VS)
    p[-1, 0] -= dt * eta * contact_condition_residual(tangent_sigma, phi_right, sigma_LS, sigma_VS)

    if p[0, 0] >= p[-1, 0]:
        raise OracleBreakdown("contact points crossed")
    p = _redistribute(p)
    p[0, 1] = p[-1, 1] = c.substrate_height
    p = _correct_area(p, c.substrate_height, target)
    if np.any(p[1:-1, 1] <= c.substrate_height):
        raise OracleBreakdown("interior marker reached the substrate")
    if check_simple and not LinearRing(p).is_simple:
        raise OracleBreakdown("marker curve self-intersects")
    return MarkerCurve(p, c.substrate_height)


def ft_run(
    c: MarkerCurve,
    sigma_VL: AnisotropyFn,
    m_VL: MobilityFn,
    sigma_LS: float,
    sigma_VS: float,
    T: float,
    *,
    dt: Optional[float] = None,
    area: Optional[float] = None,
    eta: Optional[float] = None,
    check_every: int = 50,
    progress: bool = False,
) -> MarkerCurve:
    """Integrate to time T; dt defaults to half the initial stability bound."""
    if T < 0:
        raise ConfigError(f"final time must be non-negative, got {T}")
    if T == 0:
        return c
    target = curve_area(c) if area is None else float(area)
    if dt is None:
        dt = 0.5 * stable_dt(c, sigma_VL, m_VL)
    steps = max(1, math.ceil(T / dt - 1e-9))
    dt = T / steps
    logger.info("Front tracking %d markers over T=%.4g in %d steps…", c.M, T, steps)
    for k in tqdm(range(steps), desc="Front tracking", unit="step", disable=not progress):
        c = ft_step(
            c,
            sigma_VL,
            m_VL,
            sigma_LS,
            sigma_VS,
            dt,
            area=target,
            eta=eta,
            check_simple=(k + 1) % check_every == 0 or k + 1 == steps,
        )
    return c


def marker_curve_from_region(region, substrate_height: float, M: int = 2048) -> MarkerCurve:
    """Curve of M + 1 uniformly spaced markers along the part of ``region`` above the substrate.

    ``region`` is a shapely polygon or any shape with ``to_shapely()``.
    """
    geom = region.to_shapely() if hasattr(region, "to_shapely") else region
    c0 = float(substrate_height)
    clipped = geom.intersection(box(-1.0, c0, 2.0, 2.0))
    if clipped.geom_type != "Polygon" or clipped.is_empty:
        raise ConfigError("droplet above the substrate must be a single polygon")
    ring = np.asarray(orient(clipped, -1.0).exterior.coords)[:-1]
    on_base = np.abs(ring[:, 1] - c0) <= 1e-12
    if on_base.sum() < 2:
        raise ConfigError("droplet does not touch the substrate")
    base_idx = np.flatnonzero(on_base)
    start = base_idx[np.argmin(ring[base_idx, 0])]
    ring = np.roll(ring, -start, axis=0)
    on_base = np.roll(on_base, -start)
    right = np.flatnonzero(on_base)
    stop = right[np.argmax(ring[right, 0])]
    path = ring[: stop + 1]
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(path, axis=0).T))])
    u = np.linspace(0.0, s[-1], M + 1)
    pts = np.column_stack([np.interp(u, s, path[:, 0]), np.interp(u, s, path[:, 1])])
    return MarkerCurve(pts, c0)
