# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.shapes

Initial droplets and substrates as signed-distance shapes on the unit torus.

Every shape exposes ``signed_distance(x, y)`` (positive inside) and ``to_shapely()``.
Droplets are measured against their nearest periodic image; substrates are the region
below a graph y = f(x) with f 1-periodic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import shapely
from shapely import affinity
from shapely.geometry import Point
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

from .errors import ConfigError
from .fields import distance_to_segments

_LATTICE = [(sx, sy) for sx in (-1.0, 0.0, 1.0) for sy in (-1.0, 0.0, 1.0)]
PROFILE_SAMPLES = 4096


def _periodic_images(geom):
    return unary_union([affinity.translate(geom, sx, sy) for sx, sy in _LATTICE])


@dataclass(frozen=True)
class Disc:
    center: Tuple[float, float]
    radius: float

    def __post_init__(self):
        if not 0 < self.radius < 0.5:
            raise ConfigError(f"disc radius must lie in (0, 0.5), got {self.radius}")

    def signed_distance(self, x, y):
        dx = (np.asarray(x) - self.center[0] + 0.5) % 1.0 - 0.5
        dy = (np.asarray(y) - self.center[1] + 0.5) % 1.0 - 0.5
        return self.radius - np.hypot(dx, dy)

    def to_shapely(self):
        return Point(self.center).buffer(self.radius, quad_segs=256)

    @property
    def area(self) -> float:
        return math.pi * self.radius**2


@dataclass(frozen=True)
class Polygon:
    vertices: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(a), float(b)) for a, b in self.vertices)
        if len(verts) < 3:
            raise ConfigError("polygon needs at least 3 vertices")
        if not ShapelyPolygon(verts).is_valid:
            raise ConfigError(f"polygon {verts} is not simple")
        object.__setattr__(self, "vertices", verts)

    def to_shapely(self):
        return orient(ShapelyPolygon(self.vertices), 1.0)

    def signed_distance(self, x, y):
        images = _periodic_images(self.to_shapely())
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = shapely.distance(images.boundary, shapely.points(x.ravel(), y.ravel())).reshape(x.shape)
        inside = shapely.contains_xy(images, x, y)
        return np.where(inside, d, -d)

    @property
    def area(self) -> float:
        return float(ShapelyPolygon(self.vertices).area)


def isosceles_triangle(base_center: Tuple[float, float], base: float, area: float) -> Polygon:
    """Apex-up isosceles triangle with the given base width and area."""
    if base <= 0 or area <= 0:
        raise ConfigError("triangle base and area must be positive")
    cx, cy = base_center
    h = 2.0 * area / base
    return Polygon(((cx - base / 2, cy), (cx + base / 2, cy), (cx, cy + h)))


def rectangle(center: Tuple[float, float], width: float, height: float, angle: float = 0.0) -> Polygon:
    """Rectangle rotated by ``angle`` radians about its centre."""
    if width <= 0 or height <= 0:
        raise ConfigError("rectangle width and height must be positive")
    c, s = math.cos(angle), math.sin(angle)
    corners = [(-width / 2, -height / 2), (width / 2, -height / 2), (width / 2, height / 2), (-width / 2, height / 2)]
    return Polygon(tuple((center[0] + c * u - s * v, center[1] + s * u + c * v) for u, v in corners))


@dataclass(frozen=True)
class Union:
    parts: tuple

    def signed_distance(self, x, y):
        return np.maximum.reduce([p.signed_distance(x, y) for p in self.parts])

    def to_shapely(self):
        return unary_union([p.to_shapely() for p in self.parts])


@dataclass(frozen=True)
class Difference:
    base: object
    cut: object

    def signed_distance(self, x, y):
        return np.minimum(self.base.signed_distance(x, y), -self.cut.signed_distance(x, y))

    def to_shapely(self):
        return self.base.to_shapely().difference(self.cut.to_shapely())


@dataclass(frozen=True)
class Substrate:
    """Solid region below y = f(x).

    profile ``flat``: f = height. ``parabola``: f = curvature·(x − x0)² + height with x taken in
    [x0 − ½, x0 + ½). ``sinusoid``: f = amplitude·sin(2π·wavenumber·(x − x0)) + height.
    """

    profile: str = "flat"
    height: float = 0.5
    curvature: float = 1.0
    amplitude: float = 0.0
    wavenumber: int = 1
    x0: float = 0.5

    def __post_init__(self):
        if self.profile not in ("flat", "parabola", "sinusoid"):
            raise ConfigError(f"unknown substrate profile: {self.profile!r}")
        if self.profile == "sinusoid" and int(self.wavenumber) != self.wavenumber:
            raise ConfigError("sinusoid wavenumber must be an integer to stay periodic")

    @property
    def is_flat(self) -> bool:
        return self.profile == "flat"

    def height_at(self, x):
        x = np.asarray(x, dtype=float)
        if self.profile == "flat":
            return np.full_like(x, self.height)
        if self.profile == "parabola":
            u = (x - self.x0 + 0.5) % 1.0 - 0.5
            return self.curvature * u**2 + self.height
        return self.amplitude * np.sin(2 * np.pi * self.wavenumber * (x - self.x0)) + self.height

    def profile_line(self, samples: int = PROFILE_SAMPLES) -> np.ndarray:
        """The graph over x ∈ [−½, 3/2] as a (k × 2) array."""
        xs = np.linspace(-0.5, 1.5, 2 * samples + 1)
        return np.column_stack([xs, self.height_at(xs)])

    def signed_distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        f = self.height_at(x)
        if self.is_flat:
            return f - y
        pts = self.profile_line()
        d = distance_to_segments(np.stack([pts[:-1], pts[1:]], axis=1), x, y)
        return np.where(y <= f, d, -d)

    def to_shapely(self):
        pts = self.profile_line()
        return ShapelyPolygon(np.vstack([pts, [(1.5, -1.0), (-0.5, -1.0)]]))
