# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.metrics

Shape errors and convergence orders.

L¹ is the area of the symmetric difference of two regions, measured with the same subgrid
clipping as the solver; L∞ is the Hausdorff distance between their boundaries.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import shapely
from shapely.geometry import MultiPolygon
from shapely.geometry import Polygon as ShapelyPolygon

from .errors import ConfigError
from .fields import Grid2D, Polyline, ScalarField, area_of_values, distance_to_segments, extract_contour, resample

logger = logging.getLogger(__name__)

Region = Union[ScalarField, Polyline, Sequence[Polyline], ShapelyPolygon, MultiPolygon]


@dataclass(frozen=True)
class ErrorRow:
    steps: int
    inv_dx: int
    l1: float
    linf: Optional[float] = None
    order: Optional[float] = None


def _as_polygon(region) -> ShapelyPolygon | MultiPolygon:
    if isinstance(region, (ShapelyPolygon, MultiPolygon)):
        return region
    polylines = [region] if isinstance(region, Polyline) else list(region)
    if not polylines or not all(p.closed for p in polylines):
        raise ConfigError("reference regions must be bounded by closed polylines")
    return shapely.unary_union([ShapelyPolygon(p.points) for p in polylines])


def rasterize(region, grid: Grid2D) -> ScalarField:
    """Signed distance (positive inside) of a polygonal region at the nodes of ``grid``."""
    poly = _as_polygon(region)
    segs = []
    for ring in _rings(poly):
        c = np.asarray(ring.coords)
        segs.append(np.stack([c[:-1], c[1:]], axis=1))
    X, Y = grid.coords()
    d = distance_to_segments(np.concatenate(segs), X, Y)
    inside = shapely.contains_xy(poly, X, Y)
    return ScalarField(grid, np.where(inside, d, -d), "reference")


def _rings(poly):
    parts = poly.geoms if hasattr(poly, "geoms") else [poly]
    for p in parts:
        yield p.exterior
        yield from p.interiors


def _common_fields(a: Region, b: Region, grid: Optional[Grid2D]) -> Tuple[ScalarField, ScalarField]:
    grids = [r.grid for r in (a, b) if isinstance(r, ScalarField)]
    if grid is None:
        if not grids:
            raise ConfigError("comparing two polygonal regions needs an explicit grid")
        grid = max(grids, key=lambda g: g.n)

    def to_field(r):
        return resample(r, grid) if isinstance(r, ScalarField) else rasterize(r, grid)

    return to_field(a), to_field(b)


def l1_error(a: Region, b: Region, grid: Optional[Grid2D] = None) -> float:
    """Area of the symmetric difference: |{max(φa, φb) ≥ 0}| − |{min(φa, φb) ≥ 0}|."""
    fa, fb = _common_fields(a, b, grid)
    dx = fa.grid.dx
    union = area_of_values(np.maximum(fa.values, fb.values), dx)
    inter = area_of_values(np.minimum(fa.values, fb.values), dx)
    return max(union - inter, 0.0)


def boundary_points(region) -> np.ndarray:
    if isinstance(region, ScalarField):
        region = extract_contour(region, 0.0)
    if isinstance(region, Polyline):
        return np.asarray(region.points)
    if isinstance(region, (ShapelyPolygon, MultiPolygon)):
        return np.vstack([np.asarray(r.coords) for r in _rings(region)])
    pts = [np.asarray(p.points) for p in region]
    if not pts:
        raise ConfigError("cannot measure the boundary of an empty region")
    return np.vstack(pts)


def _boundary_segments(region) -> np.ndarray:
    if isinstance(region, ScalarField):
        region = extract_contour(region, 0.0)
    if isinstance(region, (ShapelyPolygon, MultiPolygon)):
        rings = [np.asarray(r.coords) for r in _rings(region)]
    else:
        polylines = [region] if isinstance(region, Polyline) else list(region)
        rings = [p.as_ring() for p in polylines]
    if not rings:
        raise ConfigError("cannot measure the boundary of an empty region")
    return np.concatenate([np.stack([r[:-1], r[1:]], axis=1) for r in rings if len(r) > 1])


def linf_error(a, b) -> float:
    """Symmetric Hausdorff distance between two boundaries (vertex to segment)."""
    pa, pb = boundary_points(a), boundary_points(b)
    if len(pa) == 0 or len(pb) == 0:
        raise ConfigError("cannot measure the boundary of an empty region")
    d_ab = distance_to_segments(_boundary_segments(b), pa[:, 0], pa[:, 1])
    d_ba = distance_to_segments(_boundary_segments(a), pb[:, 0], pb[:, 1])
    return float(max(d_ab.max(), d_ba.max()))


def observed_orders(errors: Sequence[float]) -> List[Optional[float]]:
    """log₂ of consecutive error ratios; the first entry is None."""
    out: List[Optional[float]] = [None]
    for prev, cur in zip(errors[:-1], errors[1:]):
        out.append(math.log2(prev / cur) if prev > 0 and cur > 0 else None)
    return out


def fit_slope(steps: Sequence[int], errors: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(error) against log(dt) for dt ∝ 1/steps.

    Levels with a non-positive error are left out; None when fewer than two remain.
    """
    s = np.asarray(steps, dtype=float)
    e = np.asarray(errors, dtype=float)
    keep = e > 0
    if keep.sum() < 2:
        return None
    return float(np.polyfit(-np.log(s[keep]), np.log(e[keep]), 1)[0])


def convergence_table(
    runs: Iterable[Tuple[int, int, Region]],
    reference: Region,
    *,
    with_linf: bool = True,
) -> tuple[List[ErrorRow], Optional[float]]:
    """Compare each run with ``reference``; returns the rows and the log-log slope."""
    runs = list(runs)
    l1s, linfs = [], []
    for steps, inv_dx, field in runs:
        l1s.append(l1_error(field, reference))
        linfs.append(linf_error(field, reference) if with_linf else None)
        logger.info("Level steps=%d 1/dx=%d: L1=%.6g", steps, inv_dx, l1s[-1])
    orders = observed_orders(l1s)
    rows = [
        ErrorRow(int(s), int(i), l1, linf, order)
        for (s, i, _), l1, linf, order in zip(runs, l1s, linfs, orders)
    ]
    return rows, fit_slope([r.steps for r in rows], l1s)
