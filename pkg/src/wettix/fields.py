# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.fields

Periodic grids, scalar fields and the level-set state of a vapor-liquid-solid system.

Responsibilities:
  1. Grid2D / ScalarField / LevelSetState / Polyline value types.
  2. Bilinear sampling with periodic wrap (scipy.ndimage.map_coordinates, mode="grid-wrap").
  3. Subgrid area of {φ ≥ 0} by per-cell clipping of the bilinear zero set.
  4. Marching-squares contours, redistancing and connected components.

Conventions: node (iy, ix) sits at (x, y) = (ix·dx, iy·dx) and is stored as values[iy, ix];
the domain is the unit torus [0, 1)².
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import shapely
from scipy import ndimage
from shapely.geometry import LineString

from .errors import ConfigError, NoInterface

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Polyline:
    """Ordered points (k × 2); ``closed`` means the last point connects back to the first."""

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if len(pts) > 1:
            keep = np.ones(len(pts), dtype=bool)
            keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
            pts = pts[keep]
        if self.closed and len(pts) > 1 and np.all(pts[0] == pts[-1]):
            pts = pts[:-1]
        if self.closed and len(pts) < 3:
            raise ValueError(f"closed polyline needs at least 3 distinct points, got {len(pts)}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def as_ring(self) -> np.ndarray:
        """Points with the first one repeated at the end when closed."""
        if self.closed:
            return np.vstack([self.points, self.points[:1]])
        return np.asarray(self.points)

    def to_shapely(self) -> LineString:
        return LineString(self.as_ring())


@dataclass(frozen=True)
class Grid2D:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ConfigError(f"grid needs n >= 8 nodes per side, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) node coordinate arrays, X[iy, ix] = ix·dx."""
        x = np.arange(self.n) * self.dx
        return np.meshgrid(x, x, indexing="xy")


@dataclass(frozen=True)
class ScalarField:
    grid: Grid2D
    values: np.ndarray
    name: str = "phi"

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"field {self.name!r} has shape {vals.shape}, grid wants {(self.grid.n,) * 2}")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"field {self.name!r} has non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, name: str | None = None) -> "ScalarField":
        return ScalarField(self.grid, values, name or self.name)


@dataclass(frozen=True)
class LevelSetState:
    """φ_L and φ_V evolve; φ_S is frozen. ``target_area`` is the conserved droplet area."""

    phi_L: ScalarField
    phi_V: ScalarField
    phi_S: ScalarField
    target_area: float
    step_index: int = 0

    @property
    def grid(self) -> Grid2D:
        return self.phi_L.grid

    def check(self) -> None:
        """Raise ValueError when a phase level set pokes into the solid."""
        cap = -self.phi_S.values
        for f in (self.phi_L, self.phi_V):
            excess = float(np.max(f.values - cap))
            if excess > 0:
                raise ValueError(f"{f.name} exceeds -phi_S by {excess:.3g}")


# ---------------------------------------------------------------------------
# Construction and sampling
# ---------------------------------------------------------------------------


def signed_distance_init(shape, grid: Grid2D, name: str = "phi") -> ScalarField:
    """Evaluate a shape's signed distance (positive inside) at every node.

    ``shape`` is anything with a ``signed_distance(x, y)`` method (see :mod:`wettix.shapes`).
    """
    X, Y = grid.coords()
    values = np.asarray(shape.signed_distance(X, Y), dtype=float)
    if np.all(values < 0):
        raise ConfigError(f"shape {shape!r} is empty on a {grid.n}x{grid.n} grid")
    if np.all(values >= 0):
        raise ConfigError(f"shape {shape!r} fills the whole domain")
    return ScalarField(grid, values, name)


def sample_values(values: np.ndarray, x, y) -> np.ndarray:
    """Periodic bilinear interpolation of a node array at domain coordinates (x, y)."""
    n = values.shape[0]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    coords = np.stack([np.ravel(y) * n, np.ravel(x) * n])
    out = ndimage.map_coordinates(values, coords, order=1, mode="grid-wrap")
    return out.reshape(np.broadcast(x, y).shape)


def sample(field: ScalarField, p) -> float | np.ndarray:
    """Bilinear value of ``field`` at point p = (x, y) (or arrays of points, shape (..., 2))."""
    p = np.asarray(p, dtype=float)
    out = sample_values(field.values, p[..., 0], p[..., 1])
    return float(out) if out.ndim == 0 else out


def resample(field: ScalarField, grid: Grid2D) -> ScalarField:
    """Bilinear transfer of ``field`` onto another periodic grid."""
    if grid == field.grid:
        return field
    X, Y = grid.coords()
    return ScalarField(grid, sample_values(field.values, X, Y), field.name)


# ---------------------------------------------------------------------------
# Marching squares
# ---------------------------------------------------------------------------

# Cell corners in counter-clockwise order, local (x, y) units of dx.
_CORNERS = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])


def _corner_values(values: np.ndarray) -> list[np.ndarray]:
    up = np.roll(values, -1, axis=0)
    return [values, np.roll(values, -1, axis=1), np.roll(up, -1, axis=1), up]


def _cell_edges(values: np.ndarray):
    """Per-edge crossing data for every cell.

    Returns (f, pos, exits, entries, cx, cy): corner values, corner signs (f ≥ 0), and for each
    of the four CCW edges whether the boundary of {f ≥ 0} leaves (exit) or enters the cell
    there, plus the crossing point in local cell units.
    """
    f = _corner_values(values)
    pos = [fi >= 0 for fi in f]
    exits, entries, cx, cy = [], [], [], []
    for e in range(4):
        a, b = f[e], f[(e + 1) % 4]
        pa, pb = _CORNERS[e], _CORNERS[(e + 1) % 4]
        flip = pos[e] != pos[(e + 1) % 4]
        t = np.divide(a, a - b, out=np.zeros_like(a), where=flip)
        exits.append(pos[e] & ~pos[(e + 1) % 4])
        entries.append(~pos[e] & pos[(e + 1) % 4])
        cx.append(pa[0] + t * (pb[0] - pa[0]))
        cy.append(pa[1] + t * (pb[1] - pa[1]))
    return f, pos, exits, entries, cx, cy


def _partners(f, pos) -> list[np.ndarray]:
    """Entry edge index paired with each exit edge.

    Non-saddle cells have one exit and one entry. Saddles (two exits) pair each exit with the
    next edge when the cell-centre average is ≥ 0 (connected positive region) and with the
    previous edge otherwise.
    """
    center_pos = (f[0] + f[1] + f[2] + f[3]) >= 0
    saddle = (pos[0] == pos[2]) & (pos[1] == pos[3]) & (pos[0] != pos[1])
    single = np.full(f[0].shape, -1)
    for k in range(4):
        single = np.where(~pos[k] & pos[(k + 1) % 4], k, single)
    return [
        np.where(saddle, np.where(center_pos, (e + 1) % 4, (e + 3) % 4), single)
        for e in range(4)
    ]


def area_of_values(values: np.ndarray, dx: float) -> float:
    """Area of {f ≥ 0} for a raw node array; see :func:`area_nonneg`."""
    f, pos, exits, entries, cx, cy = _cell_edges(values)
    twice = np.zeros_like(values)
    for e in range(4):
        pa, pb = _CORNERS[e], _CORNERS[(e + 1) % 4]
        a_in, b_in = pos[e], pos[(e + 1) % 4]
        full = pa[0] * pb[1] - pa[1] * pb[0]
        to_cross = pa[0] * cy[e] - pa[1] * cx[e]
        from_cross = cx[e] * pb[1] - cy[e] * pb[0]
        twice += np.where(a_in & b_in, full, 0.0)
        twice += np.where(exits[e], to_cross, 0.0)
        twice += np.where(entries[e], from_cross, 0.0)
    partner = _partners(f, pos)
    cx_all = np.stack(cx)
    cy_all = np.stack(cy)
    for e in range(4):
        k = partner[e]
        kk = np.clip(k, 0, 3)[None]
        ex = np.take_along_axis(cx_all, kk, axis=0)[0]
        ey = np.take_along_axis(cy_all, kk, axis=0)[0]
        seg = cx[e] * ey - cy[e] * ex
        twice += np.where(exits[e] & (k >= 0), seg, 0.0)
    return float(0.5 * twice.sum() * dx * dx)


def area_nonneg(field: ScalarField) -> float:
    """Area of {φ ≥ 0}, clipping each cell by the piecewise-linear zero set.

    Exact for fields that are affine on every cell.
    """
    return area_of_values(field.values, field.grid.dx)


def _segments(values: np.ndarray):
    """Oriented contour segments (exit crossing → entry crossing) of every cell.

    Returns start/end points in domain units and start/end edge keys. An edge key names a
    grid edge uniquely so that the entry edge of one cell is the exit edge of its neighbour.
    """
    n = values.shape[0]
    f, pos, exits, entries, cx, cy = _cell_edges(values)
    partner = _partners(f, pos)
    iy, ix = np.indices(values.shape)
    # edge e of cell (iy, ix) -> (row, col, orientation) of a shared grid edge
    owners = [
        (iy, ix, 0),
        (iy, (ix + 1) % n, 1),
        ((iy + 1) % n, ix, 0),
        (iy, ix, 1),
    ]

    def key(e, mask):
        r, c, o = owners[e]
        return (r[mask] * n + c[mask]) * 2 + o

    starts, ends, skeys, ekeys = [], [], [], []
    for e in range(4):
        for k in range(4):
            mask = exits[e] & (partner[e] == k)
            if not mask.any():
                continue
            ox, oy = ix[mask], iy[mask]
            starts.append(np.column_stack([(ox + cx[e][mask]), (oy + cy[e][mask])]))
            ends.append(np.column_stack([(ox + cx[k][mask]), (oy + cy[k][mask])]))
            skeys.append(key(e, mask))
            ekeys.append(key(k, mask))
    if not starts:
        return None
    dx = 1.0 / n
    return (
        np.vstack(starts) * dx,
        np.vstack(ends) * dx,
        np.concatenate(skeys),
        np.concatenate(ekeys),
    )


def extract_contour(field: ScalarField, level: float = 0.0) -> List[Polyline]:
    """Zero set of φ − level as polylines.

    Curves are oriented with {φ ≥ level} on the left. Coordinates are unwrapped along each
    curve, so a closed contour crossing the seam runs slightly outside [0, 1)²; contours that
    wind around the torus come back as open polylines whose last point is the first one
    shifted by a lattice vector.
    """
    segs = _segments(field.values - level)
    if segs is None:
        return []
    starts, ends, skeys, ekeys = segs
    by_start = {int(k): i for i, k in enumerate(skeys)}
    seen = np.zeros(len(skeys), dtype=bool)
    out: List[Polyline] = []
    for first in range(len(skeys)):
        if seen[first]:
            continue
        pts = [starts[first]]
        shift = np.zeros(2)
        i = first
        while True:
            seen[i] = True
            pts.append(ends[i] + shift)
            j = by_start.get(int(ekeys[i]))
            if j is None:  # pragma: no cover - every entry edge is an exit edge next door
                break
            shift = shift + np.round(ends[i] - starts[j])
            if j == first:
                break
            i = j
        arr = np.asarray(pts)
        wrapped = bool(np.any(shift != 0))
        if not wrapped:
            # last point repeats the first crossing
            arr = arr[:-1]
            if len(arr) < 3:
                continue
        try:
            out.append(Polyline(arr, closed=not wrapped))
        except ValueError:
            logger.debug("Dropping degenerate contour with %d points", len(arr))
    return out


def periodic_segments(polylines: Sequence[Polyline]) -> np.ndarray:
    """All segments (k × 2 × 2) of the polylines and of their 8 neighbouring lattice images."""
    segs = []
    for pl in polylines:
        ring = pl.as_ring()
        ring = ring - np.floor(ring.min(axis=0))
        segs.append(np.stack([ring[:-1], ring[1:]], axis=1))
    base = np.concatenate(segs)
    shifts = np.array([(sx, sy) for sx in (-1.0, 0.0, 1.0) for sy in (-1.0, 0.0, 1.0)])
    return (base[None] + shifts[:, None, None, :]).reshape(-1, 2, 2)


def distance_to_segments(segments: np.ndarray, x, y, max_distance: float | None = None) -> np.ndarray:
    """Euclidean distance from points to the nearest segment; ``max_distance`` where none is closer."""
    tree = shapely.STRtree(shapely.linestrings(segments))
    pts = shapely.points(np.ravel(x), np.ravel(y))
    (src, _), d = tree.query_nearest(pts, max_distance=max_distance, return_distance=True, all_matches=False)
    out = np.full(len(pts), np.inf if max_distance is None else float(max_distance))
    out[src] = d
    return out.reshape(np.shape(x))


def redistance(field: ScalarField, band: float) -> ScalarField:
    """Replace φ by the signed distance to its zero contour, clamped to ±band.

    The sign of every node is kept.
    """
    if band <= 0:
        raise ConfigError(f"redistance band must be positive, got {band}")
    contours = extract_contour(field, 0.0)
    if not contours:
        raise NoInterface(f"field {field.name!r} has no zero contour")
    X, Y = field.grid.coords()
    dist = np.minimum(distance_to_segments(periodic_segments(contours), X, Y, band), band)
    sign = np.where(field.values >= 0, 1.0, -1.0)
    return field.with_values(sign * dist)


def count_components(field: ScalarField, level: float = 0.0) -> int:
    """Number of 4-connected components of {φ ≥ level} on the torus."""
    mask = field.values >= level
    labels, count = ndimage.label(mask)
    if count == 0:
        return 0
    parent = list(range(count + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in ((labels[:, 0], labels[:, -1]), (labels[0, :], labels[-1, :])):
        both = (a > 0) & (b > 0)
        for p, q in zip(a[both], b[both]):
            rp, rq = find(int(p)), find(int(q))
            if rp != rq:
                parent[rp] = rq
    return len({find(k) for k in range(1, count + 1)})


def centroid_x(field: ScalarField, level: float = 0.0) -> float:
    """x-centroid of the largest closed contour region of {φ ≥ level}."""
    rings = [pl for pl in extract_contour(field, level) if pl.closed]
    if not rings:
        raise NoInterface(f"field {field.name!r} has no closed contour")
    polys = [shapely.Polygon(pl.points) for pl in rings]
    biggest = max(polys, key=lambda p: p.area)
    return float(biggest.centroid.x)
