# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.threshold_dynamics

Binary threshold dynamics for a droplet L on a fixed solid S (vapor V is the rest):

    ψ = K_VL * (1_{S^c} − 2·1_L) + (K_LS − K_VS) * 1_S + μ,   L_new = {x ∉ S : ψ(x) ≤ 0}.

Offsets are snapped to the nearest grid node and the area is counted in nodes, so this is the
naive baseline whose interfaces pin when the stencil radius drops below dx. The module also
owns the sample classification and the multiplier search shared with the median filter.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from .errors import ConfigError, MultiplierNotBracketed, PreconditionViolation
from .fields import Grid2D, LevelSetState, sample_values
from .kernels import StencilSet

logger = logging.getLogger(__name__)

OWN, OTHER, SOLID = 0, 1, 2


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------


def fluid_side(other: np.ndarray, solid: np.ndarray) -> np.ndarray:
    """True where a sample below the level belongs to the other fluid phase, not the solid."""
    return other >= solid


def classify(own: np.ndarray, other: np.ndarray, solid: np.ndarray, level: float = 0.0) -> np.ndarray:
    """Label samples OWN (own ≥ level), else OTHER or SOLID by comparing the other phase with the solid."""
    return np.where(own >= level, OWN, np.where(fluid_side(other, solid), OTHER, SOLID)).astype(np.int8)


@dataclass(frozen=True)
class MultiplierSolve:
    mu: float
    area: float
    iterations: int
    converged: bool


def solve_multiplier(
    area_of: Callable[[float], float],
    target: float,
    tol: float,
    bracket: Tuple[float, float],
    increasing: bool = True,
    max_doublings: int = 40,
    max_iter: int = 64,
) -> MultiplierSolve:
    """Find μ with |area_of(μ) − target| ≤ tol for a monotone step function ``area_of``.

    The bracket is widened (doubling its width on the failing side) until it straddles the
    target, then bisected. When ``max_iter`` bisections do not reach ``tol`` the best μ seen is
    returned with ``converged=False``.
    """
    if not increasing:
        res = solve_multiplier(
            lambda nu: area_of(-nu), target, tol, (-bracket[1], -bracket[0]), True, max_doublings, max_iter
        )
        return MultiplierSolve(-res.mu, res.area, res.iterations, res.converged)

    lo, hi = float(min(bracket)), float(max(bracket))
    a_lo, a_hi = area_of(lo), area_of(hi)
    doublings = 0
    while a_lo > target + tol or a_hi < target - tol:
        if doublings >= max_doublings:
            raise MultiplierNotBracketed((lo, hi), (a_lo, a_hi), target)
        width = hi - lo
        if a_lo > target + tol:
            lo, a_lo = lo - width, area_of(lo - width)
        if a_hi < target - tol:
            hi, a_hi = hi + width, area_of(hi + width)
        doublings += 1

    best_mu, best_a = (lo, a_lo) if abs(a_lo - target) <= abs(a_hi - target) else (hi, a_hi)
    iterations = 0
    while abs(best_a - target) > tol and iterations < max_iter:
        mid = 0.5 * (lo + hi)
        a = area_of(mid)
        iterations += 1
        if abs(a - target) < abs(best_a - target):
            best_mu, best_a = mid, a
        if a < target:
            lo = mid
        else:
            hi = mid
    return MultiplierSolve(best_mu, best_a, iterations, abs(best_a - target) <= tol)


# ---------------------------------------------------------------------------
# Binary partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinaryPartition:
    grid: Grid2D
    L: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        shape = (self.grid.n, self.grid.n)
        L = np.array(self.L, dtype=bool)
        S = np.array(self.S, dtype=bool)
        if L.shape != shape or S.shape != shape:
            raise ConfigError(f"partition masks must have shape {shape}")
        if np.any(L & S):
            raise ConfigError("liquid and solid masks overlap")
        L.setflags(write=False)
        S.setflags(write=False)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "S", S)

    @property
    def V(self) -> np.ndarray:
        return ~(self.L | self.S)

    @property
    def area(self) -> float:
        return float(self.L.sum()) * self.grid.dx**2

    @classmethod
    def from_state(cls, state: LevelSetState) -> "BinaryPartition":
        S = state.phi_S.values >= 0
        return cls(state.grid, (state.phi_L.values >= 0) & ~S, S)


@dataclass(frozen=True)
class _Snapped:
    offsets: np.ndarray  # (k, 2) integer (dix, diy)
    vl: np.ndarray
    ls: np.ndarray
    vs: np.ndarray


def _snap(stencils: StencilSet, dx: float) -> _Snapped:
    """Round offsets to grid nodes and merge weights landing on the same node."""
    idx = np.rint(stencils.offsets / dx).astype(np.int64)
    uniq, inverse = np.unique(idx, axis=0, return_inverse=True)
    inverse = np.ravel(inverse)

    def merged(w):
        return np.bincount(inverse, weights=w, minlength=len(uniq))

    return _Snapped(uniq, merged(stencils.vl.weights), merged(stencils.ls.weights), merged(stencils.vs.weights))


def _shift(mask: np.ndarray, off) -> np.ndarray:
    """mask evaluated at (iy + diy, ix + dix)."""
    return np.roll(mask, (-int(off[1]), -int(off[0])), axis=(0, 1))


def _psi_base(part: BinaryPartition, stencils: StencilSet) -> np.ndarray:
    snap = _snap(stencils, part.grid.dx)
    L = part.L.astype(float)
    S = part.S.astype(float)
    psi = np.zeros_like(L)
    for off, w_vl, w_ls, w_vs in zip(snap.offsets, snap.vl, snap.ls, snap.vs):
        Ls, Ss = _shift(L, off), _shift(S, off)
        psi += w_vl * (1.0 - Ss - 2.0 * Ls) + (w_ls - w_vs) * Ss
    return psi


def decision_value(
    x: Tuple[int, int],
    part: Optional[BinaryPartition],
    stencils: StencilSet,
    mu: float,
    *,
    state: Optional[LevelSetState] = None,
) -> float:
    """ψ at node x = (iy, ix).

    With ``state`` given, neighbours are sampled bilinearly from the level sets and labelled by
    :func:`classify` at level 0, exactly as the median filter sees them; otherwise each offset
    is snapped to its nearest node and read from the masks.
    """
    iy, ix = int(x[0]), int(x[1])
    if state is not None:
        n = state.grid.n
        if state.phi_S.values[iy, ix] >= 0:
            raise PreconditionViolation(f"node {(iy, ix)} lies in the solid")
        px = ix / n + stencils.offsets[:, 0]
        py = iy / n + stencils.offsets[:, 1]
        labels = classify(
            sample_values(state.phi_L.values, px, py),
            sample_values(state.phi_V.values, px, py),
            sample_values(state.phi_S.values, px, py),
        )
        w_vl, w_ls, w_vs = stencils.vl.weights, stencils.ls.weights, stencils.vs.weights
    else:
        if part is None:
            raise ConfigError("decision_value needs a partition or a level-set state")
        n = part.grid.n
        if part.S[iy, ix]:
            raise PreconditionViolation(f"node {(iy, ix)} lies in the solid")
        snap = _snap(stencils, part.grid.dx)
        rows = (iy + snap.offsets[:, 1]) % n
        cols = (ix + snap.offsets[:, 0]) % n
        labels = np.where(part.L[rows, cols], OWN, np.where(part.S[rows, cols], SOLID, OTHER))
        w_vl, w_ls, w_vs = snap.vl, snap.ls, snap.vs
    psi = np.where(labels == OTHER, w_vl, 0.0) - np.where(labels == OWN, w_vl, 0.0)
    psi = psi + np.where(labels == SOLID, w_ls - w_vs, 0.0)
    return float(psi.sum() + mu)


def decide(
    x: Tuple[int, int],
    part: Optional[BinaryPartition],
    stencils: StencilSet,
    mu: float,
    *,
    state: Optional[LevelSetState] = None,
) -> bool:
    """True when node x joins the liquid (ψ ≤ 0)."""
    return decision_value(x, part, stencils, mu, state=state) <= 0.0


def td_step(
    part: BinaryPartition,
    stencils: StencilSet,
    area: Optional[float] = None,
    mu_tol: Optional[float] = None,
    *,
    mu: Optional[float] = None,
    mu_bracket: Optional[Tuple[float, float]] = None,
) -> tuple[BinaryPartition, float]:
    """One thresholding step.

    With ``mu`` given the multiplier is fixed and ``area`` is ignored; otherwise μ is bisected so
    the node-counted area matches ``area`` (default: the current area) within ``mu_tol``
    (default: one node).
    """
    dx2 = part.grid.dx**2
    psi = _psi_base(part, stencils)
    free = ~part.S

    def new_L(m: float) -> np.ndarray:
        return free & (psi + m <= 0.0)

    if mu is None:
        target = part.area if area is None else float(area)
        if target > free.sum() * dx2:
            raise MultiplierNotBracketed((np.nan, np.nan), (np.nan, np.nan), target)
        tol = dx2 if mu_tol is None else float(mu_tol)
        mass = stencils.vl.mass
        res = solve_multiplier(
            lambda m: float(new_L(m).sum()) * dx2,
            target,
            tol,
            mu_bracket or (-2.0 * mass, 2.0 * mass),
            increasing=False,
        )
        if not res.converged:
            logger.warning("Thresholding area %.6g missed target %.6g after %d bisections", res.area, target, res.iterations)
        mu = res.mu
    return BinaryPartition(part.grid, new_L(mu), part.S), float(mu)


def td_run(
    part: BinaryPartition,
    stencils: StencilSet,
    steps: int,
    area: Optional[float] = None,
    *,
    mu: Optional[float] = None,
    progress: bool = False,
) -> tuple[BinaryPartition, List[float]]:
    """Repeat :func:`td_step`; returns the final partition and the multiplier of each step."""
    target = part.area if (area is None and mu is None) else area
    mus: List[float] = []
    for _ in tqdm(range(steps), desc="Thresholding", unit="step", disable=not progress):
        part, m = td_step(part, stencils, target, mu=mu)
        mus.append(m)
    return part, mus


def nonlocal_energy(part: BinaryPartition, stencils: StencilSet, dt: float) -> float:
    """(1/√dt) ∫_L (K_LS − K_VS − K_VL) * 1_S − K_VL * 1_L, with node quadrature."""
    if not part.L.any():
        return 0.0
    snap = _snap(stencils, part.grid.dx)
    L = part.L.astype(float)
    S = part.S.astype(float)
    density = np.zeros_like(L)
    for off, w_vl, w_ls, w_vs in zip(snap.offsets, snap.vl, snap.ls, snap.vs):
        density += (w_ls - w_vs - w_vl) * _shift(S, off) - w_vl * _shift(L, off)
    return float(density[part.L].sum() * part.grid.dx**2 / math.sqrt(dt))
