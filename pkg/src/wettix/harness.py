# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.harness

Experiment orchestration.

Flow of a run:
1) Build the three interface kernels from the configured tensions and mobilities.
2) Discretize them for dt and initialize φ_L, φ_V, φ_S from the configured shapes.
3) Step to T, logging steps.csv / energy.csv / components.csv and dumping snapshots.

On top of single runs: refinement ladders (run in a worker pool), convergence tables against
a Winterbottom, front-tracking or finest-level reference, the equilibrium comparison with a
Winterbottom shape, kernel weight tables and the paired solid-vapor mobility study.

Refinement couples dt ∝ dx (each level doubles both the step count and 1/dx), so the stencil
radius √dt shrinks more slowly than dx and stays several cells wide.
"""

from __future__ import annotations

import copy
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from . import __version__
from .anisotropy import (
    AnisotropyFn,
    Constant,
    SurfaceTensionTriple,
    admissible_radii,
    contact_angle,
    winterbottom_shape,
)
from .config import ExperimentConfig, load_config_dict
from .dumps import (
    COMPONENTS_HEADER,
    ENERGY_HEADER,
    STEPS_HEADER,
    CsvLog,
    new_run_dir,
    output_root,
    time_tag,
    write_error_csv,
    write_field,
    write_metadata,
    write_polylines,
    write_snapshot,
    write_table,
)
from .errors import ConfigError, NoEquilibriumShape, NoInterface
from .fields import (
    Grid2D,
    LevelSetState,
    Polyline,
    ScalarField,
    area_of_values,
    centroid_x,
    count_components,
    extract_contour,
    redistance,
    signed_distance_init,
)
from .fronttrack import curve_area, curve_polyline, ft_run, marker_curve_from_region
from .kernels import (
    EFFECTIVE_TIME_SCALE,
    INTERFACES,
    CircleKernel,
    StencilSet,
    build_single_circle_kernel,
    build_two_circle_kernel,
    check_moments,
    discretize,
    kernel_table,
)
from .metrics import ErrorRow, convergence_table, l1_error, linf_error
from .shapes import Union
from .threshold_dynamics import BinaryPartition, nonlocal_energy
from .vls_stepper import StepParams, StepReport, default_band, step

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Kernels and initial state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelBundle:
    kernels: Dict[str, CircleKernel]
    stencils: StencilSet


def build_kernels(cfg: ExperimentConfig) -> Dict[str, CircleKernel]:
    """One kernel per interface; single-circle mode replaces each mobility by the induced one."""
    spec = cfg.kernel
    out: Dict[str, CircleKernel] = {}
    for iface in INTERFACES:
        sigma = getattr(cfg, f"sigma_{iface}")
        if spec.mode == "single-circle":
            out[iface], _ = build_single_circle_kernel(sigma, spec.R, spec.q, iface)
        else:
            out[iface] = build_two_circle_kernel(sigma, getattr(cfg, f"m_{iface}"), spec.R1, spec.R2, spec.q, iface)
    return out


def build_stencils(cfg: ExperimentConfig, kernels: Optional[Dict[str, CircleKernel]] = None) -> KernelBundle:
    kernels = kernels or build_kernels(cfg)
    stencils = StencilSet(*(discretize(kernels[i], cfg.dt) for i in INTERFACES))
    if not stencils.triangle_ok:
        logger.warning("Discrete kernels violate the triangle inequality; level sets may not nest")
    return KernelBundle(kernels, stencils)


def _constant_value(fn: AnisotropyFn, name: str) -> float:
    if not isinstance(fn, Constant):
        raise ConfigError(f"{name} must be a constant for this operation, got {fn}")
    return float(fn.c)


def kernel_metadata(cfg: ExperimentConfig, bundle: KernelBundle) -> dict:
    """Diagnostics written to metadata.yaml."""
    k = bundle.kernels
    triple = SurfaceTensionTriple(
        cfg.sigma_VL, cfg.sigma_LS, cfg.sigma_VS, k["VL"].m, k["LS"].m, k["VS"].m
    ).check()
    meta: dict = {
        "wettix_version": __version__,
        "kernel_mode": cfg.kernel.mode,
        "effective_time_scale": EFFECTIVE_TIME_SCALE,
        "stencil_size": len(bundle.stencils),
        "stencil_max_radius": bundle.stencils.max_radius,
        "triangle_ok": bundle.stencils.triangle_ok,
        "strong_triangle": triple.strong_triangle,
        "interfaces": {},
    }
    stencils = {"VL": bundle.stencils.vl, "LS": bundle.stencils.ls, "VS": bundle.stencils.vs}
    for iface in INTERFACES:
        lower, upper = admissible_radii(k[iface].sigma, k[iface].m)
        report = check_moments(k[iface])
        meta["interfaces"][iface] = {
            "sigma": str(k[iface].sigma),
            "mobility": str(k[iface].m),
            "min_weight": k[iface].min_weight,
            "stencil_mass": stencils[iface].mass,
            "radius_bounds": [lower, upper],
            "moment_deviation": report.max_deviation,
        }
    try:
        meta["contact_angle"] = contact_angle(
            cfg.sigma_VL, _constant_value(cfg.sigma_LS, "sigma_LS"), _constant_value(cfg.sigma_VS, "sigma_VS")
        )
    except (ConfigError, NoEquilibriumShape):
        meta["contact_angle"] = None
    return meta


def droplet_shape(cfg: ExperimentConfig):
    if not cfg.droplets:
        raise ConfigError("shapes.droplets: at least one droplet is needed")
    return cfg.droplets[0] if len(cfg.droplets) == 1 else Union(tuple(cfg.droplets))


def initial_state(cfg: ExperimentConfig) -> LevelSetState:
    """φ_S from the substrate, φ_L = min(φ_drop, −φ_S), φ_V = min(−φ_drop, −φ_S)."""
    grid = Grid2D(cfg.n)
    phi_S = signed_distance_init(cfg.substrate, grid, "phi_S")
    X, Y = grid.coords()
    drop = np.asarray(droplet_shape(cfg).signed_distance(X, Y), dtype=float)
    cap = -phi_S.values
    phi_L = ScalarField(grid, np.minimum(drop, cap), "phi_L")
    phi_V = ScalarField(grid, np.minimum(-drop, cap), "phi_V")
    area = cfg.area if cfg.area is not None else area_of_values(phi_L.values, grid.dx)
    if area <= 0:
        raise ConfigError("initial droplet lies entirely inside the solid")
    return LevelSetState(phi_L, phi_V, phi_S, float(area))


def step_params(cfg: ExperimentConfig, stencils: StencilSet) -> StepParams:
    band = cfg.solver.band
    if band == "auto":
        band = default_band(stencils, 1.0 / cfg.n)
    return StepParams(
        dt=cfg.dt,
        stencils=stencils,
        mu_tol=cfg.solver.mu_tol,
        comparison=cfg.solver.comparison,
        band=band,
    )


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    run_dir: Path
    state: LevelSetState
    reports: List[StepReport] = field(default_factory=list)
    components: List[int] = field(default_factory=list)


def prepare_run_dir(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> Path:
    """``out_dir`` or ``output.directory`` if given (created as needed), else a fresh run directory."""
    target = out_dir if out_dir is not None else cfg.output_dir
    if target is not None:
        target = Path(target).expanduser()
        target.mkdir(parents=True, exist_ok=True)
        return target
    return new_run_dir(output_root(), cfg.name)


def _snapshot_steps(cfg: ExperimentConfig) -> Dict[int, float]:
    out = {}
    for t in cfg.snapshots:
        k = int(round(t / cfg.dt))
        if abs(k * cfg.dt - t) > 1e-9 * max(1.0, t):
            logger.warning("Snapshot time %.6g is not on the step grid; using step %d (t=%.6g)", t, k, k * cfg.dt)
        out[k] = k * cfg.dt
    return out


def dump_state(run_dir: Path, state: LevelSetState, t: float) -> None:
    tag = time_tag(t)
    write_field(run_dir / f"phiL_{tag}.fld", state.phi_L)
    write_field(run_dir / f"phiV_{tag}.fld", state.phi_V)
    try:
        write_polylines(run_dir / f"contour_{tag}.xy", extract_contour(state.phi_L, 0.0))
    except NoInterface:
        logger.warning("No liquid contour at t=%.6g", t)


def _redistance_state(state: LevelSetState, band: float) -> LevelSetState:
    cap = -state.phi_S.values
    phi_L = redistance(state.phi_L, band)
    phi_V = redistance(state.phi_V, band)
    return LevelSetState(
        phi_L.with_values(np.minimum(phi_L.values, cap)),
        phi_V.with_values(np.minimum(phi_V.values, cap)),
        state.phi_S,
        state.target_area,
        state.step_index,
    )


def run(cfg: ExperimentConfig, out_dir: Optional[Path] = None, progress: bool = True) -> RunResult:
    """Run one experiment to T; returns the final state and the step reports.

    Logs are flushed row by row, so a run aborted by an error keeps everything up to it.
    """
    run_dir = prepare_run_dir(cfg, out_dir)
    write_snapshot(run_dir, cfg.raw)
    bundle = build_stencils(cfg)
    write_metadata(run_dir, kernel_metadata(cfg, bundle))
    params = step_params(cfg, bundle.stencils)
    state = initial_state(cfg)
    snaps = _snapshot_steps(cfg)
    steps = cfg.steps
    energy_every = cfg.energy_every
    redist_band = params.band or default_band(bundle.stencils, 1.0 / cfg.n)

    logger.info(
        "Running %s: n=%d, dt=%.6g, %d steps, area=%.6g, %d stencil points…",
        cfg.name,
        cfg.n,
        cfg.dt,
        steps,
        state.target_area,
        len(bundle.stencils),
    )
    result = RunResult(run_dir, state)
    with CsvLog(run_dir / "steps.csv", STEPS_HEADER) as steps_log, CsvLog(
        run_dir / "energy.csv", ENERGY_HEADER
    ) as energy_log, CsvLog(run_dir / "components.csv", COMPONENTS_HEADER) as comp_log:
        comp = count_components(state.phi_L)
        result.components.append(comp)
        comp_log.write(0, 0.0, comp)
        if 0 in snaps:
            dump_state(run_dir, state, 0.0)
        for k in tqdm(range(1, steps + 1), desc=cfg.name, unit="step", disable=not progress):
            state, report = step(state, params)
            result.reports.append(report)
            steps_log.write(report.step, report.mu, report.area_achieved, report.bisection_iterations, report.max_dphi)
            if energy_every and k % energy_every == 0:
                energy = nonlocal_energy(BinaryPartition.from_state(state), bundle.stencils, cfg.dt)
                energy_log.write(k, report.mu, energy)
            comp = count_components(state.phi_L)
            if comp != result.components[-1]:
                logger.info("Step %d: liquid components %d -> %d", k, result.components[-1], comp)
            result.components.append(comp)
            comp_log.write(k, k * cfg.dt, comp)
            if cfg.solver.redistance_every and k % cfg.solver.redistance_every == 0:
                state = _redistance_state(state, redist_band)
            if k in snaps:
                dump_state(run_dir, state, snaps[k])
    dump_state(run_dir, state, cfg.T)
    result.state = state
    logger.info("Run complete: %s", run_dir)
    return result


# ---------------------------------------------------------------------------
# Ladders and references
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelResult:
    steps: int
    inv_dx: int
    phi_L: ScalarField
    area: float
    run_dir: Path


def _run_level(raw: dict, steps: int, inv_dx: int, run_dir: Path, progress: bool) -> LevelResult:
    cfg = load_config_dict(raw).at_level(steps, inv_dx)
    res = run(cfg, run_dir, progress=progress)
    return LevelResult(steps, inv_dx, res.state.phi_L, res.state.target_area, res.run_dir)


def run_ladder(
    cfg: ExperimentConfig,
    study_dir: Path,
    jobs: int = 1,
    progress: bool = True,
) -> List[LevelResult]:
    """Run every refinement level; results come back in level order."""
    levels = list(cfg.levels)
    if not levels:
        raise ConfigError("time.levels: no refinement levels configured")
    if jobs == 0:
        jobs = max(1, (os.cpu_count() or 1) - 1)
    jobs = max(1, min(jobs, len(levels)))
    raw = copy.deepcopy(cfg.raw)
    raw["output"]["directory"] = None
    dirs = [Path(study_dir) / f"level_{s}_{m}" for s, m in levels]

    results: List[Optional[LevelResult]] = [None] * len(levels)
    if jobs == 1:
        for i, ((s, m), d) in enumerate(zip(levels, dirs)):
            logger.info("Running level %d/%d (steps=%d, n=%d)…", i + 1, len(levels), s, m)
            results[i] = _run_level(raw, s, m, d, progress)
        return results  # type: ignore[return-value]

    logger.info("Running %d levels on %d workers…", len(levels), jobs)
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        futs = {ex.submit(_run_level, raw, s, m, d, False): i for i, ((s, m), d) in enumerate(zip(levels, dirs))}
        for fut in as_completed(futs):
            idx = futs[fut]
            results[idx] = fut.result()
            logger.info("Level steps=%d n=%d finished.", results[idx].steps, results[idx].inv_dx)
    return results  # type: ignore[return-value]


def winterbottom_reference(cfg: ExperimentConfig, area: float, center_x: Optional[float] = None) -> Polyline:
    if not cfg.substrate.is_flat:
        raise ConfigError("reference.kind: winterbottom needs a flat substrate")
    cx = center_x if center_x is not None else cfg.reference.center_x
    if cx is None:
        cx = float(droplet_shape(cfg).to_shapely().centroid.x)
    shape, _ = winterbottom_shape(
        cfg.sigma_VL,
        _constant_value(cfg.sigma_LS, "sigma_LS"),
        _constant_value(cfg.sigma_VS, "sigma_VS"),
        area,
        cfg.substrate.height,
        cx,
    )
    return shape


def fronttrack_reference(cfg: ExperimentConfig, area: Optional[float] = None, progress: bool = False) -> Polyline:
    """Marker curve from the initial droplet, integrated over T·EFFECTIVE_TIME_SCALE."""
    if not cfg.substrate.is_flat:
        raise ConfigError("reference.kind: fronttrack needs a flat substrate")
    kernels = build_kernels(cfg)
    curve = marker_curve_from_region(droplet_shape(cfg), cfg.substrate.height, cfg.reference.markers)
    target = area if area is not None else (cfg.area if cfg.area is not None else curve_area(curve))
    logger.info("Computing front-tracking reference with %d markers…", cfg.reference.markers)
    curve = ft_run(
        curve,
        cfg.sigma_VL,
        kernels["VL"].m,
        _constant_value(cfg.sigma_LS, "sigma_LS"),
        _constant_value(cfg.sigma_VS, "sigma_VS"),
        cfg.T * EFFECTIVE_TIME_SCALE,
        area=target,
        progress=progress,
    )
    return curve_polyline(curve)


@dataclass
class ConvergenceResult:
    study_dir: Path
    rows: List[ErrorRow]
    slope: Optional[float]
    levels: List[LevelResult]


def converge(
    cfg: ExperimentConfig, out_dir: Optional[Path] = None, jobs: int = 1, progress: bool = True
) -> ConvergenceResult:
    """Run the refinement ladder and tabulate errors against the configured reference."""
    if len(cfg.levels) < 3:
        raise ConfigError(f"time.levels: convergence needs at least 3 refinement levels, got {len(cfg.levels)}")
    kind = cfg.reference.kind
    if kind == "none":
        raise ConfigError("reference.kind: convergence needs a reference (winterbottom, fronttrack or finest-self)")
    study_dir = prepare_run_dir(cfg, out_dir)
    write_snapshot(study_dir, cfg.raw)

    # fail on an unavailable reference before spending time on the ladder
    reference = None
    if kind == "fronttrack":
        reference = fronttrack_reference(cfg, progress=progress)
        write_polylines(study_dir / "reference.xy", [reference])

    levels = run_ladder(cfg, study_dir, jobs, progress)
    runs = [(lv.steps, lv.inv_dx, lv.phi_L) for lv in levels]
    if kind == "winterbottom":
        finest = levels[-1].phi_L
        reference = winterbottom_reference(cfg, levels[-1].area, centroid_x(finest))
        write_polylines(study_dir / "reference.xy", [reference])
    elif kind == "finest-self":
        reference = levels[-1].phi_L
        runs = runs[:-1]

    rows, slope = convergence_table(runs, reference)
    write_error_csv(study_dir / "errors.csv", rows, slope)
    if slope is not None:
        logger.info("Log-log slope of the L1 ladder: %.4f", slope)
    return ConvergenceResult(study_dir, rows, slope, levels)


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquilibriumResult:
    run_dir: Path
    l1: float
    linf: float


def equilibrium(cfg: ExperimentConfig, out_dir: Optional[Path] = None, progress: bool = True) -> EquilibriumResult:
    """Run to T and compare the droplet with the Winterbottom shape of the same area."""
    res = run(cfg, out_dir, progress)
    phi = res.state.phi_L
    reference = winterbottom_reference(cfg, res.state.target_area, centroid_x(phi))
    write_polylines(res.run_dir / "reference.xy", [reference])
    l1 = l1_error(phi, reference)
    linf = linf_error(phi, reference)
    write_table(res.run_dir / "equilibrium.csv", ("l1", "linf"), [(l1, linf)])
    logger.info("Equilibrium errors: L1=%.6g Linf=%.6g", l1, linf)
    return EquilibriumResult(res.run_dir, l1, linf)


def kernel_dump(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> Path:
    """Write kernel_<iface>.csv (theta, w1[, w2]) for every interface plus metadata.yaml."""
    run_dir = prepare_run_dir(cfg, out_dir)
    write_snapshot(run_dir, cfg.raw)
    kernels = build_kernels(cfg)
    for iface, k in kernels.items():
        header = ["theta"] + [f"w{i + 1}" for i in range(len(k.circles))]
        write_table(run_dir / f"kernel_{iface}.csv", header, kernel_table(k))
        logger.info("%s kernel: radii %s, min weight %.6g", iface, k.radii, k.min_weight)
    write_metadata(run_dir, kernel_metadata(cfg, build_stencils(cfg, kernels)))
    return run_dir


@dataclass
class InsensitivityResult:
    study_dir: Path
    first: ConvergenceResult
    second: ConvergenceResult
    relative_differences: List[float]


def _without_vs_mobility(raw: dict) -> dict:
    out = copy.deepcopy(raw)
    out.get("mobilities", {}).pop("VS", None)
    out.pop("output", None)
    return out


def mobility_insensitivity_study(
    first: ExperimentConfig,
    second: ExperimentConfig,
    out_dir: Optional[Path] = None,
    jobs: int = 1,
    progress: bool = True,
) -> InsensitivityResult:
    """Run both ladders (configs equal except for the solid-vapor mobility) and compare row by row."""
    if _without_vs_mobility(first.raw) != _without_vs_mobility(second.raw):
        raise ConfigError("insensitivity study: configs must differ only in mobilities.VS")
    study_dir = prepare_run_dir(first, out_dir)
    a = converge(first, study_dir / "first", jobs, progress)
    b = converge(second, study_dir / "second", jobs, progress)
    diffs = relative_differences([r.l1 for r in a.rows], [r.l1 for r in b.rows])
    write_table(
        study_dir / "insensitivity.csv",
        ("steps", "inv_dx", "l1_first", "l1_second", "rel_diff"),
        [(ra.steps, ra.inv_dx, ra.l1, rb.l1, d) for ra, rb, d in zip(a.rows, b.rows, diffs)],
    )
    logger.info("Largest relative difference between the ladders: %.3g", max(diffs, default=0.0))
    return InsensitivityResult(study_dir, a, b, diffs)


def relative_differences(first: Sequence[float], second: Sequence[float]) -> List[float]:
    """|a − b| / max(|a|, |b|) row by row (0 where both vanish)."""
    out = []
    for x, y in zip(first, second):
        scale = max(abs(x), abs(y))
        out.append(0.0 if scale == 0 else abs(x - y) / scale)
    return out


def audit_conservation(reports: Sequence[StepReport], target: float, tol: float) -> List[int]:
    """Steps whose achieved area misses ``target`` by more than ``tol``."""
    return [r.step for r in reports if abs(r.area_achieved - target) > tol]
