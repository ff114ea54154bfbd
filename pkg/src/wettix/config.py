# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.config

Experiment configuration files.

Responsibilities:
- Load YAML config files (from a path or by bundled name, see ``configs/``).
- Apply ``section.key=value`` overrides from the command line.
- Validate the merged mapping into an :class:`ExperimentConfig`, collecting every problem
  instead of stopping at the first one.

Design notes
- :func:`validate_config` is pure: it returns ``(config or None, errors)`` and never logs.
  :func:`load_config` raises :class:`ConfigError` with all messages joined.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

import yaml

from .anisotropy import AnisotropyFn, MobilityFn, SurfaceTensionTriple, parse_anisotropy
from .errors import ConfigError
from .shapes import Difference, Disc, Polygon, Substrate, Union, isosceles_triangle, rectangle

CONFIG_DIR = Path(__file__).parent / "configs"

KERNEL_MODES = ("two-circle", "single-circle")
REFERENCES = ("winterbottom", "fronttrack", "finest-self", "none")

DEFAULTS: dict = {
    "grid": {"n": 200},
    "time": {"dt": 0.0008, "T": 0.16, "snapshots": [], "levels": []},
    "tensions": {"VL": 1.0, "LS": 1.0, "VS": 1.0},
    "mobilities": {"VL": 1.0, "LS": 1.0, "VS": 1.0},
    "kernel": {"mode": "two-circle", "R1": 2.0, "R2": 0.25, "R": 0.5, "q": 100},
    "shapes": {"droplets": [], "substrate": {"profile": "flat"}, "area": None},
    "solver": {"comparison": "non-strict", "band": None, "mu_tol": None, "redistance_every": 0},
    "reference": {"kind": None, "markers": 2048, "center_x": None},
    "output": {"name": None, "directory": None, "seed": 0, "energy_every": 1},
}


def load_yaml_config(cfg_path: Path) -> dict:
    """Load YAML config as a mapping.

    - Treats empty files as {}.
    - Ensures top-level is a mapping; avoids accidental list/str configs.
    """
    try:
        with cfg_path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Error parsing YAML config {cfg_path}:\n{e}") from e
    except OSError as e:
        raise ConfigError(f"Cannot read config file {cfg_path}:\n{e}") from e

    if not isinstance(data, dict):
        raise ConfigError(f"Top-level YAML must be a mapping: {cfg_path}")

    return data


def bundled_configs() -> List[str]:
    return sorted(p.stem for p in CONFIG_DIR.glob("*.yaml"))


def resolve_config_path(name_or_path: str | Path) -> Path:
    """A readable file path, or the bundled config of that name."""
    p = Path(name_or_path).expanduser()
    if p.is_file():
        return p
    bundled = CONFIG_DIR / f"{Path(str(name_or_path)).stem}.yaml"
    if bundled.is_file():
        return bundled
    raise ConfigError(
        f"Config not found: {name_or_path} (bundled configs: {', '.join(bundled_configs()) or 'none'})"
    )


def apply_overrides(raw: dict, overrides: Sequence[str]) -> dict:
    """Return a copy of ``raw`` with each ``section.key=value`` applied (values parsed as YAML)."""
    out = copy.deepcopy(raw)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"Override must look like section.key=value, got {item!r}")
        section, name = key.strip().split(".", 1)
        try:
            parsed = yaml.safe_load(value)
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse override value in {item!r}:\n{e}") from e
        target = out.setdefault(section, {})
        if not isinstance(target, dict):
            raise ConfigError(f"Config section {section!r} is not a mapping")
        target[name] = parsed
    return out


def merged_with_defaults(raw: dict) -> dict:
    """Defaults filled in section by section; unknown sections and keys are kept for validation."""
    out = {}
    for section, defaults in DEFAULTS.items():
        given = raw.get(section) or {}
        out[section] = copy.deepcopy(defaults) | (given if isinstance(given, dict) else {})
    for section in raw:
        if section not in out:
            out[section] = raw[section]
    return out


# ---------------------------------------------------------------------------
# Typed configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSpec:
    mode: str = "two-circle"
    R1: float = 2.0
    R2: float = 0.25
    R: float = 0.5
    q: int = 100


@dataclass(frozen=True)
class SolverSpec:
    comparison: str = "non-strict"
    band: Optional[float | str] = None
    mu_tol: Optional[float] = None
    redistance_every: int = 0


@dataclass(frozen=True)
class ReferenceSpec:
    kind: str = "winterbottom"
    markers: int = 2048
    center_x: Optional[float] = None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    n: int
    dt: float
    T: float
    snapshots: Tuple[float, ...]
    levels: Tuple[Tuple[int, int], ...]
    sigma_VL: AnisotropyFn
    sigma_LS: AnisotropyFn
    sigma_VS: AnisotropyFn
    m_VL: MobilityFn
    m_LS: MobilityFn
    m_VS: MobilityFn
    kernel: KernelSpec
    droplets: Tuple[Any, ...]
    substrate: Substrate
    area: Optional[float]
    solver: SolverSpec
    reference: ReferenceSpec
    output_dir: Optional[Path]
    seed: int
    energy_every: int
    raw: dict = field(repr=False, compare=False)

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def at_level(self, steps: int, inv_dx: int) -> "ExperimentConfig":
        """The same experiment with ``steps`` time steps to T on an ``inv_dx`` grid."""
        raw = copy.deepcopy(self.raw)
        raw["grid"]["n"] = int(inv_dx)
        raw["time"]["dt"] = self.T / int(steps)
        raw["time"]["levels"] = []
        return load_config_dict(raw)


def _number(value, key: str, errors: List[str], *, positive=False, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, str):
        # PyYAML reads exponent literals without a dot (1e-4) as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{key}: expected a number, got {value!r}")
        return None
    if not math.isfinite(value):
        errors.append(f"{key}: must be finite, got {value!r}")
        return None
    if integer and int(value) != value:
        errors.append(f"{key}: expected an integer, got {value!r}")
        return None
    if positive and value <= 0:
        errors.append(f"{key}: must be positive, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _pair(value, key: str, errors: List[str]) -> Optional[Tuple[float, float]]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        errors.append(f"{key}: expected [x, y], got {value!r}")
        return None
    a = _number(value[0], key, errors)
    b = _number(value[1], key, errors)
    return None if a is None or b is None else (a, b)


def build_shape(spec, key: str, errors: List[str]):
    """Shape object from a mapping with a ``kind`` key; None (with errors) when invalid."""
    if not isinstance(spec, dict) or "kind" not in spec:
        errors.append(f"{key}: a shape needs a 'kind' (disc, polygon, triangle, rectangle, union, difference)")
        return None
    kind = spec["kind"]
    allowed = {
        "disc": {"center", "radius"},
        "polygon": {"vertices"},
        "triangle": {"base_center", "base", "area"},
        "rectangle": {"center", "width", "height", "angle"},
        "union": {"parts"},
        "difference": {"base", "cut"},
    }
    if kind not in allowed:
        errors.append(f"{key}.kind: unknown shape {kind!r}")
        return None
    for k in spec:
        if k != "kind" and k not in allowed[kind]:
            errors.append(f"{key}.{k}: unknown key for a {kind}")
    before = len(errors)
    try:
        if kind == "disc":
            c = _pair(spec.get("center"), f"{key}.center", errors)
            r = _number(spec.get("radius"), f"{key}.radius", errors, positive=True)
            return Disc(c, r) if len(errors) == before else None
        if kind == "polygon":
            verts = [_pair(v, f"{key}.vertices", errors) for v in spec.get("vertices") or []]
            return Polygon(verts) if len(errors) == before else None
        if kind == "triangle":
            c = _pair(spec.get("base_center"), f"{key}.base_center", errors)
            b = _number(spec.get("base"), f"{key}.base", errors, positive=True)
            a = _number(spec.get("area"), f"{key}.area", errors, positive=True)
            return isosceles_triangle(c, b, a) if len(errors) == before else None
        if kind == "rectangle":
            c = _pair(spec.get("center"), f"{key}.center", errors)
            w = _number(spec.get("width"), f"{key}.width", errors, positive=True)
            h = _number(spec.get("height"), f"{key}.height", errors, positive=True)
            ang = _number(spec.get("angle", 0.0), f"{key}.angle", errors)
            return rectangle(c, w, h, ang) if len(errors) == before else None
        if kind == "union":
            parts = [build_shape(p, f"{key}.parts[{i}]", errors) for i, p in enumerate(spec.get("parts") or [])]
            if not parts:
                errors.append(f"{key}.parts: a union needs at least one part")
            return Union(tuple(parts)) if len(errors) == before else None
        base = build_shape(spec.get("base"), f"{key}.base", errors)
        cut = build_shape(spec.get("cut"), f"{key}.cut", errors)
        return Difference(base, cut) if len(errors) == before else None
    except ConfigError as e:
        errors.append(f"{key}: {e}")
        return None


def build_substrate(spec, errors: List[str]) -> Optional[Substrate]:
    key = "shapes.substrate"
    if not isinstance(spec, dict):
        errors.append(f"{key}: expected a mapping")
        return None
    allowed = {"profile", "height", "curvature", "amplitude", "wavenumber", "x0"}
    bad = [k for k in spec if k not in allowed]
    for k in bad:
        errors.append(f"{key}.{k}: unknown key")
    kwargs = {}
    for k in allowed - {"profile"}:
        if k in spec:
            v = _number(spec[k], f"{key}.{k}", errors, integer=(k == "wavenumber"))
            if v is None:
                return None
            kwargs[k] = v
    try:
        return Substrate(profile=spec.get("profile", "flat"), **kwargs)
    except ConfigError as e:
        errors.append(f"{key}: {e}")
        return None


def _anisotropy(value, key: str, errors: List[str]) -> Optional[AnisotropyFn]:
    try:
        return parse_anisotropy(value)
    except ConfigError as e:
        errors.append(f"{key}: {e}")
        return None


def _check_levels(levels, T, errors: List[str]) -> Tuple[Tuple[int, int], ...]:
    out = []
    if not isinstance(levels, (list, tuple)):
        errors.append(f"time.levels: expected a list of [steps, inv_dx] pairs, got {levels!r}")
        return ()
    for i, lv in enumerate(levels):
        if not isinstance(lv, (list, tuple)) or len(lv) != 2:
            errors.append(f"time.levels[{i}]: expected [steps, inv_dx], got {lv!r}")
            continue
        s = _number(lv[0], f"time.levels[{i}].steps", errors, positive=True, integer=True)
        m = _number(lv[1], f"time.levels[{i}].inv_dx", errors, positive=True, integer=True)
        if s is not None and m is not None:
            out.append((s, m))
    for (s0, m0), (s1, m1) in zip(out[:-1], out[1:]):
        if s1 != 2 * s0 or m1 != 2 * m0:
            errors.append(f"time.levels: refinement must double steps and 1/dx, got ({s0},{m0}) -> ({s1},{m1})")
    return tuple(out)


def validate_config(raw: dict) -> Tuple[Optional[ExperimentConfig], List[str]]:
    """Validate a raw mapping (defaults are merged in first); returns (config or None, errors)."""
    errors: List[str] = []
    cfg = merged_with_defaults(raw)

    for section, values in cfg.items():
        if section not in DEFAULTS:
            errors.append(f"{section}: unknown config section")
            continue
        if not isinstance(values, dict):
            errors.append(f"{section}: expected a mapping")
            continue
        for k in values:
            if k not in DEFAULTS[section]:
                errors.append(f"{section}.{k}: unknown config key")

    g, t, ten, mob, ker = cfg["grid"], cfg["time"], cfg["tensions"], cfg["mobilities"], cfg["kernel"]
    sh, sol, ref, out = cfg["shapes"], cfg["solver"], cfg["reference"], cfg["output"]

    n = _number(g.get("n"), "grid.n", errors, positive=True, integer=True)
    if n is not None and n < 8:
        errors.append(f"grid.n: must be at least 8, got {n}")
    dt = _number(t.get("dt"), "time.dt", errors, positive=True)
    T = _number(t.get("T"), "time.T", errors)
    if T is not None and T < 0:
        errors.append(f"time.T: must be non-negative, got {T}")
    if dt is not None and T is not None and T > 0 and abs(T / dt - round(T / dt)) > 1e-6 * max(1.0, T / dt):
        errors.append(f"time: T={T} is not an integral number of steps of dt={dt}")
    snaps = []
    for i, s in enumerate(t.get("snapshots") or []):
        v = _number(s, f"time.snapshots[{i}]", errors)
        if v is not None:
            if T is not None and not 0 <= v <= T:
                errors.append(f"time.snapshots[{i}]: {v} outside [0, T]")
            snaps.append(v)
    levels = _check_levels(t.get("levels") or [], T, errors)

    fns = {}
    for iface in ("VL", "LS", "VS"):
        fns[f"sigma_{iface}"] = _anisotropy(ten.get(iface), f"tensions.{iface}", errors)
        fns[f"m_{iface}"] = _anisotropy(mob.get(iface), f"mobilities.{iface}", errors)
    if all(f is not None for f in fns.values()):
        try:
            SurfaceTensionTriple(**fns).check()
        except ConfigError as e:
            errors.append(f"tensions/mobilities: {e}")

    mode = ker.get("mode")
    if mode not in KERNEL_MODES:
        errors.append(f"kernel.mode: must be one of {KERNEL_MODES}, got {mode!r}")
    R1 = _number(ker.get("R1"), "kernel.R1", errors, positive=True)
    R2 = _number(ker.get("R2"), "kernel.R2", errors, positive=True)
    R = _number(ker.get("R"), "kernel.R", errors, positive=True)
    q = _number(ker.get("q"), "kernel.q", errors, positive=True, integer=True)
    if mode == "two-circle" and R1 is not None and R1 == R2:
        errors.append("kernel: two-circle kernel needs R1 != R2")
    if q is not None and q < 4:
        errors.append(f"kernel.q: needs at least 4 samples, got {q}")

    droplets_raw = sh.get("droplets") or []
    if not isinstance(droplets_raw, list):
        errors.append("shapes.droplets: expected a list of shapes")
        droplets_raw = []
    droplets = tuple(build_shape(d, f"shapes.droplets[{i}]", errors) for i, d in enumerate(droplets_raw))
    substrate = build_substrate(sh.get("substrate"), errors)
    area = _number(sh.get("area"), "shapes.area", errors, positive=True, allow_none=True)

    comparison = sol.get("comparison")
    if comparison not in ("non-strict", "strict"):
        errors.append(f"solver.comparison: must be 'non-strict' or 'strict', got {comparison!r}")
    band = sol.get("band")
    if band is not None and band != "auto":
        band = _number(band, "solver.band", errors, positive=True)
    mu_tol = _number(sol.get("mu_tol"), "solver.mu_tol", errors, positive=True, allow_none=True)
    redist = _number(sol.get("redistance_every"), "solver.redistance_every", errors, integer=True)
    if redist is not None and redist < 0:
        errors.append("solver.redistance_every: must be non-negative")

    kind = ref.get("kind")
    if kind is None and substrate is not None:
        kind = "winterbottom" if substrate.is_flat else "finest-self"
    if kind not in REFERENCES:
        errors.append(f"reference.kind: must be one of {REFERENCES}, got {kind!r}")
    elif kind in ("winterbottom", "fronttrack") and substrate is not None and not substrate.is_flat:
        errors.append(f"reference.kind: {kind} needs a flat substrate")
    markers = _number(ref.get("markers"), "reference.markers", errors, positive=True, integer=True)
    center_x = _number(ref.get("center_x"), "reference.center_x", errors, allow_none=True)

    seed = _number(out.get("seed"), "output.seed", errors, integer=True)
    energy_every = _number(out.get("energy_every"), "output.energy_every", errors, integer=True)
    if energy_every is not None and energy_every < 0:
        errors.append("output.energy_every: must be non-negative")
    directory = out.get("directory")
    name = out.get("name") or "run"

    if errors:
        return None, errors

    config = ExperimentConfig(
        name=str(name),
        n=n,
        dt=dt,
        T=T,
        snapshots=tuple(sorted(snaps)),
        levels=levels,
        kernel=KernelSpec(mode, R1, R2, R, q),
        droplets=droplets,
        substrate=substrate,
        area=area,
        solver=SolverSpec(comparison, band, mu_tol, redist),
        reference=ReferenceSpec(kind, markers, center_x),
        output_dir=Path(directory).expanduser() if directory else None,
        seed=seed,
        energy_every=energy_every,
        raw=cfg,
        **fns,
    )
    return config, []


def load_config_dict(raw: dict) -> ExperimentConfig:
    config, errors = validate_config(raw)
    if errors:
        raise ConfigError("Invalid configuration:\n• " + "\n• ".join(errors))
    return config


def load_config(name_or_path: str | Path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Load a config file (or bundled config by name), apply overrides, validate."""
    path = resolve_config_path(name_or_path)
    raw = load_yaml_config(path)
    raw = apply_overrides(raw, overrides)
    raw.setdefault("output", {})
    if isinstance(raw["output"], dict):
        raw["output"].setdefault("name", path.stem)
    return load_config_dict(raw)
