# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.dumps

Files of a run directory:

- ``*.fld``: an ASCII header (``wettix-fld 1``, ``n``, ``dx``, ``name``, one per line) followed by
  n·n little-endian float64 values in row-major (iy, ix) order.
- ``*.xy``: polylines as ``x y`` rows, one block per polyline, each block opened by a
  ``# closed`` or ``# open`` line.
- CSV logs written row by row and flushed, so a failed run keeps everything logged so far.
- ``config.snapshot`` (resolved configuration) and ``metadata.yaml`` (kernel diagnostics).

The default output root is ``$WETTIX_OUT`` or ``platformdirs.user_data_path("wettix")/"runs"``.
"""

from __future__ import annotations

import csv
import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
import yaml
from platformdirs import user_data_path

from .errors import ConfigError
from .fields import Grid2D, Polyline, ScalarField

logger = logging.getLogger(__name__)

APP_NAME = "wettix"
ENV_OUT = "WETTIX_OUT"
_FLD_MAGIC = "wettix-fld 1"

STEPS_HEADER = ("step", "mu", "area", "bisect_iters", "max_dphi")
ENERGY_HEADER = ("step", "mu", "energy")
COMPONENTS_HEADER = ("step", "time", "components")
ERRORS_HEADER = ("steps", "inv_dx", "l1", "linf", "order")


# ---------------------------------------------------------------------------
# Output locations
# ---------------------------------------------------------------------------


def output_root(explicit: Optional[Path] = None) -> Path:
    """``explicit``, else ``$WETTIX_OUT``, else the per-user data directory."""
    if explicit is not None:
        return Path(explicit).expanduser()
    env = os.environ.get(ENV_OUT)
    if env:
        return Path(env).expanduser()
    return user_data_path(APP_NAME) / "runs"


def new_run_dir(root: Path, name: str) -> Path:
    """Create ``root/<name>-<timestamp>`` (with a numeric suffix if it already exists)."""
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    base = Path(root) / f"{name}-{stamp}"
    path, k = base, 1
    while path.exists():
        k += 1
        path = base.with_name(f"{base.name}-{k}")
    path.mkdir(parents=True)
    return path


def time_tag(t: float) -> str:
    """File-name tag of a time, e.g. 0.0125 -> 'T0.0125'."""
    return f"T{t:.6g}"


# ---------------------------------------------------------------------------
# Fields and contours
# ---------------------------------------------------------------------------


def write_field(path: Path, field: ScalarField) -> Path:
    path = Path(path)
    header = f"{_FLD_MAGIC}\nn {field.grid.n}\ndx {field.grid.dx!r}\nname {field.name}\n"
    with path.open("wb") as f:
        f.write(header.encode("ascii"))
        f.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    return path


def read_field(path: Path) -> ScalarField:
    path = Path(path)
    try:
        with path.open("rb") as f:
            lines = [f.readline().decode("ascii").strip() for _ in range(4)]
            payload = f.read()
    except OSError as e:
        raise ConfigError(f"Cannot read field file {path}:\n{e}") from e
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path} is not a wettix field file") from e
    if lines[0] != _FLD_MAGIC:
        raise ConfigError(f"{path} is not a wettix field file")
    try:
        meta = dict(line.split(" ", 1) for line in lines[1:])
        n = int(meta["n"])
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{path} has a malformed header") from e
    values = np.frombuffer(payload, dtype="<f8")
    if values.size != n * n:
        raise ConfigError(f"{path} holds {values.size} values, header says {n}x{n}")
    return ScalarField(Grid2D(n), values.reshape(n, n), meta.get("name", "phi"))


def write_polylines(path: Path, polylines: Sequence[Polyline]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        for i, p in enumerate(polylines):
            if i:
                f.write("\n")
            f.write("# closed\n" if p.closed else "# open\n")
            for x, y in p.points:
                f.write(f"{float(x)!r} {float(y)!r}\n")
    return path


def read_polylines(path: Path) -> List[Polyline]:
    out: List[Polyline] = []
    closed, rows = False, []

    def flush():
        if rows:
            out.append(Polyline(np.array(rows), closed=closed))

    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                flush()
                closed, rows = s[1:].strip() == "closed", []
                continue
            x, y = s.split()
            rows.append((float(x), float(y)))
    flush()
    return out


# ---------------------------------------------------------------------------
# CSV logs
# ---------------------------------------------------------------------------


class CsvLog:
    """Append-only CSV file with a fixed header; every row is flushed as it is written."""

    def __init__(self, path: Path, header: Sequence[str]):
        self.path = Path(path)
        self.header = tuple(header)
        self._fh = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(self.header)
        self._fh.flush()

    def write(self, *values) -> None:
        if len(values) != len(self.header):
            raise ValueError(f"{self.path.name}: expected {len(self.header)} values, got {len(values)}")
        self._writer.writerow(["" if v is None else _fmt(v) for v in values])
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "CsvLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def read_csv(path: Path) -> List[dict]:
    """Rows of a CSV written by this module (``#`` comment lines skipped)."""
    with Path(path).open("r", newline="", encoding="utf-8") as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))


def write_error_csv(path: Path, rows: Iterable, slope: Optional[float]) -> Path:
    """Rows with ``steps, inv_dx, l1, linf, order`` attributes, then ``# slope=<value>``."""
    path = Path(path)
    with CsvLog(path, ERRORS_HEADER) as log:
        for r in rows:
            log.write(r.steps, r.inv_dx, r.l1, r.linf, r.order)
    with path.open("a", encoding="utf-8") as f:
        f.write(f"# slope={'' if slope is None else repr(float(slope))}\n")
    return path


def read_slope(path: Path) -> Optional[float]:
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            if line.startswith("# slope="):
                value = line.split("=", 1)[1].strip()
                return float(value) if value else None
    return None


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with CsvLog(path, header) as log:
        for row in rows:
            log.write(*row)
    return Path(path)


# ---------------------------------------------------------------------------
# YAML side files
# ---------------------------------------------------------------------------


def write_yaml(path: Path, data: dict) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, sort_keys=False)
    return path


def write_snapshot(run_dir: Path, raw_config: dict) -> Path:
    return write_yaml(Path(run_dir) / "config.snapshot", raw_config)


def write_metadata(run_dir: Path, metadata: dict) -> Path:
    return write_yaml(Path(run_dir) / "metadata.yaml", metadata)
