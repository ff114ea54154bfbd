#!/usr/bin/env python3
"""
Run the full-scale refinement ladders behind the convergence tables.

Each bundled ladder config is extended by two more levels (steps and 1/dx doubled twice,
up to n=3200) and run with `wettix.harness.converge`. The errors of every study end up
in <output>/<config>/errors.csv and a summary is printed at the end:

    tools/full_scale_tables.py -o ~/wettix-tables -j 0
    tools/full_scale_tables.py prescribed_m1 parabola_m1 --extra-levels 0

Expect hours per ladder at the finest levels; this is not part of the test suite.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from wettix.config import load_config
from wettix.dumps import output_root
from wettix.errors import ConfigError, SolverError
from wettix.harness import converge

LADDERS = [
    "triangle_induced",
    "prescribed_m1",
    "prescribed_m2",
    "parabola_m1",
    "parabola_m2",
    "parabola_offset",
    "sinusoid_m1",
    "sinusoid_m2",
]


def extended_levels(levels, extra: int) -> list:
    out = [list(lv) for lv in levels]
    for _ in range(extra):
        s, m = out[-1]
        out.append([2 * s, 2 * m])
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description="Run full-scale convergence ladders.")
    p.add_argument("configs", nargs="*", default=LADDERS, help="Bundled ladder configs (default: all).")
    p.add_argument("-o", "--output", type=Path, help="Output directory (default: the wettix output root).")
    p.add_argument("-j", "--jobs", type=int, default=0, help="Worker processes (0: CPU count - 1).")
    p.add_argument("--extra-levels", type=int, default=2, help="Levels appended to each ladder (default: 2).")
    args = p.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(message)s")
    root = output_root(args.output) / "full_scale"

    summary = []
    for name in args.configs:
        try:
            base = load_config(name)
            levels = extended_levels(base.levels, args.extra_levels)
            cfg = load_config(name, [f"time.levels={levels}"])
            res = converge(cfg, root / name, jobs=args.jobs, progress=True)
        except (ConfigError, SolverError) as e:
            logging.error("ERROR in %s: %s", name, e)
            summary.append((name, None, None))
            continue
        summary.append((name, res.rows, res.slope))

    print(f"\n{'config':<18} {'steps':>6} {'1/dx':>6} {'L1':>12} {'order':>7}")
    for name, rows, slope in summary:
        if rows is None:
            print(f"{name:<18} failed")
            continue
        for r in rows:
            order = "" if r.order is None else f"{r.order:.2f}"
            print(f"{name:<18} {r.steps:>6} {r.inv_dx:>6} {r.l1:>12.5g} {order:>7}")
        print(f"{name:<18} slope {'' if slope is None else f'{slope:.4f}'}")
    return 0 if all(rows is not None for _, rows, _ in summary) else 1


if __name__ == "__main__":
    sys.exit(main())
