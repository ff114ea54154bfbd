# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""
wettix.cli
Command-line entry point binding experiment configs to the harness.

Flow:
1) Parse arguments (subcommand, config path or bundled name, --set overrides)
2) Configure logging
3) Load and validate the config
4) Run the requested harness operation and print where its outputs went

Exit codes: 0 success, 2 configuration error, 3 solver error, 1 anything else.

Entrypoint:
- main() -> int
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List

from . import __version__
from .config import bundled_configs, load_config
from .dumps import read_field, write_polylines
from .errors import ConfigError, SolverError
from .fields import extract_contour
from .harness import converge, equilibrium, kernel_dump, mobility_insensitivity_study, run

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_EPILOG = """\
Output files (CSV columns):
  steps.csv       step, mu, area, bisect_iters, max_dphi
                  (multiplier, achieved subgrid area, bisections, largest level-set change)
  energy.csv      step, mu, energy   (nonlocal interfacial energy of the thresholded phases)
  components.csv  step, time, components   (connected liquid regions on the torus)
  errors.csv      steps, inv_dx, l1, linf, order   followed by '# slope=<log-log slope>'
  equilibrium.csv l1, linf
  kernel_XX.csv   theta, w1[, w2]   (kernel weights per circle, XX in VL, LS, VS)
  insensitivity.csv  steps, inv_dx, l1_first, l1_second, rel_diff
Fields are written as phiL_T<t>.fld / phiV_T<t>.fld, contours as contour_T<t>.xy.

The output root is -o/--output, else output.directory, else $WETTIX_OUT, else a per-user
data directory. Configs are YAML files or bundled names: {bundled}
"""


def configure_logging(quiet: bool) -> None:
    """
    Configure logging, using warning level for quiet mode and info level otherwise.
    """
    if quiet:
        level = logging.WARNING
    else:
        level = logging.INFO

    logging.basicConfig(level=level, format="%(message)s")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", help="Reduce verbosity and hide progress bars.", action="store_true")
    common.add_argument(
        "-o",
        "--output",
        type=Path,
        help="Output directory (default: output.directory, $WETTIX_OUT or the user data dir).",
    )

    with_config = argparse.ArgumentParser(add_help=False)
    with_config.add_argument("config", help="Path to a YAML config, or the name of a bundled config.")
    with_config.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override a config value (repeatable); the value is parsed as YAML.",
    )

    jobs = argparse.ArgumentParser(add_help=False)
    jobs.add_argument(
        "-j",
        "--jobs",
        type=int,
        default=1,
        help="Worker processes for refinement ladders (0: CPU count - 1, default: 1).",
    )

    parser = argparse.ArgumentParser(
        prog="wettix",
        description="Simulate anisotropic wetting and dewetting with median-filter level sets.",
        epilog=_EPILOG.format(bundled=", ".join(bundled_configs()) or "none"),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[common, with_config], help="Run one experiment to its final time.")
    sub.add_parser(
        "converge", parents=[common, with_config, jobs], help="Run the refinement ladder and write errors.csv."
    )
    sub.add_parser("kernel", parents=[common, with_config], help="Write the kernel weight tables.")
    sub.add_parser(
        "equilibrium", parents=[common, with_config], help="Run and compare with the Winterbottom shape."
    )
    ins = sub.add_parser(
        "insensitivity",
        parents=[common, jobs],
        help="Compare two ladders that differ only in the solid-vapor mobility.",
    )
    ins.add_argument("first", help="Config with the first solid-vapor mobility.")
    ins.add_argument("second", help="Config with the second solid-vapor mobility.")
    ins.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")

    con = sub.add_parser("contour", parents=[common], help="Extract the contour of a .fld file at a level.")
    con.add_argument("field", type=Path, help="Field file written by a run (.fld).")
    con.add_argument("level", type=float, help="Contour level.")
    return parser


def parse_args(argv: List[str] | None = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _dispatch(args: argparse.Namespace) -> int:
    progress = not args.quiet
    if args.command == "contour":
        field = read_field(args.field)
        polylines = extract_contour(field, args.level)
        out = args.output or args.field.with_name(f"{args.field.stem}_level{args.level:g}.xy")
        write_polylines(out, polylines)
        logging.info("Wrote %d polyline(s).", len(polylines))
        print(out)
        return EXIT_OK

    if args.command == "insensitivity":
        first = load_config(args.first, args.overrides)
        second = load_config(args.second, args.overrides)
        res = mobility_insensitivity_study(first, second, args.output, args.jobs, progress)
        print(res.study_dir)
        return EXIT_OK

    cfg = load_config(args.config, args.overrides)
    if args.command == "run":
        print(run(cfg, args.output, progress).run_dir)
    elif args.command == "converge":
        print(converge(cfg, args.output, args.jobs, progress).study_dir)
    elif args.command == "kernel":
        print(kernel_dump(cfg, args.output))
    elif args.command == "equilibrium":
        res = equilibrium(cfg, args.output, progress)
        print(f"{res.l1!r} {res.linf!r}")
        logging.info("Outputs in %s", res.run_dir)
    return EXIT_OK


def main(argv: List[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help/--version and 2 for usage errors
        return int(e.code or 0)

    configure_logging(args.quiet)

    try:
        return _dispatch(args)
    except ConfigError as e:
        logging.error("ERROR: %s", e)
        return EXIT_CONFIG
    except SolverError as e:
        logging.error("ERROR: %s", e)
        return EXIT_SOLVER
    except KeyboardInterrupt:
        logging.error("Interrupted.")
        return EXIT_FAILURE
    except Exception as e:
        logging.exception("ERROR: unexpected failure: %s", e)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
