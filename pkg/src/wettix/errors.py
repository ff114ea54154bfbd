# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""
wettix.errors

Custom exception classes used across the wettix package.

Everything under :class:`ConfigError` maps to CLI exit code 2, everything under
:class:`SolverError` to exit code 3.
"""


class ConfigError(Exception):
    """Raised when a config file, an override or a derived model object is invalid."""
    pass


class PositivityViolation(ConfigError):
    """Raised when a two-circle kernel would carry a negative weight."""

    def __init__(self, theta: float, r_max_bound: float, r_min_bound: float, detail: str = ""):
        self.theta = theta
        self.r_max_bound = r_max_bound
        self.r_min_bound = r_min_bound
        msg = (
            f"negative kernel weight at theta={theta:.6g}; positivity needs "
            f"max(R1, R2) > {r_max_bound:.6g} and min(R1, R2) < {r_min_bound:.6g}"
        )
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class SolverError(RuntimeError):
    """Raised when a time step or a reference computation cannot be completed."""
    pass


class MultiplierNotBracketed(SolverError):
    """Raised when the area multiplier cannot be bracketed around the target area."""

    def __init__(self, bracket: tuple[float, float], areas: tuple[float, float], target: float):
        self.bracket = bracket
        self.areas = areas
        self.target = target
        super().__init__(
            f"cannot bracket area {target:.6g}: a({bracket[0]:.6g})={areas[0]:.6g}, "
            f"a({bracket[1]:.6g})={areas[1]:.6g}"
        )


class NoInterface(SolverError):
    """Raised when a field has no zero crossing to contour or redistance."""
    pass


class OracleBreakdown(SolverError):
    """Raised when the front-tracking reference loses validity."""
    pass


class NoEquilibriumShape(SolverError):
    """Raised when the Winterbottom truncation misses the Wulff shape (full wetting or dewetting)."""
    pass


class PreconditionViolation(SolverError):
    """Raised when an operation is applied outside its domain (e.g. a decision at a solid node)."""
    pass
