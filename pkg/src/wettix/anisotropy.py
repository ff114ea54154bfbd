# wettix - Anisotropic wetting and dewetting by median-filter level sets
# Copyright (c) 2025 Nicholas G. Vlamis
# SPDX-License-Identifier: GPL-3.0-or-later
"""wettix.anisotropy

Surface tensions σ(θ) and mobilities m(θ) as closed-form, π-periodic functions of the
interface normal angle θ, plus the reference shapes built from them.

Responsibilities:
  1. Function families with exact derivatives (constant, square-root trig, even harmonics,
     induced mobility, shifted argument) and a small expression parser for config files.
  2. Sampled admissibility checks (positivity, convexity, triangle inequalities).
  3. Wulff boundaries, Winterbottom (truncated Wulff) equilibrium droplets and the
     contact-angle condition at a triple junction.

Purely functional module: every object is immutable and nothing here logs.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from shapely import affinity
from shapely.geometry import Polygon, box
from shapely.geometry.polygon import orient
from scipy.optimize import brentq

from .errors import ConfigError, NoEquilibriumShape
from .fields import Polyline

DENSE_SAMPLES = 4096


def sample_angles(n: int = DENSE_SAMPLES) -> np.ndarray:
    """Uniform angles θ_i = 2πi/n on [0, 2π)."""
    return 2.0 * np.pi * np.arange(n) / n


@dataclass(frozen=True)
class AnisotropyFn:
    """Base class for π-periodic functions of the normal angle.

    Subclasses implement :meth:`_eval` for derivative orders ``0..max_order``.
    The same families describe mobilities; see :data:`MobilityFn`.
    """

    max_order = 4

    def __call__(self, theta, order: int = 0):
        if not 0 <= order <= self.max_order:
            raise ConfigError(
                f"{type(self).__name__} provides derivatives up to order {self.max_order}, not {order}"
            )
        return self._eval(np.asarray(theta, dtype=float), order)

    def _eval(self, theta: np.ndarray, order: int):
        raise ConfigError(f"unknown anisotropy kind: {type(self).__name__}")

    def stiffness(self, theta):
        """σ + σ''."""
        return self(theta, 0) + self(theta, 2)


MobilityFn = AnisotropyFn


@dataclass(frozen=True)
class Constant(AnisotropyFn):
    c: float

    def _eval(self, theta, order):
        if order == 0:
            return np.full_like(theta, float(self.c))
        return np.zeros_like(theta)

    def __str__(self) -> str:
        return f"constant({self.c!r})"


@dataclass(frozen=True)
class SqrtTrig(AnisotropyFn):
    """√(1 + a·sin²(θ−φ0)) or √(1 + a·cos²(θ−φ0)).

    Both are written as √g with g = α + β·cos 2(θ−φ0), whose derivatives are trivial; the
    derivatives of √g follow from differentiating h² = g repeatedly.
    """

    a: float
    phase: float = 0.0
    trig: str = "sin"

    def _g(self, theta, order):
        alpha = 1.0 + 0.5 * self.a
        beta = -0.5 * self.a if self.trig == "sin" else 0.5 * self.a
        u = 2.0 * (theta - self.phase)
        out = beta * 2.0**order * np.cos(u + order * np.pi / 2)
        if order == 0:
            out = out + alpha
        return out

    def _eval(self, theta, order):
        g = [self._g(theta, k) for k in range(order + 1)]
        h0 = np.sqrt(g[0])
        if order == 0:
            return h0
        h1 = g[1] / (2 * h0)
        if order == 1:
            return h1
        h2 = (g[2] - 2 * h1**2) / (2 * h0)
        if order == 2:
            return h2
        h3 = (g[3] - 6 * h1 * h2) / (2 * h0)
        if order == 3:
            return h3
        return (g[4] - 6 * h2**2 - 8 * h1 * h3) / (2 * h0)

    def __str__(self) -> str:
        return f"sqrt_{self.trig}2(a={self.a!r}, phase={self.phase!r})"


@dataclass(frozen=True)
class Harmonics(AnisotropyFn):
    """c0 + Σ A_k cos(k(θ − φ_k)) with every k even."""

    c0: float
    terms: Tuple[Tuple[float, int, float], ...] = ()

    def __post_init__(self):
        terms = tuple((float(a), int(k), float(p)) for a, k, p in self.terms)
        for _, k, _ in terms:
            if k <= 0 or k % 2:
                raise ConfigError(f"harmonic order must be a positive even integer, got {k}")
        object.__setattr__(self, "terms", terms)

    def _eval(self, theta, order):
        out = np.full_like(theta, self.c0 if order == 0 else 0.0)
        for amp, k, phase in self.terms:
            out = out + amp * k**order * np.cos(k * (theta - phase) + order * np.pi / 2)
        return out

    def __str__(self) -> str:
        return f"harmonics(c0={self.c0!r}, terms={list(self.terms)!r})"


@dataclass(frozen=True)
class Induced(AnisotropyFn):
    """Mobility m = scale/(σ+σ'') induced by a single-circle kernel."""

    sigma: AnisotropyFn
    scale: float = 1.0
    max_order = 2

    def _eval(self, theta, order):
        s0 = self.sigma(theta, 0) + self.sigma(theta, 2)
        if order == 0:
            return self.scale / s0
        s1 = self.sigma(theta, 1) + self.sigma(theta, 3)
        if order == 1:
            return -self.scale * s1 / s0**2
        s2 = self.sigma(theta, 2) + self.sigma(theta, 4)
        return self.scale * (2 * s1**2 / s0**3 - s2 / s0**2)

    def __str__(self) -> str:
        return f"induced(sigma={self.sigma}, scale={self.scale!r})"


@dataclass(frozen=True)
class Shifted(AnisotropyFn):
    """θ ↦ base(θ + shift)."""

    base: AnisotropyFn
    shift: float

    @property
    def max_order(self):  # type: ignore[override]
        return self.base.max_order

    def _eval(self, theta, order):
        return self.base(theta + self.shift, order)

    def __str__(self) -> str:
        return f"shifted({self.base}, shift={self.shift!r})"


def evaluate(fn: AnisotropyFn, theta, order: int = 0):
    """σ, σ' or σ'' (or the mobility equivalents) in closed form."""
    if not isinstance(fn, AnisotropyFn):
        raise ConfigError(f"unknown anisotropy kind: {fn!r}")
    return fn(theta, order)


# ---------------------------------------------------------------------------
# Expression parsing
# ---------------------------------------------------------------------------

_NUMERIC_NAMES = {"pi": math.pi}
_NUMERIC_FUNCS = {"sqrt": math.sqrt, "cos": math.cos, "sin": math.sin}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def _number(node: ast.AST) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NUMERIC_NAMES:
        return _NUMERIC_NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _number(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_number(node.left), _number(node.right))
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _NUMERIC_FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _NUMERIC_FUNCS[node.func.id](_number(node.args[0]))
    raise ConfigError(f"not a number: {ast.unparse(node)}")


def _terms(node: ast.AST) -> tuple:
    if not isinstance(node, (ast.List, ast.Tuple)):
        raise ConfigError("harmonic terms must be a list of (A, k, phase) tuples")
    out = []
    for item in node.elts:
        if not isinstance(item, (ast.List, ast.Tuple)) or len(item.elts) != 3:
            raise ConfigError(f"harmonic term must be (A, k, phase): {ast.unparse(item)}")
        amp, k, phase = (_number(e) for e in item.elts)
        if k != int(k):
            raise ConfigError(f"harmonic order must be an integer: {k}")
        out.append((amp, int(k), phase))
    return tuple(out)


def _build(node: ast.AST) -> AnisotropyFn:
    if not isinstance(node, ast.Call) or (
        isinstance(node.func, ast.Name) and node.func.id in _NUMERIC_FUNCS
    ):
        return Constant(_number(node))
    if not isinstance(node.func, ast.Name):
        raise ConfigError(f"unknown anisotropy kind: {ast.unparse(node.func)}")
    kind = node.func.id
    kw = {k.arg: k.value for k in node.keywords}
    args = list(node.args)

    def take(name: str, default=None, position: int | None = None):
        if name in kw:
            return kw.pop(name)
        if position is not None and position < len(args):
            return args[position]
        if default is None:
            raise ConfigError(f"{kind}(...) is missing argument {name!r}")
        return default

    if kind == "constant":
        fn: AnisotropyFn = Constant(_number(take("c", position=0)))
    elif kind in ("sqrt_sin2", "sqrt_cos2"):
        a = _number(take("a", position=0))
        phase = _number(take("phase", ast.Constant(0.0), position=1))
        fn = SqrtTrig(a=a, phase=phase, trig=kind[5:8])
    elif kind == "harmonics":
        c0 = _number(take("c0", position=0))
        fn = Harmonics(c0=c0, terms=_terms(take("terms", ast.List(elts=[]), position=1)))
    elif kind == "induced":
        sigma = _build(take("sigma", position=0))
        fn = Induced(sigma=sigma, scale=_number(take("scale", ast.Constant(1.0), position=1)))
    elif kind == "shifted":
        base = _build(take("base", position=0))
        fn = Shifted(base=base, shift=_number(take("shift", position=1)))
    else:
        raise ConfigError(f"unknown anisotropy kind: {kind}")
    if kw:
        raise ConfigError(f"{kind}(...) got unexpected arguments: {', '.join(sorted(kw))}")
    return fn


def parse_anisotropy(text) -> AnisotropyFn:
    """Parse a config expression such as ``sqrt_sin2(a=1.0, phase=pi/3)`` or ``1.5``."""
    if isinstance(text, AnisotropyFn):
        return text
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return Constant(float(text))
    if not isinstance(text, str):
        raise ConfigError(f"cannot parse anisotropy from {text!r}")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as e:
        raise ConfigError(f"cannot parse anisotropy expression {text!r}: {e.msg}") from e
    return _build(tree.body)


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------


def convexity_margin(fn: AnisotropyFn, samples: int = DENSE_SAMPLES) -> float:
    """Minimum of σ + σ'' over ``samples`` uniform angles."""
    if samples < 360:
        raise ConfigError(f"convexity check needs at least 360 samples, got {samples}")
    return float(np.min(fn.stiffness(sample_angles(samples))))


def check_tension(fn: AnisotropyFn, name: str = "sigma", samples: int = DENSE_SAMPLES) -> None:
    """Reject surface tensions that are not positive and convex on the sample grid."""
    theta = sample_angles(samples)
    values = fn(theta)
    if not np.all(np.isfinite(values)) or np.min(values) <= 0:
        i = int(np.argmin(np.where(np.isfinite(values), values, -np.inf)))
        raise ConfigError(f"{name} must be positive everywhere; {name}({theta[i]:.6g}) = {values[i]:.6g}")
    margin = convexity_margin(fn, samples)
    if margin <= 0:
        raise ConfigError(f"{name} is not convex: min of sigma + sigma'' is {margin:.6g}")


def check_mobility(fn: MobilityFn, name: str = "m", samples: int = DENSE_SAMPLES) -> None:
    theta = sample_angles(samples)
    values = fn(theta)
    if not np.all(np.isfinite(values)) or np.min(values) <= 0:
        raise ConfigError(f"{name} must be positive everywhere; min is {np.nanmin(values):.6g}")


def admissible_radii(sigma: AnisotropyFn, m: MobilityFn, samples: int = DENSE_SAMPLES) -> tuple[float, float]:
    """(lower, upper) bounds: two circles with min R below ``lower`` and max R above ``upper``
    give a positive kernel."""
    theta = sample_angles(samples)
    q = 0.25 * m(theta) * sigma.stiffness(theta)
    return float(np.sqrt(q.min())), float(np.sqrt(q.max()))


@dataclass(frozen=True)
class TriangleReport:
    triangle_ok: bool
    strong_triangle: bool
    worst_angle: float


@dataclass(frozen=True)
class SurfaceTensionTriple:
    sigma_VL: AnisotropyFn
    sigma_LS: AnisotropyFn
    sigma_VS: AnisotropyFn
    m_VL: MobilityFn
    m_LS: MobilityFn
    m_VS: MobilityFn

    def check(self, samples: int = DENSE_SAMPLES) -> TriangleReport:
        """Validate every function, then the pointwise triangle inequality.

        Raises :class:`ConfigError` when the plain triangle inequality fails; the strong
        (stiffness) version is only reported.
        """
        for name in ("sigma_VL", "sigma_LS", "sigma_VS"):
            check_tension(getattr(self, name), name, samples)
        for name in ("m_VL", "m_LS", "m_VS"):
            check_mobility(getattr(self, name), name, samples)

        theta = sample_angles(samples)
        a, b, c = (f(theta) for f in (self.sigma_VL, self.sigma_LS, self.sigma_VS))
        slack = np.minimum.reduce([a + b - c, a + c - b, b + c - a])
        if slack.min() < -1e-14:
            i = int(np.argmin(slack))
            raise ConfigError(f"surface tensions violate the triangle inequality at theta={theta[i]:.6g}")
        sa, sb, sc = (f.stiffness(theta) for f in (self.sigma_VL, self.sigma_LS, self.sigma_VS))
        strong = np.minimum.reduce([sa + sb - sc, sa + sc - sb, sb + sc - sa])
        return TriangleReport(
            triangle_ok=True,
            strong_triangle=bool(strong.min() >= -1e-14),
            worst_angle=float(theta[int(np.argmin(strong))]),
        )


# ---------------------------------------------------------------------------
# Reference shapes
# ---------------------------------------------------------------------------


def wulff_boundary(sigma: AnisotropyFn, n: int = DENSE_SAMPLES) -> Polyline:
    """Closed, positively oriented Wulff boundary sampled at n uniform parameter angles.

    x(θ) = −σ(θ−π/2) sinθ − σ'(θ−π/2) cosθ,  y(θ) = σ(θ−π/2) cosθ − σ'(θ−π/2) sinθ.
    """
    if convexity_margin(sigma, max(n, 360)) <= 0:
        raise ConfigError("Wulff boundary requires a convex surface tension")
    theta = sample_angles(n)
    s0 = sigma(theta - np.pi / 2, 0)
    s1 = sigma(theta - np.pi / 2, 1)
    x = -s0 * np.sin(theta) - s1 * np.cos(theta)
    y = s0 * np.cos(theta) - s1 * np.sin(theta)
    return Polyline(np.column_stack([x, y]), closed=True)


def winterbottom_shape(
    sigma_VL: AnisotropyFn,
    sigma_LS: float,
    sigma_VS: float,
    area: float,
    substrate_height: float,
    center_x: float = 0.5,
    n: int = DENSE_SAMPLES,
) -> tuple[Polyline, float]:
    """Equilibrium droplet of the given area on the line y = substrate_height.

    The unit Wulff shape is cut at y = σ_VS − σ_LS and the part above is kept. Because
    the cut scales with the shape, the area of the truncated region is λ² times the unit
    one, so λ is solved in closed form. The returned polygon is translated so its flat face
    lies on the substrate and its centroid sits at ``center_x``.
    """
    if area <= 0:
        raise ConfigError(f"droplet area must be positive, got {area}")
    wulff = Polygon(wulff_boundary(sigma_VL, n).points)
    h = float(sigma_VS) - float(sigma_LS)
    minx, miny, maxx, maxy = wulff.bounds
    if not miny < h < maxy:
        raise NoEquilibriumShape(
            f"truncation height {h:.6g} outside the Wulff shape ({miny:.6g}, {maxy:.6g})"
        )
    cut = wulff.intersection(box(minx - 1.0, h, maxx + 1.0, maxy + 1.0))
    lam = math.sqrt(area / cut.area)
    shape = affinity.scale(cut, lam, lam, origin=(0.0, 0.0))
    shape = affinity.translate(shape, center_x - shape.centroid.x, substrate_height - lam * h)
    shape = orient(shape, 1.0)
    return Polyline(np.asarray(shape.exterior.coords)[:-1], closed=True), lam


def contact_condition_residual(sigma_VL: AnisotropyFn, theta: float, sigma_LS: float, sigma_VS: float) -> float:
    """σ_VL(θ)cosθ − σ_VL'(θ)sinθ + σ_LS − σ_VS."""
    return float(
        sigma_VL(theta, 0) * np.cos(theta) - sigma_VL(theta, 1) * np.sin(theta) + sigma_LS - sigma_VS
    )


def contact_angle(sigma_VL: AnisotropyFn, sigma_LS: float, sigma_VS: float) -> float:
    """Root of the contact condition on (0, π).

    The residual decreases strictly on (0, π) for convex σ (its derivative is −(σ+σ'')sinθ),
    so the root is unique when it exists.
    """

    def f(t: float) -> float:
        return contact_condition_residual(sigma_VL, t, sigma_LS, sigma_VS)

    lo, hi = 0.0, math.pi
    if f(lo) * f(hi) > 0:
        raise NoEquilibriumShape("contact condition has no root in (0, pi)")
    return float(brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
