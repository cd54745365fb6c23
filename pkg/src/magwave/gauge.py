"""Magnetic fields and vector potentials.

Two potentials are provided: the transversal gauge of a bounded,
compactly supported field about ``p = (0, y0)``,

    a1 = -(y - y0) * int_0^1 B(u x, u (y - y0) + y0) u du,
    a2 =  x        * int_0^1 B(u x, u (y - y0) + y0) u du,

and the Aharonov-Bohm potential ``Phi * (-(y - y0), x) / |(x, y - y0)|^2``
of a flux line through ``p``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import EvalAtSingularity, IntegerFlux, RegionContainsSingularity

FIELD_KINDS = ("zero", "constant", "bump", "constant_patch", "custom")


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class MagneticField:
    """Scalar magnetic field ``alpha * B(x, y)``.

    kind
        ``zero``; ``constant`` (``B0`` everywhere); ``bump``
        (``B0 * (1 - rho^2/R_B^2)^2`` for ``rho < R_B``); ``constant_patch``
        (``B0`` for ``rho <= R_in``, C^1 smoothstep taper to zero at
        ``R_B``); ``custom`` (callable ``func`` supported in a disk of
        radius ``R_B`` about ``center``).
    """

    kind: str = "zero"
    B0: float = 0.0
    R_B: float = 1.0
    R_in: float = 0.0
    center: tuple[float, float] = (0.0, np.pi / 2)
    y0: float = np.pi / 2
    alpha: float = 1.0
    func: Callable | None = dc_field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind in ("bump", "constant_patch", "custom") and not self.R_B > 0:
            raise ValueError("support radius R_B must be positive")
        if self.kind == "constant_patch" and not 0 <= self.R_in < self.R_B:
            raise ValueError("constant_patch needs 0 <= R_in < R_B")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom field needs func")
        if not 0 < self.y0 < np.pi:
            raise ValueError("y0 must lie in (0, pi)")

    @property
    def p(self) -> tuple[float, float]:
        return (0.0, self.y0)

    def base(self, x, y):
        """Field with multiplier 1."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.kind == "zero":
            return np.zeros(np.broadcast(x, y).shape)
        if self.kind == "constant":
            return np.full(np.broadcast(x, y).shape, float(self.B0))
        rho = np.hypot(x - self.center[0], y - self.center[1])
        if self.kind == "bump":
            t = rho / self.R_B
            return np.where(t < 1, self.B0 * (1 - t * t) ** 2, 0.0)
        if self.kind == "constant_patch":
            t = (rho - self.R_in) / (self.R_B - self.R_in)
            return self.B0 * (1.0 - _smoothstep(t))
        return np.where(rho < self.R_B, self.func(x, y), 0.0)

    def __call__(self, x, y):
        return self.alpha * self.base(x, y)

    def scaled(self, alpha: float) -> "MagneticField":
        return replace(self, alpha=self.alpha * alpha)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.B0 == 0 and self.kind != "custom" or self.alpha == 0

    @property
    def centered(self) -> bool:
        return np.allclose(self.center, self.p, rtol=0, atol=1e-15)

    @property
    def support_radius(self) -> float:
        """Radius about ``p`` outside which the field vanishes."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return np.inf
        off = float(np.hypot(self.center[0], self.center[1] - self.y0))
        return off + self.R_B

    @property
    def radial_breaks(self) -> tuple[float, ...]:
        """Radii about ``p`` where the field loses smoothness (centered fields)."""
        if not self.centered or self.kind in ("zero", "constant"):
            return ()
        if self.kind == "constant_patch":
            return tuple(r for r in (self.R_in, self.R_B) if r > 0)
        return (self.R_B,)

    @property
    def circle_radii(self) -> tuple[float, ...]:
        """Radii about ``center`` where the field loses smoothness."""
        if self.kind in ("zero", "constant"):
            return ()
        if self.kind == "constant_patch":
            return tuple(r for r in (self.R_in, self.R_B) if r > 0)
        return (self.R_B,)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "B0": self.B0, "R_B": self.R_B, "R_in": self.R_in,
                "center": list(self.center), "y0": self.y0, "alpha": self.alpha}


def reference_field(alpha: float = 1.0) -> MagneticField:
    """Bounded-field reference: a ``B0 = 0.5`` patch of radius 1 about ``p``,
    tapering to zero at radius 1.5."""
    return MagneticField("constant_patch", B0=0.5, R_B=1.5, R_in=1.0,
                         center=(0.0, np.pi / 2), y0=np.pi / 2, alpha=alpha)


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class VectorPotential:
    """Evaluator for ``(a1, a2)``.

    kind is ``transversal`` (built from ``field``), ``aharonov_bohm``
    (flux ``Phi`` through ``(0, y0)``) or ``custom`` (callable ``func``
    returning ``(a1, a2)``, used for gauge tests).
    """

    kind: str
    field: MagneticField | None = None
    quad_order: int = 16
    subpanels: int = 1
    Phi: float = 0.0
    y0: float = np.pi / 2
    func: Callable | None = dc_field(default=None, compare=False, repr=False)

    @property
    def p(self) -> tuple[float, float]:
        return (0.0, self.y0)

    @property
    def is_zero(self) -> bool:
        return self.kind == "transversal" and self.field.is_zero

    def __call__(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        x, y = np.broadcast_arrays(x, y)
        if self.kind == "transversal":
            if self.is_zero:
                return np.zeros(x.shape), np.zeros(x.shape)
            s = self.field.alpha * _radial_moment(self.field, x, y - self.y0,
                                                  self.quad_order, self.subpanels)
            return -(y - self.y0) * s, x * s
        if self.kind == "aharonov_bohm":
            dy = y - self.y0
            r2 = x * x + dy * dy
            if np.any(r2 < 1e-24):
                raise EvalAtSingularity(f"potential evaluated within 1e-12 of p = (0, {self.y0})")
            return -self.Phi * dy / r2, self.Phi * x / r2
        a1, a2 = self.func(x, y)
        return np.broadcast_to(np.asarray(a1, float), x.shape), np.broadcast_to(np.asarray(a2, float), x.shape)

    def scaled(self, alpha: float) -> "VectorPotential":
        if self.kind == "transversal":
            return replace(self, field=self.field.scaled(alpha))
        if self.kind == "aharonov_bohm":
            return replace(self, Phi=self.Phi * alpha)
        f = self.func
        return replace(self, func=lambda x, y: tuple(alpha * np.asarray(c) for c in f(x, y)))

    @property
    def flux_at_infinity(self) -> float:
        """Total flux divided by ``2 pi`` (far-field ``r |A|``)."""
        if self.kind == "aharonov_bohm":
            return self.Phi
        if self.kind == "transversal":
            R = self.field.support_radius
            if not np.isfinite(R):
                return np.inf
            return float(ball_flux(self.field, R).phi) if R > 0 else 0.0
        return np.nan

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "y0": self.y0}
        if self.kind == "transversal":
            d.update(field=self.field.to_dict(), quad_order=self.quad_order, subpanels=self.subpanels)
        elif self.kind == "aharonov_bohm":
            d["Phi"] = self.Phi
        return d


def _radial_moment(B: MagneticField, x, dy, order: int, subpanels: int):
    """``int_0^1 B(u x, u dy + y0) u du`` by composite Gauss-Legendre.

    Each ray is split exactly where it crosses the circles on which the
    field loses smoothness (support edge, plateau edge), so points far from
    the field are integrated as accurately as near ones.
    """
    nodes, weights = leggauss(order)
    cuts = [np.zeros_like(x), np.ones_like(x)]
    cx, cy = B.center[0], B.center[1] - B.y0
    vv = x * x + dy * dy
    vc = x * cx + dy * cy
    for rho in B.circle_radii:
        disc = vc * vc - vv * (cx * cx + cy * cy - rho * rho)
        ok = (disc > 0) & (vv > 0)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        safe = np.where(vv > 0, vv, 1.0)
        for root in ((vc - sq) / safe, (vc + sq) / safe):
            cuts.append(np.where(ok, np.clip(root, 0.0, 1.0), 0.0))
    cuts = np.sort(np.stack(cuts, axis=-1), axis=-1)
    total = np.zeros_like(x)
    for j in range(cuts.shape[-1] - 1):
        lo, hi = cuts[..., j], cuts[..., j + 1]
        for k in range(subpanels):
            a = lo + (hi - lo) * k / subpanels
            b = lo + (hi - lo) * (k + 1) / subpanels
            half = 0.5 * (b - a)
            mid = 0.5 * (b + a)
            u = mid[..., None] + half[..., None] * nodes
            vals = B.base(u * x[..., None], u * dy[..., None] + B.y0)
            total += half * np.sum(weights * vals * u, axis=-1)
    return total


def transversal_potential(B: MagneticField, quad_order: int = 16, subpanels: int = 1) -> VectorPotential:
    return VectorPotential("transversal", field=B, quad_order=quad_order,
                           subpanels=subpanels, y0=B.y0)


def ab_potential(Phi: float, p: tuple[float, float] = (0.0, np.pi / 2)) -> VectorPotential:
    if p[0] != 0.0 or not 0 < p[1] < np.pi:
        raise ValueError("p must be (0, y0) with y0 in (0, pi)")
    if abs(Phi - np.round(Phi)) == 0.0:
        raise IntegerFlux(f"flux {Phi} is an integer")
    return VectorPotential("aharonov_bohm", Phi=float(Phi), y0=float(p[1]))


def zero_potential(y0: float = np.pi / 2) -> VectorPotential:
    return transversal_potential(MagneticField("zero", y0=y0))


def custom_potential(func: Callable, y0: float = np.pi / 2) -> VectorPotential:
    return VectorPotential("custom", func=func, y0=y0)


# ---------------------------------------------------------------------------
# flux and diagnostics


class FluxValue(NamedTuple):
    phi: np.ndarray
    dphi: np.ndarray


def ball_flux(B: MagneticField, r, n_radial: int = 16, n_theta: int = 256) -> FluxValue:
    """Flux through the disk of radius ``r`` about ``p``, divided by ``2 pi``.

    Also returns the derivative ``r * mean_theta B(p + r e_theta)``.
    """
    r = np.atleast_1d(np.asarray(r, float))
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    nodes, weights = leggauss(n_radial)
    if B.kind in ("zero", "constant") or (B.kind in ("bump", "constant_patch") and B.centered):
        n_theta = 1  # the field is radial about p
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    ct, st = np.cos(th), np.sin(th)

    def ring_mean(rho):
        rho = np.asarray(rho, float)
        return np.mean(B(rho[..., None] * ct, B.y0 + rho[..., None] * st), axis=-1)

    phi = np.empty_like(r)
    for i, ri in enumerate(r):
        cuts = [0.0] + [b for b in B.radial_breaks if b < ri] + [ri]
        s = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi <= lo:
                continue
            rho = 0.5 * (hi + lo) + 0.5 * (hi - lo) * nodes
            s += 0.5 * (hi - lo) * np.sum(weights * rho * ring_mean(rho))
        phi[i] = s
    dphi = r * ring_mean(r)
    if phi.size == 1:
        return FluxValue(float(phi[0]), float(dphi[0]))
    return FluxValue(phi, dphi)


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float
    exclude_radius: float = 0.0


@dataclass(frozen=True)
class Annulus:
    r1: float
    r2: float


class SupNorms(NamedTuple):
    a1: float
    a2: float
    raw_a1: float
    raw_a2: float


def _region_points(A: VectorPotential, region, n: int):
    py = A.y0
    if isinstance(region, Annulus):
        if A.kind == "aharonov_bohm" and region.r1 <= 0:
            raise RegionContainsSingularity("annulus must exclude p")
        r = np.linspace(region.r1, region.r2, n)
        th = np.linspace(0, 2 * np.pi, 4 * n - 3)
        R, T = np.meshgrid(r, th, indexing="ij")
        return R * np.cos(T), py + R * np.sin(T)
    X, Y = np.meshgrid(np.linspace(region.x0, region.x1, n),
                       np.linspace(region.y0, region.y1, n), indexing="ij")
    if A.kind == "aharonov_bohm":
        rho = np.hypot(X, Y - py)
        if region.exclude_radius <= 0:
            inside = region.x0 <= 0 <= region.x1 and region.y0 <= py <= region.y1
            if inside or rho.min() < 1e-12:
                raise RegionContainsSingularity("region contains the flux point p")
        keep = rho >= region.exclude_radius
        return X[keep], Y[keep]
    return X, Y


def sup_norm_estimate(A: VectorPotential, region, n: int = 101, slack: float = 1.05) -> SupNorms:
    """Sampled maxima of ``|a1|`` and ``|a2|`` over a bounded region.

    Two nested samplings are combined by one Richardson step; the reported
    values carry the multiplicative ``slack``. Not a certified bound.
    """
    if A.is_zero:
        return SupNorms(0.0, 0.0, 0.0, 0.0)
    out = []
    for m in (n, 2 * n - 1):
        a1, a2 = A(*_region_points(A, region, m))
        out.append((np.max(np.abs(a1)), np.max(np.abs(a2))))
    (c1, c2), (f1, f2) = out
    raw = (max(f1, f1 + (f1 - c1) / 3), max(f2, f2 + (f2 - c2) / 3))
    return SupNorms(slack * raw[0], slack * raw[1], float(raw[0]), float(raw[1]))


def curl(A: VectorPotential, x, y, h: float = 1e-4):
    """Central-difference ``d a2/dx - d a1/dy``."""
    _, a2p = A(x + h, y)
    _, a2m = A(x - h, y)
    a1p, _ = A(x, y + h)
    a1m, _ = A(x, y - h)
    return (a2p - a2m) / (2 * h) - (a1p - a1m) / (2 * h)


def divergence(A: VectorPotential, x, y, h: float = 1e-4):
    a1p, _ = A(x + h, y)
    a1m, _ = A(x - h, y)
    _, a2p = A(x, y + h)
    _, a2m = A(x, y - h)
    return (a1p - a1m) / (2 * h) + (a2p - a2m) / (2 * h)


def decay_divergence_diagnostics(A: VectorPotential, radii, n_theta: int = 256,
                                 h: float = 1e-4) -> dict:
    """Tabulate ``max |A|`` and ``max |div A|`` on circles about ``p``."""
    radii = np.asarray(radii, float)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    max_abs, div_max = [], []
    for r in radii:
        x, y = r * np.cos(th), A.y0 + r * np.sin(th)
        a1, a2 = A(x, y)
        max_abs.append(float(np.max(np.hypot(a1, a2))))
        div_max.append(float(np.max(np.abs(divergence(A, x, y, h)))))
    r_max = radii * np.array(max_abs)
    positive = r_max[r_max > 0]
    spread = float(positive.max() / positive.min()) if positive.size else 1.0
    return {"radii": radii.tolist(), "max_abs": max_abs, "r_times_max": r_max.tolist(),
            "div_max": div_max, "spread": spread, "bounded": bool(spread <= 2.0)}


def l2_norm_squared(A: VectorPotential, top=None, x_core: float | None = None,
                    x_far: float = 1e6, order: int = 16) -> float:
    """``int |A|^2`` over ``{0 < y < top(x)}``, ``top`` defaulting to ``pi``.

    The far tails use geometric panels to ``x_far``; the remainder is
    estimated from ``|A|^2 ~ C / x^2``.
    """
    if A.is_zero:
        return 0.0
    if top is None:
        top = lambda x: np.full(np.shape(x), np.pi)  # noqa: E731
    if x_core is None:
        R = A.field.support_radius if A.kind == "transversal" else 1.0
        x_core = max(4.0, 2 * R if np.isfinite(R) else 4.0)
    xn, xw = leggauss(order)
    yn, yw = leggauss(24)

    def strip_integral(lo, hi):
        xs = 0.5 * (hi + lo) + 0.5 * (hi - lo) * xn
        H = top(xs)
        ys = 0.5 * H[:, None] * (yn + 1)
        a1, a2 = A(np.broadcast_to(xs[:, None], ys.shape), ys)
        col = 0.5 * H * np.sum(yw * (a1 * a1 + a2 * a2), axis=1)
        return 0.5 * (hi - lo) * np.sum(xw * col)

    edges = np.linspace(-x_core, x_core, int(np.ceil(2 * x_core / 0.5)) + 1)
    total = sum(strip_integral(a, b) for a, b in zip(edges[:-1], edges[1:]))
    tail = [x_core]
    while tail[-1] < x_far:
        tail.append(min(tail[-1] * 1.5, x_far))
    for sgn in (1.0, -1.0):
        for a, b in zip(tail[:-1], tail[1:]):
            lo, hi = sorted((sgn * a, sgn * b))
            total += strip_integral(lo, hi)
        ys = 0.5 * np.pi * (yn + 1)
        a1, a2 = A(np.full(ys.shape, sgn * x_far), ys)
        total += x_far * 0.5 * np.pi * np.sum(yw * (a1 * a1 + a2 * a2))
    return float(total)
