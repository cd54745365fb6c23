"""Deformation and curvature profiles, strip maps and boundary curves.

A profile is a compactly supported C^1 function on the strip axis. Two
roles use it: the height perturbation ``f`` of a deformed strip, whose
upper wall sits at ``pi * (1 + lam * f(x))``, and the signed curvature
``gamma`` of the lower wall of a bent strip.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import GeometryError, JacobianNonPositive

KINDS = ("deformation", "curvature")
FAMILIES = ("bump", "table", "constant")

_GL5 = leggauss(5)
_GL3 = leggauss(3)


@dataclass(frozen=True)
class Profile:
    """Compactly supported profile with exact sup norms.

    Families
    --------
    bump
        ``h * (1 - ((x - x_c) / w)**2)**2`` on ``|x - x_c| <= w``.
    table
        Monotone cubic Hermite interpolation of ``(x, value)`` pairs whose
        end values are zero; end slopes are forced to zero so the profile
        is C^1 across the support endpoints.
    constant
        ``c`` on ``[x_lo, x_hi]``. Not C^1; provided for circle and
        Jacobian checks only.
    """

    kind: str
    family: str
    params: dict = field(default_factory=dict)
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeometryError(f"unknown profile kind {self.kind!r}")
        if self.family not in FAMILIES:
            raise GeometryError(f"unknown profile family {self.family!r}")
        p = self.params
        if self.family == "bump":
            if not p.get("w", 0) > 0:
                raise GeometryError("bump width w must be positive")
        elif self.family == "constant":
            if not p["x_hi"] > p["x_lo"]:
                raise GeometryError("constant profile needs x_lo < x_hi")
        else:
            xs = np.asarray(p["x"], float)
            vs = np.asarray(p["values"], float)
            if xs.ndim != 1 or xs.size < 3 or xs.shape != vs.shape:
                raise GeometryError("table needs at least 3 matching (x, value) pairs")
            if np.any(np.diff(xs) <= 0):
                raise GeometryError("table abscissae must be strictly increasing")
            if vs[0] != 0 or vs[-1] != 0:
                raise GeometryError("table values must vanish at both ends")
            slopes = PchipInterpolator(xs, vs).derivative()(xs)
            slopes[0] = slopes[-1] = 0.0
            object.__setattr__(self, "_spline", CubicHermiteSpline(xs, vs, slopes))
        if self.kind == "deformation" and self._raw_min() < 0:
            raise GeometryError("deformation profiles must be non-negative")

    # support and norms -------------------------------------------------
    @property
    def x_lo(self) -> float:
        p = self.params
        if self.family == "bump":
            return float(p["x_c"] - p["w"])
        if self.family == "constant":
            return float(p["x_lo"])
        return float(p["x"][0])

    @property
    def x_hi(self) -> float:
        p = self.params
        if self.family == "bump":
            return float(p["x_c"] + p["w"])
        if self.family == "constant":
            return float(p["x_hi"])
        return float(p["x"][-1])

    @property
    def d(self) -> float:
        """Largest distance of the support from ``x = 0``.

        Equals ``max supp p`` for supports symmetric about the origin.
        """
        return max(abs(self.x_lo), abs(self.x_hi))

    @property
    def c1(self) -> bool:
        return self.family != "constant"

    @cached_property
    def _extrema(self):
        """(min p, max p, max |p'|) of the unscaled profile."""
        p = self.params
        if self.family == "bump":
            h, w = p["h"], p["w"]
            return min(h, 0.0), max(h, 0.0), 8 * abs(h) / (3 * np.sqrt(3) * w)
        if self.family == "constant":
            c = p["c"]
            return min(c, 0.0), max(c, 0.0), 0.0
        sp = self._spline
        crit = np.concatenate([sp.x, _real_roots(sp.derivative())])
        vals = sp(crit)
        crit2 = np.concatenate([sp.x, _real_roots(sp.derivative(2))])
        # the second derivative jumps at knots, so evaluate p' from both sides
        dsp = sp.derivative()
        dvals = np.abs(np.concatenate([dsp(crit2), dsp(sp.x[1:] - 1e-14), dsp(sp.x[:-1] + 1e-14)]))
        return min(vals.min(), 0.0), max(vals.max(), 0.0), float(dvals.max())

    def _raw_min(self) -> float:
        return self._extrema[0]

    @property
    def min_value(self) -> float:
        lo, hi, _ = self._extrema
        return self.scale * (lo if self.scale >= 0 else hi)

    @property
    def sup_norm(self) -> float:
        lo, hi, _ = self._extrema
        return abs(self.scale) * max(abs(lo), abs(hi))

    @property
    def deriv_sup_norm(self) -> float:
        return abs(self.scale) * self._extrema[2]

    # evaluation --------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, float)
        p = self.params
        if self.family == "bump":
            t = (x - p["x_c"]) / p["w"]
            out = np.where(np.abs(t) < 1, p["h"] * (1 - t * t) ** 2, 0.0)
        elif self.family == "constant":
            out = np.where((x >= p["x_lo"]) & (x <= p["x_hi"]), p["c"], 0.0)
        else:
            inside = (x >= self.x_lo) & (x <= self.x_hi)
            out = np.where(inside, self._spline(np.clip(x, self.x_lo, self.x_hi)), 0.0)
        return self.scale * out

    def deriv(self, x):
        x = np.asarray(x, float)
        p = self.params
        if self.family == "bump":
            t = (x - p["x_c"]) / p["w"]
            out = np.where(np.abs(t) < 1, -4 * p["h"] * t * (1 - t * t) / p["w"], 0.0)
        elif self.family == "constant":
            out = np.zeros_like(x)
        else:
            inside = (x >= self.x_lo) & (x <= self.x_hi)
            out = np.where(inside, self._spline.derivative()(np.clip(x, self.x_lo, self.x_hi)), 0.0)
        return self.scale * out

    def antiderivative(self, x):
        """Exact integral of the profile from ``x_lo`` to ``x``."""
        x = np.asarray(x, float)
        p = self.params
        xc = np.clip(x, self.x_lo, self.x_hi)
        if self.family == "bump":
            t = (xc - p["x_c"]) / p["w"]
            out = p["h"] * p["w"] * (t - 2 * t**3 / 3 + t**5 / 5 + 8.0 / 15.0)
        elif self.family == "constant":
            out = p["c"] * (xc - p["x_lo"])
        else:
            out = self._spline.antiderivative()(xc)
        return self.scale * out

    def integral(self) -> float:
        return float(self.antiderivative(self.x_hi))

    def scaled(self, c: float) -> "Profile":
        """The profile multiplied by ``c``."""
        if self.kind == "deformation" and c < 0:
            raise GeometryError("deformation profiles cannot be scaled by a negative factor")
        return Profile(self.kind, self.family, dict(self.params), self.scale * c)

    def to_dict(self) -> dict[str, Any]:
        params = {k: (list(map(float, v)) if np.ndim(v) else float(v)) for k, v in self.params.items()}
        return {"kind": self.kind, "family": self.family, "params": params, "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> "Profile":
        return cls(d["kind"], d["family"], dict(d["params"]), float(d.get("scale", 1.0)))


def _real_roots(pp) -> np.ndarray:
    r = np.asarray(pp.roots(extrapolate=False), float)
    return r[np.isfinite(r)]


def bump_profile(kind: str, h: float, w: float, x_c: float = 0.0) -> Profile:
    return Profile(kind, "bump", {"h": float(h), "w": float(w), "x_c": float(x_c)})


def bump_with_integral(kind: str, area: float, w: float, x_c: float = 0.0) -> Profile:
    """Bump whose integral over the line equals ``area``."""
    return bump_profile(kind, 15.0 * area / (16.0 * w), w, x_c)


def table_profile(kind: str, x, values) -> Profile:
    return Profile(kind, "table", {"x": [float(v) for v in x], "values": [float(v) for v in values]})


def constant_profile(kind: str, c: float, x_lo: float, x_hi: float) -> Profile:
    return Profile(kind, "constant", {"c": float(c), "x_lo": float(x_lo), "x_hi": float(x_hi)})


# ---------------------------------------------------------------------------
# strip maps


@dataclass(frozen=True)
class StripMap:
    """Coordinate factor of the unitary map onto the straight strip."""

    mode: str
    scale: float
    profile: Profile

    def g(self, x):
        """Height factor ``1 + lam * f(x)`` (deformed mode)."""
        return 1.0 + self.scale * self.profile(x)

    def g_prime(self, x):
        return self.scale * self.profile.deriv(x)

    def jacobian(self, x, y):
        """Area factor ``1 + y * beta * gamma(x)`` (curved mode)."""
        return 1.0 + np.asarray(y, float) * self.scale * self.profile(x)


def strip_map(profile: Profile, mode: str, scale: float) -> StripMap:
    if scale < 0:
        raise GeometryError("scale must be non-negative")
    if mode == "deformed":
        if profile.kind != "deformation":
            raise GeometryError("deformed mode needs a deformation profile")
    elif mode == "curved":
        if profile.kind != "curvature":
            raise GeometryError("curved mode needs a curvature profile")
        xs = np.linspace(profile.x_lo, profile.x_hi, 4001)
        jmin = min(1.0 + np.pi * scale * profile.min_value,
                   float(np.min(1.0 + np.pi * scale * profile(xs))))
        if jmin <= 0:
            raise JacobianNonPositive(
                f"1 + y*beta*gamma reaches {jmin:.3g} <= 0 on the closed strip")
    else:
        raise GeometryError(f"unknown strip map mode {mode!r}")
    return StripMap(mode, float(scale), profile)


# ---------------------------------------------------------------------------
# curve reconstruction


@dataclass(frozen=True)
class PlaneCurve:
    """Arc-length parametrized lower wall ``(a(x), b(x))`` of a bent strip.

    The tangent angle is ``theta(x) = -int_0^x gamma``, which makes
    ``b' a'' - a' b'' = gamma`` and the area factor of the tubular
    coordinates ``1 + y * gamma``.
    """

    gamma: Profile
    x: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ap: np.ndarray
    bp: np.ndarray
    app: np.ndarray
    bpp: np.ndarray
    theta_tot: float
    knots: np.ndarray = field(repr=False)
    a_knots: np.ndarray = field(repr=False)
    b_knots: np.ndarray = field(repr=False)

    def angle(self, x):
        g = self.gamma
        return -(g.antiderivative(x) - g.antiderivative(0.0))

    def frame(self, x):
        """Return ``a, b, a', b', a'', b''`` at arbitrary abscissae."""
        x = np.asarray(x, float)
        th = self.angle(x)
        ap, bp = np.cos(th), np.sin(th)
        gam = self.gamma(x)
        app, bpp = bp * gam, -ap * gam
        a, b = _positions(self, x)
        return a, b, ap, bp, app, bpp


def _cell_integrals(curve_angle, lo, hi, rule):
    nodes, weights = rule
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    xs = mid[..., None] + half[..., None] * nodes
    th = curve_angle(xs)
    ia = half * np.sum(weights * np.cos(th), axis=-1)
    ib = half * np.sum(weights * np.sin(th), axis=-1)
    return ia, ib


def _positions(curve: PlaneCurve, x: np.ndarray):
    k = curve.knots
    idx = np.clip(np.searchsorted(k, x, side="right") - 1, 0, len(k) - 1)
    base = k[idx]
    # beyond the last knot (or before the first) the angle is constant,
    # so the same formula is an exact straight continuation
    ia, ib = _cell_integrals(curve.angle, base, x, _GL5)
    return curve.a_knots[idx] + ia, curve.b_knots[idx] + ib


def reconstruct_curve(gamma: Profile, grid, n_cells: int = 400, tol: float = 1e-10) -> PlaneCurve:
    """Integrate the curvature twice to get the boundary curve.

    ``a(0) = b(0) = 0`` and the tangent at ``x = 0`` is ``(1, 0)``.
    """
    if gamma.kind != "curvature":
        raise GeometryError("reconstruct_curve needs a curvature profile")
    grid = np.asarray(grid, float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise GeometryError("curve grid must be a strictly increasing 1-D array")
    knots = np.unique(np.concatenate([[0.0], np.linspace(gamma.x_lo, gamma.x_hi, n_cells + 1)]))
    stub = PlaneCurve(gamma, grid, *(np.empty(0),) * 6, gamma.integral(), knots,
                      np.zeros_like(knots), np.zeros_like(knots))
    lo, hi = knots[:-1], knots[1:]
    ia, ib = _cell_integrals(stub.angle, lo, hi, _GL5)
    ia3, ib3 = _cell_integrals(stub.angle, lo, hi, _GL3)
    err = max(np.abs(ia - ia3).sum(), np.abs(ib - ib3).sum())
    if err > tol * max(1.0, knots[-1] - knots[0]):
        raise GeometryError(f"curve quadrature error {err:.2e} exceeds tolerance; refine n_cells")
    i0 = int(np.searchsorted(knots, 0.0))
    ca = np.concatenate([[0.0], np.cumsum(ia)])
    cb = np.concatenate([[0.0], np.cumsum(ib)])
    a_k, b_k = ca - ca[i0], cb - cb[i0]
    curve = PlaneCurve(gamma, grid, *(np.empty(0),) * 6, gamma.integral(), knots, a_k, b_k)
    a, b, ap, bp, app, bpp = curve.frame(grid)
    return PlaneCurve(gamma, grid, a, b, ap, bp, app, bpp, gamma.integral(), knots, a_k, b_k)


def _segment_distances(p0, p1, q0, q1):
    """Pairwise minimum distances between segments p0p1 and q0q1."""
    p0, p1 = p0[:, None, :], p1[:, None, :]
    q0, q1 = q0[None, :, :], q1[None, :, :]

    def point_seg(pt, s0, s1):
        d = s1 - s0
        L2 = np.maximum(np.sum(d * d, -1), 1e-300)
        t = np.clip(np.sum((pt - s0) * d, -1) / L2, 0, 1)
        return np.linalg.norm(pt - (s0 + t[..., None] * d), axis=-1)

    dist = np.minimum.reduce([point_seg(p0, q0, q1), point_seg(p1, q0, q1),
                              point_seg(q0, p0, p1), point_seg(q1, p0, p1)])

    def cross(u, v):
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

    r, s = p1 - p0, q1 - q0
    d1, d2 = cross(r, q0 - p0), cross(r, q1 - p0)
    d3, d4 = cross(s, p0 - q0), cross(s, p1 - q0)
    hit = (d1 * d2 < 0) & (d3 * d4 < 0)
    return np.where(hit, 0.0, dist)


def check_self_intersection(curve: PlaneCurve, width: float = np.pi, n_samples: int = 600) -> bool:
    """Heuristic sampled test for overlap of the two strip walls.

    Returns True when any two non-adjacent wall segments come closer than
    ``1e-3 * width``, or when the outer wall folds (``1 + width*gamma <= 0``).
    Not a certified test.
    """
    margin = 1e-3 * width
    xs = np.linspace(curve.x[0], curve.x[-1], n_samples)
    if np.any(1.0 + width * curve.gamma(xs) <= 0):
        return True
    a, b, ap, bp, _, _ = curve.frame(xs)
    lower = np.stack([a, b], -1)
    upper = np.stack([a - width * bp, b + width * ap], -1)
    n = len(xs) - 1
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for P, Q, same in ((lower, lower, True), (upper, upper, True), (lower, upper, False)):
        dist = _segment_distances(P[:-1], P[1:], Q[:-1], Q[1:])
        if same:
            dist = np.where(np.abs(i - j) <= 1, np.inf, dist)
        if np.min(dist) < margin:
            return True
    return False
