"""Explicit Hardy constants and stability thresholds.

Every certificate stores its full chain of intermediate constants so each
number can be audited, and serializes to JSON with one field per
constant.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

import numpy as np
import scipy.linalg as sla
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar

from .errors import IntegerFlux, MissingNorm, TrivialFlux, ValidityWindowViolated
from .gauge import MagneticField, ball_flux

SCENARIOS = ("deformed_bounded", "curved_bounded", "deformed_ab", "curved_ab")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


class _Serializable:
    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def check_window(y0: float, R: float) -> float:
    """``cos^2(|y0 - pi/2| + R)``, refusing inputs outside the window."""
    if not 0 < y0 < np.pi:
        raise ValidityWindowViolated(f"y0 = {y0} outside (0, pi)")
    if not R > 0:
        raise ValidityWindowViolated(f"R = {R} must be positive")
    t = abs(y0 - np.pi / 2) + R
    if t >= np.pi / 2:
        raise ValidityWindowViolated(f"|y0 - pi/2| + R = {t:.6g} >= pi/2")
    return float(np.cos(t) ** 2)


# ---------------------------------------------------------------------------
# Bessel zero

def _j0_series(x: float) -> float:
    # power series with terms generated by recurrence
    term = 1.0
    s = 1.0
    q = -0.25 * x * x
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        s += term
        if abs(term) < 1e-18 * max(1.0, abs(s)):
            return s


def _j1_series(x: float) -> float:
    term = 0.5 * x
    s = term
    q = -0.25 * x * x
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + 1))
        s += term
        if abs(term) < 1e-18 * max(1.0, abs(s)):
            return s


def bessel_j0_first_zero(tol: float = 1e-14) -> float:
    """First positive zero of ``J_0`` by bisection then Newton."""
    lo, hi = 2.0, 3.0
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if _j0_series(mid) > 0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(20):
        step = _j0_series(x) / -_j1_series(x)  # J0' = -J1
        x -= step
        if abs(step) < tol:
            break
    return float(x)


NU0 = bessel_j0_first_zero()


# ---------------------------------------------------------------------------
# flux profile

@dataclass(frozen=True)
class MuProfile(_Serializable):
    r: np.ndarray
    mu: np.ndarray
    mu0: float
    r0: float
    c2: float


def _field_about(B: MagneticField, p) -> MagneticField:
    if p is None:
        return B
    if abs(p[0]) > 0:
        raise ValueError("p must lie on x = 0")
    return replace(B, y0=float(p[1]))


def _flux_profile(B, R, n_samples, wrap: bool):
    r = R * np.arange(1, n_samples + 1) / n_samples
    phi, dphi = ball_flux(B, r)
    phi, dphi = np.atleast_1d(phi), np.atleast_1d(dphi)
    if np.max(np.abs(phi)) < 1e-14:
        raise TrivialFlux("ball flux vanishes on (0, R)")

    def mu_of(rr):
        ph, dph = ball_flux(B, rr)
        if wrap:
            k = np.round(ph)
            return abs(ph - k), np.sign(ph - k) * dph
        return abs(ph), np.sign(ph) * dph

    if wrap:
        k = np.round(phi)
        mu, dmu = np.abs(phi - k), np.sign(phi - k) * dphi
    else:
        mu, dmu = np.abs(phi), np.sign(phi) * dphi
    return r, mu, dmu, mu_of


def _refine_max(fun, r, vals, R):
    """Refine a sampled maximum of ``fun`` by golden-section search."""
    i = int(np.argmax(vals))
    best_r, best_v = float(r[i]), float(vals[i])
    lo = float(r[i - 1]) if i > 0 else 0.5 * float(r[0])
    hi = float(r[i + 1]) if i + 1 < len(r) else R
    if hi > lo:
        opt = minimize_scalar(lambda t: -fun(t), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13 * R})
        if -opt.fun > best_v:
            best_r, best_v = float(opt.x), float(-opt.fun)
    return best_r, best_v


def mu_profile(B: MagneticField, p=None, R: float = 1.0, n_samples: int = 2000,
               wrap: bool = True) -> MuProfile:
    """Distance of the ball flux to the integers and its derived constants.

    Returns the sampled profile ``mu(r)``, ``mu0 = 1/max mu(r)/r``, the
    maximizer ``r0`` and ``c2 = max |r^-2 (r mu'(r) - mu(r))|``. The last
    maximum runs over the smooth pieces of ``mu``: samples are one-sided
    values, so kinks where the flux crosses a half-integer never enter.
    With ``wrap=False`` the flux itself replaces its distance to the
    integers, which is the small-field limit.
    """
    B = _field_about(B, p)
    r, mu, dmu, mu_of = _flux_profile(B, R, n_samples, wrap)
    ratio = mu / r
    top = ratio.max()
    # deterministic tie-break: the smallest sample within 1e-10 of the max
    i = int(np.argmax(ratio >= top - 1e-10 * top))
    masked = np.full_like(ratio, -np.inf)
    masked[i] = ratio[i]
    r0, v0 = _refine_max(lambda t: mu_of(t)[0] / t, r, masked, R)
    mu0 = float(1.0 / v0)

    q = np.abs((r * dmu - mu) / r**2)
    j = int(np.argmax(q))
    c2 = float(q[j])
    # local refinement when the neighbours lie on the same smooth piece
    if 0 < j < len(r) - 1 and wrap:
        ks = np.round(ball_flux(B, r[j - 1:j + 2])[0])
        same = ks[0] == ks[2]
    else:
        same = 0 < j < len(r) - 1
    if same:
        def qf(t):
            m, dm = mu_of(t)
            return abs((t * dm - m) / t**2)
        _, c2 = _refine_max(qf, r[j - 1:j + 2], np.array([-np.inf, q[j], -np.inf]), R)
    return MuProfile(r, mu, mu0, float(r0), float(c2))


# ---------------------------------------------------------------------------
# bounded-field Hardy certificate

@dataclass(frozen=True)
class HardyCertificate(_Serializable):
    field: dict
    y0: float
    R: float
    mu0: float
    r0: float
    nu0: float
    c0: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c_H: float
    cos2: float
    chi_r0: float

    @property
    def p(self):
        return (0.0, self.y0)


def _c0(r0, R):
    return 4.0 * max(r0**2 / NU0**2, (2 * R**3 - 3 * R**2 * r0 + r0**3) / (6 * r0))


def _c3(y0):
    return np.pi**2 * min(y0**-2, (np.pi - y0) ** -2) - 1.0


def _c5(R):
    return (64.0 + 4.0 * R**2) / R**4


def hardy_certificate(B: MagneticField, p=None, R: float = 1.0, n_samples: int = 2000) -> HardyCertificate:
    """The Hardy constant ``c_H`` for a bounded field and ball ``B_R(p)``."""
    B = _field_about(B, p)
    y0 = B.y0
    cos2 = check_window(y0, R)
    prof = mu_profile(B, None, R, n_samples)
    mu0, r0, c2 = prof.mu0, prof.r0, prof.c2
    c0 = _c0(r0, R)
    c1 = max(2 * mu0**2 + 4 * c0 * c2**2 * mu0**4, c0)
    c3 = _c3(y0)
    c4 = (2 * R**2 * c1 * c3 + 4 * c1 + 4 * R**2) / (c3 * cos2)
    c5 = _c5(R)
    c6 = 16.0 + c4 * c5
    mu_r0 = float(np.atleast_1d(mu_profile_value(B, r0))[0])
    chi = mu0**2 * mu_r0**2 / r0**2
    return HardyCertificate(B.to_dict(), float(y0), float(R), mu0, r0, NU0, float(c0), float(c1),
                            c2, float(c3), float(c4), float(c5), float(c6), float(1.0 / c6),
                            cos2, float(chi))


def mu_profile_value(B: MagneticField, r):
    """``dist(Phi(r), Z)`` at the given radii."""
    ph = np.asarray(ball_flux(B, r)[0])
    return np.abs(ph - np.round(ph))


# ---------------------------------------------------------------------------
# Aharonov-Bohm certificate

@dataclass(frozen=True)
class ABHardyCertificate(_Serializable):
    Phi: float
    y0: float
    R: float
    Psi: float
    c13: float
    c14: float
    c15: float
    c16: float
    c_AB: float
    inv_c16: float
    cos2: float


def flux_distance(Phi: float) -> float:
    """``min_k |Phi - k|``."""
    return float(abs(Phi - np.round(Phi)))


def c13_constant(y0: float) -> float:
    return 4 * np.pi**2 / (np.pi**2 - max(y0**2, (np.pi - y0) ** 2))


def ab_certificate(Phi: float, y0: float = np.pi / 2, R: float = 1.0) -> ABHardyCertificate:
    """Closed-form Hardy constant for an Aharonov-Bohm flux ``Phi`` at ``(0, y0)``."""
    Psi = flux_distance(Phi)
    if Psi < 1e-14:
        raise IntegerFlux(f"flux {Phi} is an integer")
    cos2 = check_window(y0, R)
    c13 = c13_constant(y0)
    c14 = (4 * R**2 * Psi**2 * c13 + 2 * R**2 + 4 * R**2 * c13) / (Psi**2 * cos2)
    c15 = 18.0 + 32 * np.pi**2 / R**2
    c16 = 16.0 + 2 * c14 * c15 / R**2
    c_AB = R**2 * Psi**2 * cos2 / (8 * (2 * R**2 * Psi**2 + (2 * c13 * Psi**2 + 1 + 2 * c13)
                                        * (9 * R**2 + 16 * np.pi**2)))
    return ABHardyCertificate(float(Phi), float(y0), float(R), Psi, float(c13), float(c14),
                              float(c15), float(c16), float(c_AB), float(1.0 / c16), cos2)


# ---------------------------------------------------------------------------
# thresholds

_REQUIRED = {
    "deformed_bounded": ("f", "fp", "a1", "a2", "d"),
    "curved_bounded": ("gamma", "gammap", "a1", "a2", "d"),
    "deformed_ab": ("f", "fp", "d", "Phi"),
    "curved_ab": ("gamma", "gammap", "d", "y0"),
}


@dataclass(frozen=True)
class ThresholdCertificate(_Serializable):
    scenario: str
    norms: dict
    hardy_constant: float
    constants: dict
    threshold: float

    @property
    def name(self) -> str:
        return "lambda0" if self.scenario.startswith("deformed") else "beta0"


def _norms_for(scenario, norms, hardy):
    n = {k: float(v) for k, v in dict(norms).items() if v is not None}
    if isinstance(hardy, ABHardyCertificate):
        n.setdefault("Phi", hardy.Phi)
        n.setdefault("y0", hardy.y0)
    for key in _REQUIRED[scenario]:
        if key not in n:
            raise MissingNorm(f"scenario {scenario} needs norm {key!r}")
        if key != "Phi" and n[key] < 0:
            raise MissingNorm(f"norm {key!r} is negative")
    return n


def deformed_constants(f, fp, a1, a2):
    c7 = f**2 + (2 + a2) * f + (0.5 + np.pi + np.pi * a1) * fp
    c8 = fp**2 / 4 + fp / 2 + np.pi * a1 * fp + a2 * f
    c9 = 2 * (1 + a1**2 + a2**2) * c7 + c8
    return {"c7": c7, "c8": c8, "c9": c9}


def curved_constants(g, gp, a1, a2):
    c10 = np.pi**2 * g**2 + 2 * np.pi * (1 + a1 + a2) * g + np.pi / 2 * gp
    c11 = (0.5 + 3 * np.pi * a1 + 3 * np.pi * a2) * g + np.pi / 2 * gp
    c12 = 2 * (1 + a1**2 + a2**2) * c10 + c11
    return {"c10": c10, "c11": c11, "c12": c12}


def threshold_certificate(scenario: str, norms: dict, hardy) -> ThresholdCertificate:
    """Stability threshold ``lambda0`` or ``beta0`` with its constant chain.

    ``hardy`` is a :class:`HardyCertificate` (bounded scenarios), an
    :class:`ABHardyCertificate` (AB scenarios) or a bare Hardy constant.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    n = _norms_for(scenario, norms, hardy)
    if isinstance(hardy, HardyCertificate):
        cH = hardy.c_H
    elif isinstance(hardy, ABHardyCertificate):
        cH = hardy.c_AB
    else:
        cH = float(hardy)
    if not cH > 0:
        raise ValueError("Hardy constant must be positive")
    d = n["d"]
    if scenario == "deformed_bounded":
        c = deformed_constants(n["f"], n["fp"], n["a1"], n["a2"])
        thr = cH / (2 * c["c9"] * (1 + d**2))
    elif scenario == "curved_bounded":
        c = curved_constants(n["gamma"], n["gammap"], n["a1"], n["a2"])
        thr = cH / (2 * c["c12"] * (1 + d**2))
    elif scenario == "deformed_ab":
        f, fp, Phi = n["f"], n["fp"], n["Phi"]
        c17 = 2 * np.pi * fp + 3 * f + f**2
        c18 = fp**2 / 4 + fp / 2
        c19 = np.pi * fp + f
        c20 = 2 * c17 + c18 + 4 * Phi**2 / np.pi**2 * (2 * c17 + c19)
        c21 = np.pi**2 * (2 * c17 + c18) + 4 * Phi**2 * (2 * c17 + c19)
        c = {"c17": c17, "c18": c18, "c19": c19, "c20": c20, "c21": c21}
        thr = cH / (2 * (c20 * d**2 + c21))
    else:
        g, gp, y0 = n["gamma"], n["gammap"], n["y0"]
        dist = min(y0, np.pi - y0)
        c22 = 3 * np.pi * g + np.pi**2 * g**2 + np.pi / 2 * gp
        c23 = (g + np.pi * gp) / 2
        c24 = np.pi * (1 + 2 * g)
        c25 = (d**2 + np.pi**2) * (2 * c22 + c23 + (2 * c22 + c24) / dist**2)
        c = {"c22": c22, "c23": c23, "c24": c24, "c25": c25, "dist": dist}
        thr = cH / (2 * c25)
    return ThresholdCertificate(scenario, n, float(cH), {k: float(v) for k, v in c.items()}, float(thr))


# ---------------------------------------------------------------------------
# weak-field asymptotics

@dataclass(frozen=True)
class WeakFieldAsymptotics(_Serializable):
    k1: float
    k2: float
    k4: float
    c0: float
    c3: float
    c5: float
    r0: float
    d: float
    k9: float | None
    k9_printed: float | None
    k12: float | None
    hardy_coeff: float
    lambda_coeff: float | None
    lambda_coeff_printed: float | None
    beta_coeff: float | None


def weak_field_asymptotics(B: MagneticField, p=None, R: float = 1.0, norms: dict | None = None,
                           n_samples: int = 2000) -> WeakFieldAsymptotics:
    """Leading small-``alpha`` coefficients of ``c_H``, ``lambda0`` and ``beta0``.

    The multiplier of ``B`` is ignored; the coefficients multiply
    ``alpha^2``. ``k9`` is the zero-field value of ``c9``; the shorter
    expression sometimes quoted for it is kept as ``k9_printed``.
    """
    B = replace(_field_about(B, p), alpha=1.0)
    cos2 = check_window(B.y0, R)
    prof = mu_profile(B, None, R, n_samples, wrap=False)
    k1, k2, r0 = prof.mu0, prof.c2, prof.r0
    c0 = _c0(r0, R)
    c3 = _c3(B.y0)
    c5 = _c5(R)
    k4 = (2 * R**2 * c3 + 4) * (2 * k1**2 + 4 * c0 * k1**4 * k2**2) / (c3 * cos2)
    hardy_coeff = 1.0 / (k4 * c5)
    n = {k: float(v) for k, v in dict(norms or {}).items() if v is not None}
    d = n.get("d", 0.0)
    k9 = k9p = lam = lamp = k12 = beta = None
    if "f" in n and "fp" in n:
        f, fp = n["f"], n["fp"]
        k9 = deformed_constants(f, fp, 0.0, 0.0)["c9"]
        k9p = f**2 + 2 * f + fp**2 / 4 + (1 + np.pi) * fp
        lam = 1.0 / (2 * k4 * k9 * c5 * (1 + d**2))
        lamp = 1.0 / (2 * k4 * k9p * c5 * (1 + d**2))
    if "gamma" in n and "gammap" in n:
        k12 = curved_constants(n["gamma"], n["gammap"], 0.0, 0.0)["c12"]
        beta = 1.0 / (2 * k4 * c5 * k12 * (1 + d**2))
    return WeakFieldAsymptotics(float(k1), float(k2), float(k4), float(c0), float(c3), float(c5),
                                float(r0), float(d), k9, k9p, k12, float(hardy_coeff), lam, lamp, beta)


# ---------------------------------------------------------------------------
# one-dimensional checks

def _p1_forms(nodes, weight_grad, weight_mass, order: int = 8):
    """P1 stiffness and mass matrices with pointwise weights (GL per element)."""
    t, w = leggauss(order)
    n = len(nodes)
    A = np.zeros((n, n))
    Mm = np.zeros((n, n))
    for e in range(n - 1):
        a, b = nodes[e], nodes[e + 1]
        h = b - a
        y = a + 0.5 * h * (t + 1)
        ww = 0.5 * h * w
        phi = np.array([(b - y) / h, (y - a) / h])
        dphi = np.array([-1.0 / h, 1.0 / h])
        kg = np.sum(ww * weight_grad(y))
        km = (phi * (ww * weight_mass(y))) @ phi.T
        idx = [e, e + 1]
        A[np.ix_(idx, idx)] += kg * np.outer(dphi, dphi)
        Mm[np.ix_(idx, idx)] += km
    return A, Mm


def _lowest_ratio(A, Mm, free):
    Af = A[np.ix_(free, free)]
    Mf = Mm[np.ix_(free, free)]
    return float(sla.eigh(Af, Mf, eigvals_only=True, subset_by_index=[0, 0])[0])


def lemma73_nodes(y0: float, level: int) -> np.ndarray:
    """Nested meshes of ``[0, pi]`` with ``y0`` as a node."""
    ml = max(1, round(8 * y0 / np.pi)) * 2**level
    mr = max(1, round(8 * (np.pi - y0) / np.pi)) * 2**level
    return np.concatenate([np.linspace(0, y0, ml + 1)[:-1], np.linspace(y0, np.pi, mr + 1)])


@dataclass(frozen=True)
class OneDimCheck(_Serializable):
    numeric: float
    bound: float
    n_nodes: int
    holds: bool


def lemma73_check(y0: float = np.pi / 2, resolution: int = 3) -> OneDimCheck:
    """Smallest ``int |u'|^2 sin^2 / int |u|^2 sin^2/(y-y0)^2`` with ``u(y0) = 0``.

    P1 elements on nested meshes (``resolution`` is the refinement level)
    against the bound ``1/c13``.
    """
    if not 0 < y0 < np.pi:
        raise ValueError("y0 must lie in (0, pi)")
    nodes = lemma73_nodes(y0, resolution)
    # the mass integrand u^2/(y-y0)^2 stays bounded since u(y0) = 0
    A, Mm = _p1_forms(nodes, lambda y: np.sin(y) ** 2,
                      lambda y: np.sin(y) ** 2 / (y - y0) ** 2)
    k0 = int(np.argmin(np.abs(nodes - y0)))
    free = np.array([i for i in range(len(nodes)) if i != k0])
    val = _lowest_ratio(A, Mm, free)
    bound = 1.0 / c13_constant(y0)
    return OneDimCheck(val, float(bound), len(nodes), bool(val >= bound))


def classical_hardy_optimum(level: int = 2) -> OneDimCheck:
    """Smallest ``int |v'|^2 / int |v|^2/t^2`` on a truncated half-line.

    Nodes are uniform in ``log t`` with step ``0.4/2^level`` over
    ``10*2^level`` log units, Dirichlet at both ends; the meshes are
    nested so the optimum decreases towards ``1/4`` with the level.
    """
    step = 0.4 / 2**level
    half = 5.0 * 2**level
    m = int(round(2 * half / step))
    nodes = np.exp(-half + step * np.arange(m + 1))
    A, Mm = _p1_forms(nodes, lambda t: np.ones_like(t), lambda t: t**-2.0)
    free = np.arange(1, m)
    val = _lowest_ratio(A, Mm, free)
    return OneDimCheck(val, 0.25, m + 1, bool(val >= 0.25))
