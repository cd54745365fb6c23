"""End-to-end numerical experiments on magnetic waveguides.

Existence tests count eigenvalues below a cut by Sylvester inertia. Two
truncations are used:

* ``uniform``: Dirichlet box ``[-L, L]``, cut ``1 - margin``, with a
  confirmation run at ``2L``;
* ``graded``: a uniform core followed by geometrically growing cells out
  to a very distant Dirichlet wall; the cut is the discrete transverse
  threshold of the grid, so arbitrarily weak binding is detected.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import stats

from .assembly import (StripGrid, assemble_curved, assemble_deformed, assemble_straight,
                       assemble_weight)
from .eigensolve import DEFAULT_SEED, count_below, lowest_pairs, smallest_weighted_ratio
from .errors import BracketFailure, GeometryError
from .gauge import (MagneticField, Rect, VectorPotential, l2_norm_squared,
                    sup_norm_estimate, transversal_potential)
from .geometry import Profile
from .hardy import ThresholdCertificate, ab_certificate, hardy_certificate, threshold_certificate

DEFAULT_MARGIN = 0.005
DEFAULT_BISECTION_TOL = 0.02


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


class _Report:
    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# grids

def default_uniform_grid(L: float = 40.0, h: float = 0.1, n_y: int = 41, ab_point=None) -> StripGrid:
    """Uniform box grid; node counts are made even when a flux point is given
    so that ``p = (0, pi/2)`` falls on a cell centre."""
    n_x = int(round(2 * L / h)) + 1
    if ab_point is not None:
        n_x += n_x % 2
        n_y += n_y % 2
    return StripGrid.uniform(L, n_x, n_y, ab_point)


def default_graded_grid(n_y: int = 41, core: float = 20.0, h: float = 0.1,
                        L_far: float = 1e7, ratio: float = 1.08) -> StripGrid:
    return StripGrid.graded_grid(core, h, L_far, n_y, ratio)


# ---------------------------------------------------------------------------
# trial function

@dataclass(frozen=True)
class TrialFunctionSpec:
    """Triangle parameters ``s, beta`` and deformation strength ``lam``."""

    s: float
    beta: float
    lam: float
    n_panels: int = 64
    order: int = 16

    def __post_init__(self):
        if not (self.s > 0 and self.beta > 0 and self.lam >= 0):
            raise ValueError("need s > 0, beta > 0, lam >= 0")

    def top(self, x):
        """Upper edge of the trial support for ``|x| < s``."""
        return np.pi * (1 + self.beta * self.lam * (1 - np.abs(x) / self.s))

    def contained_in(self, f: Profile, n: int = 2001) -> bool:
        """Whether the triangle lies under the deformed edge ``pi (1 + lam f)``."""
        x = np.linspace(-self.s, self.s, n)
        return bool(np.all(f(x) >= self.beta * (1 - np.abs(x) / self.s) - 1e-12))


@dataclass
class TrialQuotient(_Report):
    grad_quotient: float
    magnetic_quotient: float
    norm_sq: float
    potential_term: float


def trial_norm_formula(spec: TrialFunctionSpec) -> float:
    s, b, lam = spec.s, spec.beta, spec.lam
    return np.pi * (1 / (2 * s * b * lam) + s + b * lam * s / 2)


def trial_quotient(spec: TrialFunctionSpec, A: VectorPotential | None = None,
                   alpha: float = 1.0) -> TrialQuotient:
    """Rayleigh quotients of the triangle trial function by quadrature.

    For real ``phi`` the magnetic quotient splits exactly as
    ``||grad phi||^2 + alpha^2 int |A|^2 phi^2``. The exponential tails are
    integrated on geometric panels to a relative weight of ``1e-16``.
    """
    s, b, lam = spec.s, spec.beta, spec.lam
    if lam == 0:
        raise ValueError("the trial function needs lam > 0")
    k = s * b * lam
    xn, xw = leggauss(spec.order)
    eta, ew = leggauss(spec.order)
    eta = 0.5 * np.pi * (eta + 1)
    ew = 0.5 * np.pi * ew

    def pot2(x, y):
        if A is None or alpha == 0:
            return np.zeros_like(x)
        a1, a2 = A(x, y)
        return alpha**2 * (a1 * a1 + a2 * a2)

    norm = grad = mag = 0.0
    # core |x| < s: y = eta * g(x), phi = sin(eta)
    edges = np.linspace(-s, s, 2 * (spec.n_panels // 2) + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        x = 0.5 * (hi + lo) + 0.5 * (hi - lo) * xn
        w = 0.5 * (hi - lo) * xw
        g = 1 + b * lam * (1 - np.abs(x) / s)
        gp = -b * lam * np.sign(x) / s
        X, E = np.meshgrid(x, eta, indexing="ij")
        G, GP = g[:, None], gp[:, None]
        jac = G  # dy = g d eta
        phi2 = np.sin(E) ** 2
        phix = -np.cos(E) * E * GP / G
        phiy = np.cos(E) / G
        W = w[:, None] * ew[None, :] * jac
        norm += np.sum(W * phi2)
        grad += np.sum(W * (phix**2 + phiy**2))
        mag += np.sum(W * pot2(X, E * G) * phi2)
    # tails |x| >= s: phi = sin(y) exp(-k (|x| - s))
    t_end = 37.0 / k
    tail = np.concatenate([[0.0], np.geomspace(min(1.0, t_end) * 1e-3, t_end, spec.n_panels)])
    ys = eta
    for sgn in (1.0, -1.0):
        for lo, hi in zip(tail[:-1], tail[1:]):
            t = 0.5 * (hi + lo) + 0.5 * (hi - lo) * xn
            w = 0.5 * (hi - lo) * xw
            e2 = np.exp(-2 * k * t)
            X, Y = np.meshgrid(sgn * (s + t), ys, indexing="ij")
            W = (w * e2)[:, None] * ew[None, :]
            sin2, cos2 = np.sin(Y) ** 2, np.cos(Y) ** 2
            norm += np.sum(W * sin2)
            grad += np.sum(W * (k * k * sin2 + cos2))
            mag += np.sum(W * pot2(X, Y) * sin2)
    return TrialQuotient(float(grad / norm), float((grad + mag) / norm), float(norm), float(mag))


def best_triangle(f: Profile, n_s: int = 200, n_x: int = 801) -> tuple[float, float]:
    """``(s, beta)`` maximizing ``s * beta`` with the triangle under ``f``."""
    best = (0.0, 0.0, 0.0)
    if not f(0.0) > 0:
        raise GeometryError("profile must be positive at x = 0 for a centred triangle")
    for s in np.linspace(f.d / n_s, f.d, n_s):
        x = np.linspace(-s, s, n_x)[1:-1]
        beta = float(np.min(f(x) / (1 - np.abs(x) / s)))
        if beta > 0 and s * beta > best[0]:
            best = (s * beta, float(s), beta)
    if best[0] == 0:
        raise GeometryError("no triangle fits under the profile")
    return best[1], best[2]


# ---------------------------------------------------------------------------
# existence

@dataclass
class ExistenceReport(_Report):
    exists: bool
    mode: str
    cut: float
    counts: list
    lengths: list

    def __bool__(self):
        return self.exists


def eigenvalue_exists(build: Callable[[StripGrid], object], grid: StripGrid | None = None,
                      margin: float = DEFAULT_MARGIN, mode: str = "uniform",
                      confirm: bool = True) -> ExistenceReport:
    """Whether the form built by ``build(grid)`` has an eigenvalue below the cut.

    ``uniform`` mode cuts at ``1 - margin`` and, on a positive answer,
    repeats on the box of twice the length. ``graded`` mode cuts at the
    grid's transverse threshold (no margin needed).
    """
    if mode == "uniform":
        grid = grid or default_uniform_grid()
        cut = 1.0 - margin
        sys_ = build(grid)
        counts, lengths = [count_below(sys_.S, sys_.M, cut)], [grid.L]
        if counts[0] > 0 and confirm:
            big = StripGrid.uniform(2 * grid.L, 2 * grid.n_x - 1, grid.n_y, grid.ab_point)
            sys2 = build(big)
            counts.append(count_below(sys2.S, sys2.M, cut))
            lengths.append(big.L)
        return ExistenceReport(bool(all(c > 0 for c in counts)), mode, cut, counts, lengths)
    if mode == "graded":
        grid = grid or default_graded_grid()
        cut = grid.transverse_threshold() - margin
        sys_ = build(grid)
        m = count_below(sys_.S, sys_.M, cut)
        return ExistenceReport(m > 0, mode, float(cut), [m], [grid.L])
    raise ValueError(f"unknown mode {mode!r}")


def deformed_builder(f: Profile, lam: float, A: VectorPotential | None):
    return lambda grid: assemble_deformed(f, lam, A, grid)


def curved_builder(gamma: Profile, beta: float, A: VectorPotential | None):
    return lambda grid: assemble_curved(gamma, beta, A, grid)


# ---------------------------------------------------------------------------
# certificates for concrete configurations

def potential_sup_norms(A: VectorPotential, height: float = np.pi, half_length: float = 20.0, n: int = 101):
    return sup_norm_estimate(A, Rect(-half_length, half_length, 0.0, height), n=n)


def deformed_threshold(B: MagneticField, f: Profile, R: float = 1.0) -> ThresholdCertificate:
    """``lambda0`` for the field ``B`` (multiplier included) and profile ``f``."""
    cert = hardy_certificate(B, None, R)
    A = transversal_potential(B)
    sup = potential_sup_norms(A, np.pi * (1 + f.sup_norm))
    norms = {"f": f.sup_norm, "fp": f.deriv_sup_norm, "a1": sup.a1, "a2": sup.a2, "d": f.d}
    return threshold_certificate("deformed_bounded", norms, cert)


def curved_threshold(B: MagneticField, gamma: Profile, R: float = 1.0) -> ThresholdCertificate:
    """``beta0`` for the field ``B`` and curvature ``gamma``."""
    cert = hardy_certificate(B, None, R)
    A = transversal_potential(B)
    # the bent strip stays within distance pi of the curve, which is
    # straight where gamma vanishes; sample the straight strip widened by pi
    sup = sup_norm_estimate(A, Rect(-20.0, 20.0, -np.pi, 2 * np.pi))
    norms = {"gamma": gamma.sup_norm, "gammap": gamma.deriv_sup_norm, "a1": sup.a1,
             "a2": sup.a2, "d": gamma.d}
    return threshold_certificate("curved_bounded", norms, cert)


# ---------------------------------------------------------------------------
# threshold scans

@dataclass
class ScanPoint(_Report):
    alpha: float
    lam_star: float
    bracket: tuple
    lam0: float
    upper: float
    evaluations: int
    within_bracket: bool


@dataclass
class ScanResult(_Report):
    points: list
    tol: float
    slope: float | None
    slope_halfwidth: float | None
    residual: float | None
    trial: dict
    A_l2_sq: float
    failures: list = field(default_factory=list)

    def rows(self):
        return [(p.alpha, p.lam_star, p.bracket[0], p.bracket[1], p.lam0, p.upper)
                for p in self.points]


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` on ``log x`` with a 95% half-width."""
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    fit = stats.linregress(x, y)
    n = len(x)
    hw = float(stats.t.ppf(0.975, n - 2) * fit.stderr) if n > 2 else float("nan")
    res = float(np.sqrt(np.mean((y - fit.intercept - fit.slope * x) ** 2)))
    return float(fit.slope), hw, res


def bisect_threshold(predicate: Callable[[float], bool], lo: float, hi: float,
                     tol: float = DEFAULT_BISECTION_TOL):
    """Geometric bisection of a monotone predicate, false at ``lo``, true at ``hi``.

    Returns ``(lo, hi, evaluations)`` with ``hi / lo <= 1 + tol``.
    """
    n = 0
    while hi / lo > 1 + tol:
        mid = np.sqrt(lo * hi)
        n += 1
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi, n


def threshold_scan(B: MagneticField, f: Profile, alphas, tol: float = DEFAULT_BISECTION_TOL,
                   grid: StripGrid | None = None, trial: tuple[float, float] | None = None,
                   raise_on_failure: bool = False, progress: Callable | None = None) -> ScanResult:
    """``lam*(alpha)``: the smallest deformation strength binding a state.

    For each ``alpha`` the bracket is ``[lambda0(alpha), 4 ||A||^2
    alpha^2 / (pi s beta)]``, the certified stability threshold and the
    trial-function sufficiency bound. Each end is checked first; a
    violation is recorded (or raised as :class:`BracketFailure`).
    """
    grid = grid or default_graded_grid()
    s, beta = trial or best_triangle(f)
    unit = B.scaled(1.0 / B.alpha) if B.alpha != 0 else B
    A_unit = transversal_potential(unit)
    a2 = l2_norm_squared(A_unit)
    points, failures = [], []
    for alpha in alphas:
        Ba = unit.scaled(alpha)
        A = transversal_potential(Ba)
        lam0 = deformed_threshold(Ba, f).threshold
        upper = 4 * a2 * alpha**2 / (np.pi * s * beta)

        def pred(lam, A=A):
            return eigenvalue_exists(deformed_builder(f, lam, A), grid, margin=0.0, mode="graded").exists

        ok_lo, ok_hi = not pred(lam0), pred(upper)
        inside = ok_lo and ok_hi
        if not inside:
            info = {"alpha": alpha, "lam0": lam0, "upper": upper,
                    "exists_at_lam0": not ok_lo, "exists_at_upper": ok_hi}
            failures.append(info)
            if raise_on_failure:
                raise BracketFailure(f"analytic bracket violated at alpha = {alpha}", info)
        if ok_lo and ok_hi:
            lo, hi, n = bisect_threshold(pred, lam0, upper, tol)
        elif not ok_lo:
            lo, hi, n = 0.0, lam0, 0
        else:
            # sufficiency bound failed: search upwards for a bracket
            lo, hi, n = upper, 2 * upper, 0
            while not pred(hi):
                lo, hi, n = hi, 2 * hi, n + 1
            a, b, m = bisect_threshold(pred, lo, hi, tol)
            lo, hi, n = a, b, n + m
        p = ScanPoint(float(alpha), float(hi), (float(lo), float(hi)), float(lam0), float(upper),
                      n + 2, bool(inside))
        points.append(p)
        if progress:
            progress(p)
    slope = hw = res = None
    good = [p for p in points if p.lam_star > 0]
    if len(good) >= 4:
        slope, hw, res = loglog_slope([p.alpha for p in good], [p.lam_star for p in good])
    return ScanResult(points, tol, slope, hw, res, {"s": s, "beta": beta}, a2, failures)


# ---------------------------------------------------------------------------
# weak-coupling asymptotics

@dataclass
class BGRSResult(_Report):
    lams: list
    thetas: list
    thresholds: list
    binding: list
    coefficients: list
    richardson: list
    coefficient: float
    second_order: float | None
    halving_ratios: list
    target: float


def bgrs_asymptotic(f: Profile, lams, grid: StripGrid | None = None,
                    seed: int = DEFAULT_SEED) -> BGRSResult:
    """Coefficient ``c`` in ``threshold - theta_min ~ c lam^2`` for ``alpha = 0``.

    ``lams`` should form a halving sequence. First-order Richardson
    extrapolation ``2 c(lam) - c(2 lam)`` removes the ``O(lam^3)`` term;
    the reported coefficient uses the two smallest strengths.
    """
    grid = grid or default_graded_grid()
    lams = sorted(float(v) for v in lams)
    kappa = grid.transverse_threshold()
    thetas = []
    for lam in lams:
        s = assemble_deformed(f, lam, None, grid)
        thetas.append(float(lowest_pairs(s.S, s.M, 1, seed=seed).eigenvalues[0]))
    E = [kappa - t for t in thetas]
    c = [e / lam**2 for e, lam in zip(E, lams)]
    rich = [2 * c[i] - c[i + 1] for i in range(len(c) - 1)]
    second = (4 * rich[0] - rich[1]) / 3 if len(rich) > 1 else None
    ratios = [E[i + 1] / E[i] for i in range(len(E) - 1)]
    return BGRSResult(lams, thetas, [kappa] * len(lams), E, c, rich,
                      float(rich[0]) if rich else float(c[0]), second, ratios, f.integral() ** 2)


# ---------------------------------------------------------------------------
# essential spectrum

@dataclass
class EssentialProbe(_Report):
    lengths: list
    theta_min: list
    deficit: list
    fit_C: float
    monotone: bool


def essential_spectrum_probe(A: VectorPotential | None, lengths, h: float = 0.1, n_y: int = 41,
                             seed: int = DEFAULT_SEED) -> EssentialProbe:
    """Lowest eigenvalue of the straight strip on growing boxes.

    ``fit_C`` is the least-squares ``C`` in ``theta_min - 1 ~ C / L^2``;
    ``deficit`` is ``max(0, 1 - theta_min)``.
    """
    ab = A.p if A is not None and A.kind == "aharonov_bohm" else None
    thetas = []
    for L in lengths:
        g = default_uniform_grid(L, h, n_y, ab)
        s = assemble_straight(A, g)
        thetas.append(float(lowest_pairs(s.S, s.M, 1, seed=seed).eigenvalues[0]))
    L = np.asarray(lengths, float)
    dev = np.asarray(thetas) - 1.0
    C = float(np.sum(dev / L**2) / np.sum(L**-4.0))
    deficit = [max(0.0, -d) for d in dev]
    mono = bool(all(deficit[i + 1] <= deficit[i] + 1e-12 for i in range(len(deficit) - 1)))
    return EssentialProbe([float(v) for v in L], thetas, deficit, C, mono)


# ---------------------------------------------------------------------------
# diamagnetic inequality

@dataclass
class DiamagneticReport(_Report):
    trials: int
    max_violation: float
    violations: int
    tol: float
    modulus: str
    values: list = field(default_factory=list)


_SAMPLE = np.array([1 / 6, 1 / 2, 5 / 6])


def _bilinear(V, xs, ys):
    """Values and gradients of the bilinear interpolant at 3x3 points per cell."""
    hx, hy = np.diff(xs), np.diff(ys)
    s, t = np.meshgrid(_SAMPLE, _SAMPLE, indexing="ij")
    s, t = s.ravel(), t.ravel()
    v00, v10 = V[:-1, :-1, None], V[1:, :-1, None]
    v01, v11 = V[:-1, 1:, None], V[1:, 1:, None]
    val = v00 * (1 - s) * (1 - t) + v10 * s * (1 - t) + v01 * (1 - s) * t + v11 * s * t
    dx = ((v10 - v00) * (1 - t) + (v11 - v01) * t) / hx[:, None, None]
    dy = ((v01 - v00) * (1 - s) + (v11 - v10) * s) / hy[None, :, None]
    X = xs[:-1, None, None] + hx[:, None, None] * s
    Y = ys[None, :-1, None] + hy[None, :, None] * t
    X, Y = np.broadcast_arrays(X, Y)
    return val, dx, dy, X, Y


def random_smooth_function(grid: StripGrid, rng, n_modes: int = 4):
    X, Y = np.meshgrid(grid.xs, grid.ys, indexing="ij")
    V = np.zeros(X.shape, complex)
    for _ in range(n_modes):
        c = rng.standard_normal() + 1j * rng.standard_normal()
        kx = rng.uniform(-1.5, 1.5)
        ky = rng.integers(1, 4)
        ph = rng.uniform(0, 2 * np.pi)
        V += c * np.exp(1j * kx * X) * np.sin(ky * Y + ph) * np.exp(-0.05 * X**2)
    return V


def diamagnetic_violation(V, A: VectorPotential | None, grid: StripGrid,
                          modulus: str = "exact") -> float:
    """Largest ``(|grad |v|| - |(-i grad + A) v|)_+`` relative to ``max |grad v|``.

    ``v`` is the bilinear interpolant of the nodal values. With
    ``modulus="exact"`` the left side is the gradient of ``|v|`` itself,
    ``|Re(conj(v) grad v)| / |v|``; with ``"nodal"`` it is the gradient of
    the bilinear interpolant of the nodal moduli, which carries an
    ``O(h)`` interpolation error. Sample points closer than ``1e-8`` to an
    Aharonov-Bohm point, or where ``v`` vanishes, are skipped.
    """
    val, dx, dy, X, Y = _bilinear(V, grid.xs, grid.ys)
    a1 = np.zeros(X.shape)
    a2 = np.zeros(X.shape)
    keep = np.abs(val) > 1e-14 * np.max(np.abs(val))
    if A is not None:
        if A.kind == "aharonov_bohm":
            keep &= np.hypot(X - A.p[0], Y - A.p[1]) > 1e-8
        a1[keep], a2[keep] = A(X[keep], Y[keep])
    if modulus == "exact":
        mod = np.where(keep, np.abs(val), 1.0)
        mx = np.real(np.conj(val) * dx) / mod
        my = np.real(np.conj(val) * dy) / mod
    elif modulus == "nodal":
        _, mx, my, _, _ = _bilinear(np.abs(V), grid.xs, grid.ys)
    else:
        raise ValueError(f"unknown modulus {modulus!r}")
    lhs = np.hypot(mx, my)
    rhs = np.sqrt(np.abs(-1j * dx + a1 * val) ** 2 + np.abs(-1j * dy + a2 * val) ** 2)
    scale = float(np.max(np.hypot(np.abs(dx), np.abs(dy))))
    viol = np.where(keep, lhs - rhs, -np.inf)
    return float(max(0.0, viol.max()) / scale) if scale > 0 else 0.0


def diamagnetic_check(A: VectorPotential | None, grid: StripGrid, n_random: int = 100,
                      seed: int = DEFAULT_SEED, tol: float = 1e-2,
                      modulus: str = "exact") -> DiamagneticReport:
    """Discrete diamagnetic inequality on ``n_random`` smooth complex functions."""
    rng = np.random.default_rng(seed)
    values = [diamagnetic_violation(random_smooth_function(grid, rng), A, grid, modulus)
              for _ in range(n_random)]
    return DiamagneticReport(n_random, float(max(values)), int(sum(v > tol for v in values)), tol,
                             modulus, values)


# ---------------------------------------------------------------------------
# numerical Hardy constants

@dataclass
class HardyNumeric(_Report):
    c_num: float
    shift: float
    weight: str
    n_dof: int
    L: float
    residual: float
    bracket: list


def numeric_hardy_constant(A: VectorPotential, grid: StripGrid, weight: str | None = None,
                           shift: float | None = None, seed: int = DEFAULT_SEED) -> HardyNumeric:
    """Discrete best ``c`` in ``c int w |u|^2 <= q[u] - shift ||u||^2``.

    The weight defaults to ``1/(1+x^2)`` for bounded fields and
    ``1/(x^2 + (y-y0)^2)`` for Aharonov-Bohm fluxes; the shift defaults
    to the grid's transverse threshold.
    """
    if weight is None:
        weight = "inverse_distance_sq_p" if A.kind == "aharonov_bohm" else "inverse_quadratic_x"
    if shift is None:
        shift = grid.transverse_threshold()
    s = assemble_straight(A, grid)
    W = assemble_weight(grid, weight, A.y0)
    r = smallest_weighted_ratio(s.S, s.M, W, shift=shift, seed=seed)
    return HardyNumeric(r.c_num, float(shift), weight, grid.n_dof, grid.L, r.residual,
                        [float(v) for v in r.bracket])


@dataclass
class HardyComparison(_Report):
    analytic: float
    numeric: list
    dominates: bool
    certificate: dict


def hardy_dominance_bounded(B: MagneticField, grids, R: float = 1.0) -> HardyComparison:
    cert = hardy_certificate(B, None, R)
    A = transversal_potential(B)
    nums = [numeric_hardy_constant(A, g) for g in grids]
    return HardyComparison(cert.c_H, [n.to_dict() for n in nums],
                           bool(all(n.c_num >= cert.c_H for n in nums)), cert.to_dict())


def hardy_dominance_ab(A: VectorPotential, grids, R: float = 1.0) -> HardyComparison:
    cert = ab_certificate(A.Phi, A.y0, R)
    nums = [numeric_hardy_constant(A, g) for g in grids]
    return HardyComparison(cert.c_AB, [n.to_dict() for n in nums],
                           bool(all(n.c_num >= cert.c_AB for n in nums)), cert.to_dict())


# ---------------------------------------------------------------------------
# certificate soundness runs

@dataclass
class StabilityReport(_Report):
    parameter: str
    value: float
    threshold: float
    counts: list
    lengths: list
    stable: bool
    certificate: dict


def stability_run(kind: str, B: MagneticField, profile: Profile, fraction: float = 0.5,
                  lengths=(40.0, 80.0), margin: float = DEFAULT_MARGIN, h: float = 0.1,
                  n_y: int = 41) -> StabilityReport:
    """Check that ``fraction * lambda0`` (or ``beta0``) binds nothing below ``1 - margin``."""
    if kind == "deformed":
        cert = deformed_threshold(B, profile)
        value = fraction * cert.threshold
        build = deformed_builder(profile, value, transversal_potential(B))
    elif kind == "curved":
        cert = curved_threshold(B, profile)
        value = fraction * cert.threshold
        build = curved_builder(profile, value, transversal_potential(B))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    counts = []
    for L in lengths:
        g = default_uniform_grid(L, h, n_y)
        sys_ = build(g)
        counts.append(count_below(sys_.S, sys_.M, 1.0 - margin))
    return StabilityReport("lambda" if kind == "deformed" else "beta", float(value), cert.threshold,
                           counts, [float(v) for v in lengths], bool(all(c == 0 for c in counts)),
                           cert.to_dict())


@dataclass
class CurvedExistence(_Report):
    beta: float
    theta_min: float
    threshold: float
    exists: bool
    below_one: bool


def curved_bound_state(gamma: Profile, beta: float, A: VectorPotential | None = None,
                       grid: StripGrid | None = None, seed: int = DEFAULT_SEED) -> CurvedExistence:
    """Lowest eigenvalue of a bent strip against the transverse threshold.

    Existence is decided by an inertia count; ``theta_min`` is only
    computed when an eigenvalue lies below the threshold (otherwise the
    spectrum clusters at the threshold and ``theta_min`` is reported as it).
    """
    grid = grid or default_graded_grid(n_y=81)
    s = assemble_curved(gamma, beta, A, grid)
    kappa = grid.transverse_threshold()
    if count_below(s.S, s.M, kappa) == 0:
        return CurvedExistence(float(beta), float(kappa), kappa, False, bool(kappa < 1.0))
    theta = float(lowest_pairs(s.S, s.M, 1, seed=seed).eigenvalues[0])
    return CurvedExistence(float(beta), theta, kappa, True, theta < 1.0)

