"""Lowest eigenpairs of Hermitian pencils ``S u = theta M u``.

Sparse problems use shift-invert Lanczos (``scipy.sparse.linalg.eigsh``)
with the shift placed just below the spectrum by Sylvester inertia
counts, or LOBPCG with a Jacobi preconditioner. Problems below
``DENSE_THRESHOLD`` unknowns go to LAPACK.

Residuals are reported in the dual norm ``||S u - theta M u||_{M^-1}``
for ``u`` normalized in ``M``; this norm bounds the distance from each
Ritz value to the spectrum.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import IndefiniteNumerator, NoConvergence

DENSE_THRESHOLD = 2000
NEXT_PAIR_MAXITER = 30
DEFAULT_SEED = 0xC0FFEE


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    residuals: np.ndarray
    iterations: int = 0
    method: str = ""
    descriptor: dict = field(default_factory=dict)
    certificate: dict | None = None

    def __len__(self):
        return len(self.eigenvalues)

    def to_dict(self) -> dict:
        return {"eigenvalues": [float(v) for v in self.eigenvalues],
                "residuals": [float(v) for v in self.residuals],
                "iterations": int(self.iterations), "method": self.method,
                "descriptor": self.descriptor, "certificate": self.certificate}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralResult":
        return cls(np.asarray(d["eigenvalues"], float), None, np.asarray(d["residuals"], float),
                   d.get("iterations", 0), d.get("method", ""), d.get("descriptor", {}),
                   d.get("certificate"))

    def csv_rows(self):
        return [(i, float(t), float(r)) for i, (t, r) in enumerate(zip(self.eigenvalues, self.residuals))]


def _as_sparse(A):
    return A.tocsc() if sp.issparse(A) else sp.csc_matrix(A)


def _ldl_inertia(A) -> int:
    """Number of negative eigenvalues of the Hermitian matrix ``A``.

    Uses an LU factorization without pivoting or column reordering, whose
    ``U`` diagonal is the ``D`` of ``A = L D L^H``.
    """
    lu = spla.splu(_as_sparse(A), permc_spec="NATURAL", diag_pivot_thresh=0.0,
                   options={"SymmetricMode": True})
    d = lu.U.diagonal()
    if not np.all(lu.perm_r == np.arange(A.shape[0])) or np.any(d == 0):
        raise ZeroDivisionError("pivoting occurred")
    return int(np.sum(d.real < 0))


def count_below(S, M, sigma: float) -> int:
    """Number of eigenvalues of the pencil ``(S, M)`` below ``sigma``."""
    n = S.shape[0]
    if n < 400:
        return int(np.sum(sla.eigh(_dense(S), _dense(M), eigvals_only=True) < sigma))
    A = _as_sparse(S) - sigma * _as_sparse(M)
    for bump in (0.0, 1e-13, -1e-13, 1e-11):
        try:
            return _ldl_inertia(A - bump * abs(sigma) * _as_sparse(M) if bump else A)
        except (ZeroDivisionError, RuntimeError):
            continue
    return int(np.sum(sla.eigh(_dense(S), _dense(M), eigvals_only=True) < sigma))


def _dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A)


def _residuals(S, M, vals, vecs, Msolve=None):
    R = S @ vecs - (M @ vecs) * vals
    if Msolve is None:
        Msolve = spla.splu(_as_sparse(M).astype(complex)).solve if sp.issparse(M) else (lambda b: sla.solve(M, b))
    out = []
    for i in range(len(vals)):
        r = R[:, i]
        z = Msolve(r)
        out.append(np.sqrt(abs(np.vdot(r, z).real)))
    return np.asarray(out)


def _m_normalize(M, vecs):
    # Gram-Schmidt in the M inner product; Lanczos returns nearly orthogonal vectors
    G = vecs.conj().T @ (M @ vecs)
    G = 0.5 * (G + G.conj().T)
    Lc = sla.cholesky(G, lower=True)
    return sla.solve_triangular(Lc, vecs.T, lower=True).T


def _shift_below(S, M, k: int, max_steps: int = 8):
    """A shift strictly below the lowest eigenvalue, close to it."""
    lo = 0.0
    step = 1.0
    while count_below(S, M, lo) > 0:
        lo -= step
        step *= 4
    hi = lo + 1.0
    step = 1.0
    while count_below(S, M, hi) < k:
        hi += step
        step *= 2
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        if count_below(S, M, mid) == 0:
            lo = mid
        else:
            hi = mid
    return lo - 1e-3 * (hi - lo), hi


def lowest_pairs(S, M, k: int, tol: float = 1e-8, method: str = "auto", sigma: float | None = None,
                 seed: int = DEFAULT_SEED, maxiter: int | None = None,
                 dense_threshold: int = DENSE_THRESHOLD, descriptor: dict | None = None) -> SpectralResult:
    """The ``k`` smallest eigenpairs of ``S u = theta M u``.

    method is ``auto`` (dense below ``dense_threshold``, else shift-invert),
    ``dense``, ``shift_invert`` or ``lobpcg``.
    """
    n = S.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must lie in [1, {n}]")
    if method == "auto":
        method = "dense" if n < dense_threshold else "shift_invert"
    rng = np.random.default_rng(seed)
    iters = 0
    if method == "dense":
        vals, vecs = sla.eigh(_dense(S), _dense(M), subset_by_index=[0, k - 1])
        iters = 1
    elif method == "shift_invert":
        if sigma is None:
            sigma, _ = _shift_below(S, M, k)
        v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        Sc, Mc = _as_sparse(S).astype(complex), _as_sparse(M).astype(complex)
        try:
            vals, vecs = spla.eigsh(Sc, k=k, M=Mc, sigma=sigma, which="LM", v0=v0,
                                    ncv=min(n, max(2 * k + 1, 20)), tol=1e-13,
                                    maxiter=maxiter or 20 * n)
        except spla.ArpackNoConvergence as exc:
            raise NoConvergence("shift-invert Lanczos did not converge",
                                best=(exc.eigenvalues, exc.eigenvectors)) from exc
        order = np.argsort(vals.real)
        vals, vecs = vals.real[order], vecs[:, order]
    elif method == "lobpcg":
        X = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        dS = np.asarray(_as_sparse(S).diagonal()).real
        dS = np.where(dS > 0, dS, 1.0)
        P = sp.diags(1.0 / dS)
        vals, vecs, hist = spla.lobpcg(_as_sparse(S).astype(complex), X, B=_as_sparse(M).astype(complex),
                                       M=P, largest=False, tol=tol, maxiter=maxiter or 2000,
                                       retResidualNormsHistory=True)
        iters = len(hist)
        order = np.argsort(vals.real)
        vals, vecs = vals.real[order], vecs[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")
    vecs = _m_normalize(M, vecs)
    res = _residuals(S, M, vals, vecs)
    out = SpectralResult(np.asarray(vals, float), vecs, res, iters, method, descriptor or {})
    if np.any(res > tol):
        raise NoConvergence(f"residual {res.max():.2e} exceeds tolerance {tol:.1e}", best=out)
    return out


def discrete_spectrum_below_threshold(system, threshold: float = 1.0, margin: float = 0.0,
                                      tol: float = 1e-8, method: str = "auto",
                                      seed: int = DEFAULT_SEED) -> SpectralResult:
    """All eigenvalues below ``threshold - margin`` with a certificate.

    The count comes from Sylvester inertia of ``S - cut M``, which also
    bounds the next eigenvalue from below by the cut. The next eigenpair is
    attempted with a capped iteration budget; when it lies in a dense
    cluster (long graded meshes) the inertia bound is reported instead.
    """
    S, M = system.S, system.M
    cut = threshold - margin
    m = count_below(S, M, cut)
    n = S.shape[0]
    desc = dict(system.descriptor)
    res = None
    if m + 1 <= n:
        try:
            res = lowest_pairs(S, M, m + 1, tol=tol, method=method, seed=seed, descriptor=desc,
                               maxiter=NEXT_PAIR_MAXITER)
        except NoConvergence:
            res = None
    if res is None:
        if m > 0:
            res = lowest_pairs(S, M, m, tol=tol, method=method, seed=seed, descriptor=desc)
        else:
            res = SpectralResult(np.zeros(0), None, np.zeros(0), 0, "inertia", desc)
    below = res.eigenvalues < cut
    if m < len(res):
        nxt, nres = float(res.eigenvalues[m]), float(res.residuals[m])
        lower = max(cut, nxt - nres)
    else:
        nxt, nres, lower = None, None, float(cut)
    cert = {"threshold": float(threshold), "margin": float(margin), "cut": float(cut),
            "inertia_count": int(m), "next_eigenvalue": nxt, "next_residual": nres,
            "next_lower_bound": lower, "certified": bool(int(below.sum()) == m)}
    return SpectralResult(res.eigenvalues[:m], None if res.eigenvectors is None else res.eigenvectors[:, :m],
                          res.residuals[:m], res.iterations, res.method, res.descriptor, cert)


@dataclass
class WeightedRatio:
    c_num: float
    minimizer: np.ndarray
    shift: float
    deficit: float
    residual: float
    bracket: tuple = (np.nan, np.nan)

    def to_dict(self) -> dict:
        return {"c_num": self.c_num, "shift": self.shift, "deficit": self.deficit,
                "residual": self.residual, "bracket": [float(v) for v in self.bracket]}


def smallest_weighted_ratio(S, M, W, shift: float = 1.0, allow_deficit_shift: bool = False,
                            tol: float = 1e-8, method: str = "auto",
                            seed: int = DEFAULT_SEED) -> WeightedRatio:
    """Smallest eigenvalue of ``(S - shift M) u = c W u``.

    This is the discrete best constant ``c`` in
    ``c u*Wu <= u*(S - shift M)u``. When the weight decays strongly over
    the grid the dual-norm residual is dominated by rounding, so a
    residual above ``tol`` falls back on inertia bisection: ``c_num`` is
    then the lower end of a bracket of relative width ``1e-6`` on which
    the count of ``S - shift M - c W`` changes from zero. An indefinite numerator raises
    :class:`IndefiniteNumerator` unless ``allow_deficit_shift`` is set, in
    which case the shift is lowered to the smallest eigenvalue of
    ``(S, M)`` and the deficit is reported.
    """
    deficit = 0.0
    if count_below(S, M, shift) > 0:
        theta = lowest_pairs(S, M, 1, tol=tol, method=method, seed=seed).eigenvalues[0]
        deficit = float(theta - shift)
        if not allow_deficit_shift:
            raise IndefiniteNumerator(f"S - {shift} M has eigenvalue {deficit:.3e} < 0",
                                      most_negative=deficit)
        shift = float(theta)
    A = (S - shift * M) if sp.issparse(S) else _dense(S) - shift * _dense(M)
    if sp.issparse(A):
        A = A.tocsr()
    res = lowest_pairs(A, W, 1, tol=np.inf, method=method, seed=seed)
    c = float(res.eigenvalues[0])
    bracket = (np.nan, np.nan)
    if res.residuals[0] > tol:
        lo, hi = _inertia_bracket(A, W, c)
        bracket = (lo, hi)
        c = lo
    return WeightedRatio(c, res.eigenvectors[:, 0], float(shift), deficit,
                         float(res.residuals[0]), bracket)


def _inertia_bracket(A, W, c: float, rel: float = 1e-6, max_expand: int = 40):
    """Bracket ``[lo, hi]`` of the lowest eigenvalue of ``(A, W)`` near ``c``
    from inertia counts, with ``hi - lo <= rel * |c|``."""
    step = rel * abs(c)
    lo, hi = c - step, c + step
    for _ in range(max_expand):
        if count_below(A, W, lo) == 0:
            break
        lo -= step
        step *= 2
    else:
        raise NoConvergence("no lower inertia bound near the Ritz value")
    step = rel * abs(c)
    for _ in range(max_expand):
        if count_below(A, W, hi) >= 1:
            break
        hi += step
        step *= 2
    else:
        raise NoConvergence("no upper inertia bound near the Ritz value")
    while hi - lo > rel * abs(c):
        mid = 0.5 * (lo + hi)
        if count_below(A, W, mid) == 0:
            lo = mid
        else:
            hi = mid
    return float(lo), float(hi)
