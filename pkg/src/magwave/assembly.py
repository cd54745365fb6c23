"""Bilinear finite elements for magnetic forms on the straight strip.

Every form handled here has the shape

    q[phi] = int conj(w)^T K(x, y) w dx dy,    w = (phi, phi_x, phi_y),

with a Hermitian 3x3 coefficient field ``K``. The deformed and curved
forms are the pullbacks to ``(-L, L) x (0, pi)`` of the magnetic form on
the physical domain, written out term by term. Degrees of freedom are
the interior nodes (homogeneous Dirichlet data on all four edges).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import GeometryError
from .gauge import VectorPotential
from .geometry import PlaneCurve, Profile, reconstruct_curve, strip_map

_G = 0.5 / np.sqrt(3.0)
_QP = np.array([0.5 - _G, 0.5 + _G])


@dataclass(frozen=True)
class StripGrid:
    """Tensor grid on ``(xs[0], xs[-1]) x (0, pi)``.

    ``xs`` may be graded; ``ys`` is uniform with ``n_y`` nodes.
    """

    xs: np.ndarray
    ys: np.ndarray
    graded: bool = False
    ab_point: tuple[float, float] | None = None

    def __post_init__(self):
        if self.xs.ndim != 1 or self.xs.size < 3 or np.any(np.diff(self.xs) <= 0):
            raise GeometryError("x nodes must be strictly increasing, at least 3")
        if self.ys.size < 3 or np.any(np.diff(self.ys) <= 0):
            raise GeometryError("y nodes must be strictly increasing, at least 3")
        if self.ab_point is not None:
            px, py = self.ab_point
            dmin = np.min(np.hypot(*np.meshgrid(self.xs - px, self.ys - py, indexing="ij")))
            if dmin < min(self.h_x, self.h_y) / 4:
                raise GeometryError(f"flux point is {dmin:.3g} from a node; needs >= min(h)/4")

    @classmethod
    def uniform(cls, L: float, n_x: int, n_y: int, ab_point=None) -> "StripGrid":
        return cls(np.linspace(-L, L, n_x), np.linspace(0.0, np.pi, n_y), False,
                   None if ab_point is None else tuple(map(float, ab_point)))

    @classmethod
    def graded_grid(cls, core: float, h: float, L_far: float, n_y: int,
                    ratio: float = 1.08, ab_point=None) -> "StripGrid":
        """Uniform spacing ``h`` on ``[-core, core]``, then geometric growth
        by ``ratio`` per cell out to ``L_far``."""
        m = int(round(core / h))
        right = [m * h]
        step = h
        while right[-1] < L_far:
            step *= ratio
            right.append(right[-1] + step)
        right = np.array(right[1:])
        inner = np.arange(-m, m + 1) * h
        xs = np.concatenate([-right[::-1], inner, right])
        return cls(xs, np.linspace(0.0, np.pi, n_y), True,
                   None if ab_point is None else tuple(map(float, ab_point)))

    @property
    def L(self) -> float:
        return float(max(-self.xs[0], self.xs[-1]))

    @property
    def n_x(self) -> int:
        return self.xs.size

    @property
    def n_y(self) -> int:
        return self.ys.size

    @property
    def h_x(self) -> float:
        return float(np.min(np.diff(self.xs)))

    @property
    def h_y(self) -> float:
        return float(np.min(np.diff(self.ys)))

    @property
    def n_dof(self) -> int:
        return (self.n_x - 2) * (self.n_y - 2)

    def interior_nodes(self):
        """``(x, y)`` of the interior nodes in DOF order (y fastest)."""
        X, Y = np.meshgrid(self.xs[1:-1], self.ys[1:-1], indexing="ij")
        return X.ravel(), Y.ravel()

    def to_dict(self) -> dict:
        d = {"L": self.L, "n_x": self.n_x, "n_y": self.n_y, "h_x": self.h_x, "h_y": self.h_y,
             "graded": self.graded, "ab_point": self.ab_point}
        if self.graded:
            d["xs"] = self.xs.tolist()
        return d

    def transverse_threshold(self) -> float:
        """Lowest eigenvalue of the 1-D Dirichlet pencil in y.

        This is the bottom of the essential spectrum of the discrete
        field-free operator on an infinitely long strip.
        """
        return _transverse_threshold(tuple(self.ys))


def _transverse_threshold(ys: tuple) -> float:
    ys = np.asarray(ys)
    h = np.diff(ys)
    n = ys.size
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    for e, he in enumerate(h):
        K[e:e + 2, e:e + 2] += np.array([[1, -1], [-1, 1]]) / he
        M[e:e + 2, e:e + 2] += he * np.array([[2, 1], [1, 2]]) / 6
    return float(sla.eigh(K[1:-1, 1:-1], M[1:-1, 1:-1], eigvals_only=True, subset_by_index=[0, 0])[0])


@dataclass
class HermitianFormSystem:
    """Assembled stiffness ``S``, mass ``M`` and optional weight ``W``."""

    S: sp.csr_matrix
    M: sp.csr_matrix
    grid: StripGrid
    descriptor: dict = field(default_factory=dict)
    W: sp.csr_matrix | None = None

    @property
    def n(self) -> int:
        return self.S.shape[0]

    @property
    def threshold(self) -> float:
        """Discrete transverse threshold of the grid (tends to 1 as h_y -> 0)."""
        return self.grid.transverse_threshold()

    def with_weight(self, kind: str, y0: float = np.pi / 2) -> "HermitianFormSystem":
        return HermitianFormSystem(self.S, self.M, self.grid, dict(self.descriptor, weight=kind),
                                   assemble_weight(self.grid, kind, y0))


# ---------------------------------------------------------------------------
# generic assembly


def _cell_geometry(grid: StripGrid):
    """Quadrature points, weights and basis data for every cell.

    Returns ``xq, yq`` (ncell, 4), ``wq`` (ncell, 4) and ``D`` with
    ``D[c, q, a] = (N_a, dN_a/dx, dN_a/dy)`` of shape (ncell, 4, 4, 3),
    plus the global node index of each local node (ncell, 4).
    """
    xs, ys = grid.xs, grid.ys
    nx, ny = xs.size, ys.size
    hx = np.diff(xs)
    hy = np.diff(ys)
    I, J = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    I, J = I.ravel(), J.ravel()
    cx, cy = hx[I], hy[J]
    # quadrature points in reference coordinates, q = 2*qi + qj
    xi = np.repeat(_QP, 2)
    eta = np.tile(_QP, 2)
    xq = xs[I][:, None] + cx[:, None] * xi
    yq = ys[J][:, None] + cy[:, None] * eta
    wq = (cx * cy)[:, None] * np.full(4, 0.25)
    # local nodes: (0,0), (1,0), (0,1), (1,1)
    lx = np.array([0, 1, 0, 1])
    ly = np.array([0, 0, 1, 1])
    Nx = np.where(lx[None, :] == 1, xi[:, None], 1 - xi[:, None])
    Ny = np.where(ly[None, :] == 1, eta[:, None], 1 - eta[:, None])
    dNx = np.where(lx == 1, 1.0, -1.0)[None, :] * Ny
    dNy = np.where(ly == 1, 1.0, -1.0)[None, :] * Nx
    ncell = I.size
    D = np.empty((ncell, 4, 4, 3))
    D[..., 0] = (Nx * Ny)[None]
    D[..., 1] = dNx[None] / cx[:, None, None]
    D[..., 2] = dNy[None] / cy[:, None, None]
    nodes = (I[:, None] + lx[None, :]) * ny + (J[:, None] + ly[None, :])
    return xq, yq, wq, D, nodes


class _Assembler:
    def __init__(self, grid: StripGrid):
        self.grid = grid
        self.xq, self.yq, self.wq, self.D, nodes = _cell_geometry(grid)
        nx, ny = grid.n_x, grid.n_y
        gi, gj = np.divmod(np.arange(nx * ny), ny)
        inner = (gi > 0) & (gi < nx - 1) & (gj > 0) & (gj < ny - 1)
        dof = np.full(nx * ny, -1)
        dof[inner] = np.arange(inner.sum())
        ld = dof[nodes]
        rows = np.repeat(ld, 4, axis=1).ravel()
        cols = np.tile(ld, (1, 4)).ravel()
        self.keep = (rows >= 0) & (cols >= 0)
        self.rows, self.cols = rows[self.keep], cols[self.keep]
        self.n = int(inner.sum())

    def build(self, K) -> sp.csr_matrix:
        """Assemble from the coefficient field ``K`` of shape (ncell, 4, 3, 3)."""
        Kw = K * self.wq[..., None, None]
        loc = np.einsum("cqai,cqij,cqbj->cab", self.D, Kw, self.D, optimize=True)
        data = loc.reshape(-1)[self.keep]
        A = sp.coo_matrix((data, (self.rows, self.cols)), shape=(self.n, self.n)).tocsr()
        A.sum_duplicates()
        return A

    def scalar(self, w) -> sp.csr_matrix:
        K = np.zeros(self.xq.shape + (3, 3))
        K[..., 0, 0] = w
        return self.build(K).real.tocsr()


_ASSEMBLERS: dict[int, _Assembler] = {}


def _assembler(grid: StripGrid) -> _Assembler:
    key = id(grid)
    a = _ASSEMBLERS.get(key)
    if a is None or a.grid is not grid:
        if len(_ASSEMBLERS) > 8:
            _ASSEMBLERS.clear()
        a = _Assembler(grid)
        _ASSEMBLERS[key] = a
    return a


def _mass(asm: _Assembler) -> sp.csr_matrix:
    if not hasattr(asm, "_M"):
        asm._M = asm.scalar(np.ones_like(asm.xq))
    return asm._M


def _add_square(K, c):
    """K += conj(c) c^T, i.e. the integrand |c . w|^2."""
    K += np.conj(c)[..., :, None] * c[..., None, :]


def magnetic_coefficients(a1, a2):
    """Coefficient field of ``|-i phi_x + a1 phi|^2 + |-i phi_y + a2 phi|^2``."""
    K = np.zeros(a1.shape + (3, 3), complex)
    c = np.zeros(a1.shape + (3,), complex)
    c[..., 0], c[..., 1] = a1, -1j
    _add_square(K, c)
    c[:] = 0
    c[..., 0], c[..., 2] = a2, -1j
    _add_square(K, c)
    return K


def _potential(A: VectorPotential | None, x, y):
    if A is None:
        return np.zeros_like(x), np.zeros_like(x)
    return A(x, y)


def assemble_straight(A: VectorPotential | None, grid: StripGrid) -> HermitianFormSystem:
    """Stiffness of ``int |(-i grad + A) u|^2`` and the L2 mass."""
    asm = _assembler(grid)
    a1, a2 = _potential(A, asm.xq, asm.yq)
    S = asm.build(magnetic_coefficients(a1, a2))
    desc = {"form": "straight", "potential": None if A is None else A.to_dict()}
    return HermitianFormSystem(S, _mass(asm), grid, desc)


def deformed_coefficients(x, y, f: Profile, lam: float, a1, a2):
    """Coefficient field of the pulled-back form on a deformed strip.

    Terms, with ``g = 1 + lam f`` and ``g' = lam f'``:
    ``|-i phi_x + a1 phi|^2 + |-i phi_y + a2 phi|^2 - |phi_y|^2
    - g'/(2g) (phi conj(phi_x) + c.c.) - (g'/g)^2/4 |phi|^2
    - y g'/g (phi_x conj(phi_y) + c.c.) + (y^2 g'^2 + 1)/g^2 |phi_y|^2
    + i (y g' a1 + lam f a2)/g (phi_y conj(phi) - phi conj(phi_y))``.
    """
    g = 1.0 + lam * f(x)
    gp = lam * f.deriv(x)
    K = magnetic_coefficients(a1, a2)
    K[..., 2, 2] -= 1.0
    t = -gp / (2 * g)
    K[..., 0, 1] += t
    K[..., 1, 0] += t
    K[..., 0, 0] -= 0.25 * (gp / g) ** 2
    t = -y * gp / g
    K[..., 1, 2] += t
    K[..., 2, 1] += t
    K[..., 2, 2] += (y * y * gp * gp + 1.0) / (g * g)
    b = (y * gp * a1 + lam * f(x) * a2) / g
    K[..., 0, 2] += 1j * b
    K[..., 2, 0] -= 1j * b
    return K


def assemble_deformed(f: Profile, lam: float, A: VectorPotential | None,
                      grid: StripGrid) -> HermitianFormSystem:
    smap = strip_map(f, "deformed", lam)
    asm = _assembler(grid)
    x, y = asm.xq, asm.yq
    a1, a2 = _potential(A, x, smap.g(x) * y)
    S = asm.build(deformed_coefficients(x, y, f, lam, a1, a2))
    desc = {"form": "deformed", "lambda": float(lam), "profile": f.to_dict(),
            "potential": None if A is None else A.to_dict()}
    return HermitianFormSystem(S, _mass(asm), grid, desc)


def curved_coefficients(x, y, kappa, kappa_p, frame, a1, a2):
    """Coefficient field of the pulled-back form on a bent strip.

    ``kappa = beta * gamma`` and ``frame = (a', b', a'', b'')`` at ``x``;
    ``a1, a2`` are the potential at the tubular point
    ``(a - y b', b + y a')``. Terms, with ``J = 1 + y kappa``:
    ``|phi_x|^2/J^2 - i c1/J (phi_x conj(phi) - phi conj(phi_x)) + |phi_y|^2
    - i c2/J (phi_y conj(phi) - phi conj(phi_y))
    - y kappa'/(2 J^3) (phi conj(phi_x) + c.c.) - kappa/(2J) (phi conj(phi_y) + c.c.)
    + (y^2 kappa'^2/(4J^4) + kappa^2/(4J^2) + a1^2 + a2^2) |phi|^2`` with
    ``c1 = a' a1 + b' a2`` and ``c2 = -(b' + y a'') a1 + (a' - y b'') a2``.
    """
    ap, bp, app, bpp = frame
    J = 1.0 + y * kappa
    c1 = ap * a1 + bp * a2
    c2 = -(bp + y * app) * a1 + (ap - y * bpp) * a2
    K = np.zeros(x.shape + (3, 3), complex)
    K[..., 1, 1] = 1.0 / (J * J)
    K[..., 2, 2] = 1.0
    K[..., 0, 1] = -1j * c1 / J
    K[..., 1, 0] = 1j * c1 / J
    K[..., 0, 2] = -1j * c2 / J
    K[..., 2, 0] = 1j * c2 / J
    t = -y * kappa_p / (2 * J**3)
    K[..., 0, 1] += t
    K[..., 1, 0] += t
    t = -kappa / (2 * J)
    K[..., 0, 2] += t
    K[..., 2, 0] += t
    K[..., 0, 0] = (y * y * kappa_p**2 / (4 * J**4) + kappa**2 / (4 * J * J)
                    + a1 * a1 + a2 * a2)
    return K


def assemble_curved(gamma: Profile, beta: float, A: VectorPotential | None,
                    grid: StripGrid, curve: PlaneCurve | None = None) -> HermitianFormSystem:
    strip_map(gamma, "curved", beta)
    kg = gamma.scaled(beta)
    if curve is None:
        curve = reconstruct_curve(kg, grid.xs)
    elif curve.gamma.to_dict() != kg.to_dict():
        raise GeometryError("curve was reconstructed from a different curvature than beta*gamma")
    asm = _assembler(grid)
    x, y = asm.xq, asm.yq
    if beta == 0:
        a, b, ap, bp, app, bpp = x, np.zeros_like(x), np.ones_like(x), *(np.zeros_like(x),) * 3
    else:
        a, b, ap, bp, app, bpp = curve.frame(x)
    a1, a2 = _potential(A, a - y * bp, b + y * ap)
    K = curved_coefficients(x, y, kg(x), kg.deriv(x), (ap, bp, app, bpp), a1, a2)
    S = asm.build(K)
    desc = {"form": "curved", "beta": float(beta), "profile": gamma.to_dict(),
            "potential": None if A is None else A.to_dict()}
    return HermitianFormSystem(S, _mass(asm), grid, desc)


WEIGHT_KINDS = ("inverse_quadratic_x", "inverse_distance_sq_p")


def assemble_weight(grid: StripGrid, kind: str, y0: float = np.pi / 2) -> sp.csr_matrix:
    """Weight operator for ``1/(1+x^2)`` or ``1/(x^2 + (y-y0)^2)``."""
    asm = _assembler(grid)
    x, y = asm.xq, asm.yq
    if kind == "inverse_quadratic_x":
        w = 1.0 / (1.0 + x * x)
    elif kind == "inverse_distance_sq_p":
        w = 1.0 / (x * x + (y - y0) ** 2)
    else:
        raise ValueError(f"unknown weight kind {kind!r}")
    return asm.scalar(w)


def hermiticity_defect(A: sp.spmatrix) -> float:
    D = (A - A.conj().T).tocoo()
    return float(np.max(np.abs(D.data))) if D.nnz else 0.0


# ---------------------------------------------------------------------------
# export


def export_triplets(system: HermitianFormSystem, stem) -> list[Path]:
    """Write ``<stem>.S.txt``, ``<stem>.M.txt`` (and ``.W.txt``) as
    ``row col re im`` lines, plus a ``<stem>.json`` sidecar."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    written = []
    mats = {"S": system.S, "M": system.M}
    if system.W is not None:
        mats["W"] = system.W
    for name, mat in mats.items():
        coo = sp.coo_matrix(mat)
        order = np.lexsort((coo.col, coo.row))
        data = np.asarray(coo.data, complex)[order]
        table = np.column_stack([coo.row[order], coo.col[order], data.real, data.imag])
        path = stem.with_name(f"{stem.name}.{name}.txt")
        np.savetxt(path, table, fmt=["%d", "%d", "%.17e", "%.17e"],
                   header=f"row col re im; shape {mat.shape[0]} {mat.shape[1]}")
        written.append(path)
    side = stem.with_name(f"{stem.name}.json")
    meta = {"n": system.n, "matrices": sorted(mats), "grid": system.grid.to_dict(),
            "descriptor": system.descriptor, "dof_order": "x-major, y fastest, interior nodes"}
    side.write_text(json.dumps(meta, indent=2, sort_keys=True))
    written.append(side)
    return written


def import_triplets(path, n: int) -> sp.csr_matrix:
    t = np.loadtxt(path, ndmin=2)
    return sp.coo_matrix((t[:, 2] + 1j * t[:, 3], (t[:, 0].astype(int), t[:, 1].astype(int))),
                         shape=(n, n)).tocsr()
