import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from conftest import q1_fields, random_vector
from magwave.assembly import (StripGrid, assemble_curved, assemble_deformed, assemble_straight,
                              assemble_weight, export_triplets, hermiticity_defect, import_triplets)
from magwave.errors import GeometryError
from magwave.gauge import ab_potential, reference_field, transversal_potential
from magwave.geometry import bump_profile, bump_with_integral, reconstruct_curve


def _p1_1d(nodes):
    n = nodes.size
    K, M = np.zeros((n, n)), np.zeros((n, n))
    for e, h in enumerate(np.diff(nodes)):
        K[e:e + 2, e:e + 2] += np.array([[1, -1], [-1, 1]]) / h
        M[e:e + 2, e:e + 2] += h * np.array([[2, 1], [1, 2]]) / 6
    return K[1:-1, 1:-1], M[1:-1, 1:-1]


def test_field_free_matches_tensor_product(small_grid):
    g = small_grid
    s = assemble_straight(None, g)
    Kx, Mx = _p1_1d(g.xs)
    Ky, My = _p1_1d(g.ys)
    S = np.kron(Kx, My) + np.kron(Mx, Ky)
    M = np.kron(Mx, My)
    assert np.allclose(s.S.toarray(), S, atol=1e-13)
    assert np.allclose(s.M.toarray(), M, atol=1e-13)


def test_transverse_threshold_is_1d_eigenvalue():
    g = StripGrid.uniform(2.0, 5, 41)
    Ky, My = _p1_1d(g.ys)
    assert g.transverse_threshold() == pytest.approx(sla.eigh(Ky, My, eigvals_only=True)[0], rel=1e-13)
    assert g.transverse_threshold() == pytest.approx(1.0, rel=1e-3)


def test_magnetic_form_matches_quadrature(small_grid):
    A = transversal_potential(reference_field())
    s = assemble_straight(A, small_grid)
    u = random_vector(s.n, 1)
    x, y, w, v, vx, vy = q1_fields(small_grid, u)
    a1, a2 = A(x, y)
    q = np.sum(w * (np.abs(-1j * vx + a1 * v) ** 2 + np.abs(-1j * vy + a2 * v) ** 2))
    assert np.vdot(u, s.S @ u).real == pytest.approx(q, rel=1e-12)


def test_deformed_form_matches_physical_domain(small_grid):
    """Pull back by hand: Phi(X, Y) = u(X, Y/g) / sqrt(g) on 0 < Y < pi g(X)."""
    f = bump_profile("deformation", 0.8, 2.0)
    lam = 0.6
    A = transversal_potential(reference_field())
    s = assemble_deformed(f, lam, A, small_grid)
    u = random_vector(s.n, 2)
    x, y, w, v, vx, vy = q1_fields(small_grid, u)
    g, gp = 1 + lam * f(x), lam * f.deriv(x)
    PX = (vx - y * gp / g * vy) / np.sqrt(g) - gp / (2 * g**1.5) * v
    PY = vy / g**1.5
    P = v / np.sqrt(g)
    a1, a2 = A(x, g * y)
    q = np.sum(w * g * (np.abs(-1j * PX + a1 * P) ** 2 + np.abs(-1j * PY + a2 * P) ** 2))
    assert np.vdot(u, s.S @ u).real == pytest.approx(q, rel=1e-12)
    assert np.vdot(u, s.M @ u).real == pytest.approx(np.sum(w * g * np.abs(P) ** 2), rel=1e-12)


def test_curved_form_matches_physical_domain(small_grid):
    """Tubular coordinates X = a - y b', Y = b + y a', Phi = u / sqrt(1 + y kappa)."""
    gamma = bump_profile("curvature", 1.0, 2.0)
    beta = 0.3
    A = transversal_potential(reference_field())
    s = assemble_curved(gamma, beta, A, small_grid)
    u = random_vector(s.n, 3)
    x, y, w, v, vx, vy = q1_fields(small_grid, u)
    kg = gamma.scaled(beta)
    curve = reconstruct_curve(kg, small_grid.xs)
    a, b, ap, bp, _, _ = curve.frame(x)
    kap, kapp = kg(x), kg.deriv(x)
    J = 1 + y * kap
    Px = vx / np.sqrt(J) - y * kapp * v / (2 * J**1.5)
    Py = vy / np.sqrt(J) - kap * v / (2 * J**1.5)
    # Jacobian [[a' J, -b'], [b' J, a']]; grad_XY = Jac^{-T} grad_xy
    PX = (ap * Px / J - bp * Py)
    PY = (bp * Px / J + ap * Py)
    P = v / np.sqrt(J)
    a1, a2 = A(a - y * bp, b + y * ap)
    q = np.sum(w * J * (np.abs(-1j * PX + a1 * P) ** 2 + np.abs(-1j * PY + a2 * P) ** 2))
    assert np.vdot(u, s.S @ u).real == pytest.approx(q, rel=1e-10)


def test_zero_strength_reduces_to_straight(small_grid):
    A = transversal_potential(reference_field())
    st_ = assemble_straight(A, small_grid).S
    d = assemble_deformed(bump_with_integral("deformation", 1.0, 2.0), 0.0, A, small_grid).S
    c = assemble_curved(bump_profile("curvature", 1.0, 2.0), 0.0, A, small_grid).S
    assert abs(d - st_).max() < 1e-13
    assert abs(c - st_).max() < 1e-13


@settings(max_examples=15, deadline=None)
@given(lam=st.floats(0.0, 1.5), beta=st.floats(0.0, 0.4), alpha=st.floats(-2, 2))
def test_forms_are_hermitian_and_nonnegative(lam, beta, alpha):
    g = StripGrid.uniform(2.5, 13, 7)
    A = transversal_potential(reference_field(alpha))
    for s in (assemble_deformed(bump_profile("deformation", 1.0, 2.0), lam, A, g),
              assemble_curved(bump_profile("curvature", 1.0, 2.0), beta, A, g)):
        assert hermiticity_defect(s.S) < 1e-12 * abs(s.S).max()
        assert sla.eigvalsh(s.S.toarray()).min() > -1e-10


def test_ab_grid_rejects_flux_on_node():
    with pytest.raises(GeometryError):
        StripGrid.uniform(2.0, 21, 21, (0.0, np.pi / 2))
    g = StripGrid.uniform(2.0, 22, 22, (0.0, np.pi / 2))
    s = assemble_straight(ab_potential(0.5), g)
    assert hermiticity_defect(s.S) < 1e-10


def test_weight_matches_quadrature(small_grid):
    W = assemble_weight(small_grid, "inverse_quadratic_x")
    u = random_vector(W.shape[0], 4)
    x, y, w, v, _, _ = q1_fields(small_grid, u)
    assert np.vdot(u, W @ u).real == pytest.approx(np.sum(w * np.abs(v) ** 2 / (1 + x * x)), rel=1e-12)
    with pytest.raises(ValueError):
        assemble_weight(small_grid, "gaussian")


def test_graded_grid_shape():
    g = StripGrid.graded_grid(5.0, 0.25, 1e3, 9)
    # the mesh stops at the first node beyond L_far
    assert g.graded and g.xs[-1] >= 1e3 > g.xs[-2]
    assert np.allclose(g.xs, -g.xs[::-1])
    core = g.xs[np.abs(g.xs) <= 5.0 + 1e-12]
    assert np.allclose(np.diff(core), 0.25)
    steps = np.diff(g.xs[g.xs >= 5.0])
    assert np.all(steps[1:-1] / steps[:-2] <= 1.08 + 1e-9)


def test_triplet_round_trip(tmp_path, small_grid):
    s = assemble_straight(transversal_potential(reference_field()), small_grid).with_weight(
        "inverse_quadratic_x")
    files = export_triplets(s, tmp_path / "sys")
    assert len(files) == 4
    for name, mat in (("S", s.S), ("M", s.M), ("W", s.W)):
        back = import_triplets(tmp_path / f"sys.{name}.txt", s.n)
        assert sp.linalg.norm(back - mat) == 0.0
