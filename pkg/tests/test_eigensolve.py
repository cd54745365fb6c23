import json

import numpy as np
import pytest
import scipy.sparse as sp

from magwave.assembly import StripGrid, assemble_deformed, assemble_straight, assemble_weight
from magwave.eigensolve import (SpectralResult, count_below, discrete_spectrum_below_threshold,
                                lowest_pairs, smallest_weighted_ratio)
from magwave.errors import IndefiniteNumerator
from magwave.gauge import ab_potential, custom_potential
from magwave.geometry import bump_with_integral


def _random_pencil(rng, n):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    S = X @ X.conj().T / n + np.diag(rng.uniform(0, 1, n))
    Y = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = Y @ Y.conj().T / n + np.eye(n)
    return S, M


def _cholesky_oracle(S, M):
    L = np.linalg.cholesky(M)
    Li = np.linalg.inv(L)
    return np.linalg.eigvalsh(Li @ S @ Li.conj().T)


def test_diagonal_example():
    r = lowest_pairs(np.diag([3.0, 1.0, 2.0]), np.eye(3), 2)
    assert np.allclose(r.eigenvalues, [1.0, 2.0])


@pytest.mark.parametrize("method", ["dense", "shift_invert"])
def test_fifty_random_pencils_match_dense_oracle(method):
    rng = np.random.default_rng(2024)
    for trial in range(50):
        n = int(rng.integers(10, 81))
        S, M = _random_pencil(rng, n)
        k = min(n - 1, 6) if method == "shift_invert" else n
        res = lowest_pairs(sp.csr_matrix(S), sp.csr_matrix(M), k, method=method)
        ref = _cholesky_oracle(S, M)[:k]
        assert np.max(np.abs(res.eigenvalues - ref) / np.abs(ref)) <= 1e-8, trial
        G = res.eigenvectors.conj().T @ M @ res.eigenvectors
        assert np.max(np.abs(G - np.eye(k))) <= 1e-8
        assert np.all(np.diff(res.eigenvalues) >= 0)


def test_lobpcg_path_matches_oracle():
    rng = np.random.default_rng(5)
    S, M = _random_pencil(rng, 60)
    res = lowest_pairs(sp.csr_matrix(S), sp.csr_matrix(M), 3, method="lobpcg", tol=1e-7)
    assert np.allclose(res.eigenvalues, _cholesky_oracle(S, M)[:3], rtol=1e-8)


def test_one_dimensional_dirichlet_laplacian():
    n = 200
    y = np.linspace(0, np.pi, n)
    h = y[1] - y[0]
    K = sp.diags([-np.ones(n - 3), 2 * np.ones(n - 2), -np.ones(n - 3)], [-1, 0, 1]) / h
    M = sp.diags([np.ones(n - 3), 4 * np.ones(n - 2), np.ones(n - 3)], [-1, 0, 1]) * h / 6
    r = lowest_pairs(K.tocsr(), M.tocsr(), 3, method="shift_invert")
    assert np.allclose(r.eigenvalues, [1, 4, 9], rtol=5e-3)
    assert np.allclose(r.eigenvalues, _cholesky_oracle(K.toarray(), M.toarray())[:3], rtol=1e-9)


def test_count_below_matches_dense():
    rng = np.random.default_rng(11)
    S, M = _random_pencil(rng, 500)
    ref = _cholesky_oracle(S, M)
    for sigma in (ref[0] - 0.1, ref[3] + 1e-6, ref[100] + 1e-6):
        assert count_below(sp.csr_matrix(S), sp.csr_matrix(M), sigma) == int(np.sum(ref < sigma))


def test_straight_strip_spectrum_empty():
    g = StripGrid.uniform(40.0, 801, 41)
    res = discrete_spectrum_below_threshold(assemble_straight(None, g), 1.0, 0.01)
    assert len(res) == 0 and res.certificate["certified"]
    assert res.certificate["next_lower_bound"] >= 0.99


def test_deformed_strip_has_one_bound_state():
    g = StripGrid.uniform(40.0, 401, 21)
    f = bump_with_integral("deformation", 1.0, 2.0)
    res = discrete_spectrum_below_threshold(assemble_deformed(f, 0.2, None, g), g.transverse_threshold())
    assert len(res) == 1 and res.certificate["certified"]


def test_gauge_shift_invariance_converges():
    """A constant a1 is a pure gauge; the discrete gap closes at second order in h."""
    shifted_A = custom_potential(lambda x, y: (0.7 + 0 * x, 0 * y))
    gaps = []
    for n in (61, 121, 241):
        g = StripGrid.uniform(6.0, n, 15)
        p, s = assemble_straight(None, g), assemble_straight(shifted_A, g)
        gaps.append(lowest_pairs(s.S, s.M, 1).eigenvalues[0] - lowest_pairs(p.S, p.M, 1).eigenvalues[0])
    gaps = np.array(gaps)
    assert np.all(gaps > 0) and gaps[0] < 2e-3
    assert np.all(np.log2(gaps[:-1] / gaps[1:]) >= 1.9)


def test_dirichlet_restriction_is_monotone():
    vals = []
    for L in (5.0, 10.0, 20.0):
        g = StripGrid.uniform(L, int(round(2 * L / 0.25)) + 1, 13)
        s = assemble_straight(None, g)
        vals.append(lowest_pairs(s.S, s.M, 1).eigenvalues[0])
    assert vals[0] >= vals[1] >= vals[2]


def test_weighted_ratio_identities():
    g = StripGrid.uniform(4.0, 41, 11)
    s = assemble_straight(None, g)
    theta = lowest_pairs(s.S, s.M, 1).eigenvalues[0]
    r = smallest_weighted_ratio(s.S, s.M, s.M, shift=1.0, allow_deficit_shift=True)
    assert r.c_num == pytest.approx(theta - 1.0, abs=1e-10)
    W = assemble_weight(g, "inverse_quadratic_x")
    r = smallest_weighted_ratio(s.S, s.M, W, shift=g.transverse_threshold())
    rng = np.random.default_rng(3)
    A = s.S - g.transverse_threshold() * s.M
    for _ in range(20):
        u = rng.standard_normal(s.n) + 1j * rng.standard_normal(s.n)
        assert r.c_num <= np.vdot(u, A @ u).real / np.vdot(u, W @ u).real + 1e-12
    with pytest.raises(IndefiniteNumerator):
        smallest_weighted_ratio(s.S, s.M, W, shift=theta + 0.5)


def test_field_free_hardy_ratio_vanishes_with_length():
    vals = []
    for L in (10.0, 20.0, 40.0):
        g = StripGrid.uniform(L, int(round(2 * L / 0.4)) + 1, 11)
        s = assemble_straight(None, g)
        W = assemble_weight(g, "inverse_quadratic_x")
        vals.append(smallest_weighted_ratio(s.S, s.M, W, shift=g.transverse_threshold()).c_num)
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] <= 0.02


def test_ab_weight_grows_under_refinement():
    vals = []
    for n in (12, 24, 48):
        g = StripGrid.uniform(2.0, n, n, (0.0, np.pi / 2))
        W = assemble_weight(g, "inverse_distance_sq_p")
        u = np.ones(W.shape[0])
        vals.append(u @ W @ u)
    assert vals[0] < vals[1] < vals[2]


def test_spectral_result_round_trip():
    r = lowest_pairs(np.diag([3.0, 1.0, 2.0]), np.eye(3), 2, descriptor={"form": "test"})
    back = SpectralResult.from_dict(json.loads(r.to_json()))
    assert np.array_equal(back.eigenvalues, r.eigenvalues)
    assert np.array_equal(back.residuals, r.residuals)
    assert back.descriptor == r.descriptor and back.method == r.method


def test_ab_spectrum_above_threshold():
    g = StripGrid.uniform(8.0, 80, 22, (0.0, np.pi / 2))
    s = assemble_straight(ab_potential(0.5), g)
    assert count_below(s.S, s.M, 1.0) == 0


def test_graded_spectrum_certified_by_inertia():
    """The continuum clusters at the threshold on a long graded mesh; the count stays exact."""
    g = StripGrid.graded_grid(5.0, 0.25, 1e7, 11)
    f = bump_with_integral("deformation", 1.0, 2.0)
    res = discrete_spectrum_below_threshold(assemble_deformed(f, 0.3, None, g), g.transverse_threshold())
    assert len(res) == 1 and res.certificate["certified"]
    assert res.certificate["next_lower_bound"] >= g.transverse_threshold()
    assert res.eigenvalues[0] < g.transverse_threshold()
