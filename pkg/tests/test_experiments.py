import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magwave.assembly import StripGrid
from magwave.errors import GeometryError
from magwave.experiments import (TrialFunctionSpec, best_triangle, bisect_threshold, bgrs_asymptotic,
                                 curved_bound_state, deformed_builder, diamagnetic_check,
                                 diamagnetic_violation, eigenvalue_exists, essential_spectrum_probe,
                                 loglog_slope, numeric_hardy_constant, random_smooth_function,
                                 stability_run, trial_norm_formula, trial_quotient)
from magwave.gauge import ab_potential, custom_potential, reference_field, transversal_potential
from magwave.geometry import bump_profile, bump_with_integral


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(0.02, 0.5))
def test_trial_norm_matches_closed_form(s, beta, lam):
    spec = TrialFunctionSpec(s, beta, lam)
    q = trial_quotient(spec)
    assert q.norm_sq == pytest.approx(trial_norm_formula(spec), rel=1e-3)
    assert q.potential_term == 0.0 and q.magnetic_quotient == q.grad_quotient


def test_trial_quotient_tends_to_one():
    vals = [trial_quotient(TrialFunctionSpec(1.0, 1.0, lam)).grad_quotient for lam in (0.1, 0.01, 0.001)]
    assert all(v < 1 for v in vals)
    assert abs(vals[-1] - 1) < abs(vals[0] - 1) and abs(vals[-1] - 1) <= 1e-5
    # the leading correction is -s^2 beta^2 lam^2, approached at first order in lam
    ratios = [(1 - trial_quotient(TrialFunctionSpec(1.0, 1.0, lam)).grad_quotient) / lam**2
              for lam in (0.01, 0.003, 0.001)]
    assert ratios[0] < ratios[1] < ratios[2] <= 1.0
    assert ratios[2] == pytest.approx(1.0, rel=0.02)
    with pytest.raises(ValueError):
        TrialFunctionSpec(1.0, 1.0, -0.1)


def test_trial_magnetic_term_adds_potential_energy():
    A = transversal_potential(reference_field())
    spec = TrialFunctionSpec(1.0, 1.0, 0.05)
    q0, q1 = trial_quotient(spec), trial_quotient(spec, A, 1.0)
    assert q1.potential_term > 0
    assert q1.magnetic_quotient == pytest.approx(q0.grad_quotient + q1.potential_term / q1.norm_sq)


def test_best_triangle_fits_under_profile():
    f = bump_profile("deformation", 1.0, 2.0)
    s, beta = best_triangle(f)
    assert 0 < s <= f.d and beta > 0
    assert TrialFunctionSpec(s, beta, 0.1).contained_in(f)
    assert not TrialFunctionSpec(s, 1.05 * beta, 0.1).contained_in(f)
    with pytest.raises(GeometryError):
        best_triangle(bump_profile("deformation", 1.0, 1.0, 3.0))


def test_loglog_slope_exact_power_law():
    x = np.array([0.1, 0.2, 0.4, 0.8])
    slope, hw, res = loglog_slope(x, 3 * x**2)
    assert slope == pytest.approx(2.0, abs=1e-12) and res <= 1e-12


def test_bisect_threshold():
    lo, hi, n = bisect_threshold(lambda t: t > 0.3, 0.01, 1.0, 1e-3)
    assert lo <= 0.3 < hi and hi / lo <= 1 + 1e-3 and n > 0


def test_eigenvalue_exists_examples():
    g = StripGrid.uniform(20.0, 201, 21)
    f = bump_with_integral("deformation", 1.0, 2.0)
    yes = eigenvalue_exists(deformed_builder(f, 0.1, None), g, margin=0.0, mode="graded")
    no = eigenvalue_exists(deformed_builder(f, 0.0, None), g, margin=0.0, mode="graded")
    assert bool(yes) and not bool(no)
    json.loads(yes.to_json())
    with pytest.raises(ValueError):
        eigenvalue_exists(deformed_builder(f, 0.1, None), g, mode="adaptive")


def test_diamagnetic_trivial_cases():
    g = StripGrid.uniform(2.0, 41, 21)
    X, Y = np.meshgrid(g.xs, g.ys, indexing="ij")
    v = (1.5 + np.cos(X)) * (1.2 + np.sin(Y))
    assert diamagnetic_violation(v, None, g) == pytest.approx(0.0, abs=1e-14)
    # v = exp(i theta) w with A = -grad theta is an equality case up to interpolation
    theta = 0.8 * X + 0.3 * X**2
    A = custom_potential(lambda x, y: (-(0.8 + 0.6 * x), 0 * y))
    assert diamagnetic_violation(np.exp(1j * theta) * v, A, g) <= 2e-2
    rng = np.random.default_rng(1)
    V = random_smooth_function(g, rng)
    with pytest.raises(ValueError):
        diamagnetic_violation(V, None, g, modulus="mixed")


def test_diamagnetic_random_bounded_and_ab():
    g = StripGrid.uniform(3.0, 121, 41)
    rep = diamagnetic_check(transversal_potential(reference_field()), g, 20, seed=4)
    assert rep.violations == 0 and rep.trials == 20
    gab = StripGrid.uniform(3.0, 122, 42, (0.0, np.pi / 2))
    rep = diamagnetic_check(ab_potential(0.5), gab, 20, seed=4)
    assert rep.violations == 0


def test_essential_probe_field_free_and_magnetic():
    res = essential_spectrum_probe(None, [5.0, 10.0, 20.0], h=0.2, n_y=15)
    exact = [1 + (np.pi / (2 * L)) ** 2 for L in res.lengths]
    assert np.allclose(res.theta_min, exact, rtol=1e-2)
    L = np.array(res.lengths)
    C, *_ = np.linalg.lstsq((1 / L**2)[:, None], np.array(res.theta_min) - 1, rcond=None)
    assert res.monotone and res.fit_C == pytest.approx(C[0], rel=1e-12)
    mag = essential_spectrum_probe(transversal_potential(reference_field()), [10.0, 20.0], h=0.2, n_y=15)
    assert mag.monotone and mag.deficit[-1] <= 1e-3


def test_bgrs_scaling_with_profile():
    g = StripGrid.graded_grid(10.0, 0.1, 1e7, 21)
    f = bump_with_integral("deformation", 1.0, 2.0)
    r1 = bgrs_asymptotic(f, (0.05, 0.1, 0.2), g)
    r2 = bgrs_asymptotic(f.scaled(2.0), (0.05, 0.1, 0.2), g)
    assert r1.target == pytest.approx(1.0) and r2.target == pytest.approx(4.0)
    assert r2.coefficient / r1.coefficient == pytest.approx(4.0, rel=0.15)
    assert all(b > 0 for b in r1.binding)
    assert all(2.5 <= q <= 5.0 for q in r1.halving_ratios)


def test_numeric_hardy_positive_with_field():
    g = StripGrid.uniform(10.0, 101, 15)
    plain = numeric_hardy_constant(custom_potential(lambda x, y: (0 * x, 0 * y)), g)
    mag = numeric_hardy_constant(transversal_potential(reference_field()), g)
    assert mag.c_num > plain.c_num > 0
    assert mag.weight == "inverse_quadratic_x"


def test_stability_and_curved_bound_state():
    f = bump_with_integral("deformation", 1.0, 2.0)
    rep = stability_run("deformed", reference_field(), f, lengths=(10.0,), h=0.25, n_y=15)
    assert rep.stable and rep.value == pytest.approx(0.5 * rep.threshold)
    with pytest.raises(ValueError):
        stability_run("twisted", reference_field(), f)
    g = StripGrid.graded_grid(10.0, 0.1, 1e7, 31)
    bent = curved_bound_state(bump_profile("curvature", 1.5, 3.0), 0.3, None, g)
    assert bent.exists and bent.below_one
    flat = curved_bound_state(bump_profile("curvature", 1.5, 3.0), 0.0, None, g)
    assert not flat.exists
