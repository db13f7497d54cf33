import numpy as np
import pytest

from modecert.characterization import characterize
from modecert.constrained import (
    check_constrained_characterization,
    fit_constrained,
    population_projection_check,
)
from modecert.distributions import ReferenceDistribution, parse_dist, sample, solve_laplace_projection
from modecert.geometry import PiecewiseLogLinearDensity
from modecert.sample import Sample
from modecert.unconstrained import fit
from oracle import oracle_fit
from test_unconstrained import small_instances


def _ms(x):
    return [x.lo - 0.5 * x.span, 0.5 * (x.lo + x.hi) + 0.1 * x.span, x.hi + 0.3]


@pytest.mark.parametrize("idx", range(50))
def test_oracle_equivalence(idx):
    x = small_instances(seed=1)[idx]
    for m in _ms(x):
        r = fit_constrained(x, m)
        grid, phi, obj = oracle_fit(x.points, x.weights, mode=m)
        assert r.objective == pytest.approx(obj, abs=1e-9)
        assert np.max(np.abs(r.density.logpdf(grid) - phi)) <= 1e-7


def test_two_points_mode_outside():
    x = Sample.from_data([0.0, 1.0])
    r = fit_constrained(x, 2.0)
    d = r.density
    assert d.support == (0.0, 2.0)
    assert np.all(d.slopes >= -1e-12)
    assert abs(d.total_mass() - 1) <= 1e-8
    grid, phi, obj = oracle_fit(x.points, x.weights, mode=2.0)
    assert r.objective == pytest.approx(obj, abs=1e-9)


@pytest.mark.parametrize("m", [-1.5, -0.3, 0.0, 0.4, 2.0, 4.5])
def test_shape_constraints(m):
    x = sample(parse_dist("normal:0,1"), 150, 4)
    r = fit_constrained(x, m)
    d = r.density
    assert d.support == (min(x.lo, m), max(x.hi, m))
    assert set(d.knots) <= set(x.points) | {m}
    assert d.is_concave()
    assert abs(d.total_mass() - 1) <= 1e-8
    mid = 0.5 * (d.knots[1:] + d.knots[:-1])
    assert np.all(d.slopes[mid < m] >= -1e-10)
    assert np.all(d.slopes[mid > m] <= 1e-10)
    ms = d.mode_summary()
    assert ms.modal_lo - 1e-9 <= m <= ms.modal_hi + 1e-9


def test_constraint_never_beats_unconstrained():
    x = sample(parse_dist("gamma:3,1"), 120, 2)
    u = fit(x)
    for m in np.linspace(x.lo - 1, x.hi + 1, 15):
        assert fit_constrained(x, m).log_likelihood <= u.log_likelihood + 1e-8


def test_mode_on_data_point_adds_no_knot():
    x = sample(parse_dist("normal:0,1"), 50, 1)
    m = float(x.points[20])
    r = fit_constrained(x, m)
    assert set(r.density.knots) <= set(x.points)
    near = m + 1e-13 * x.span
    r2 = fit_constrained(x, near)
    assert r2.objective == pytest.approx(r.objective, abs=1e-9)


def test_warm_start_changes_path_not_answer():
    x = sample(parse_dist("normal:0,1"), 300, 9)
    u = fit(x)
    cold = fit_constrained(x, 0.7)
    warm = fit_constrained(x, 0.7, warm_knots=u.active_knots)
    assert warm.objective == pytest.approx(cold.objective, abs=1e-10)
    assert np.max(np.abs(warm.density.logpdf(x.points) - cold.density.logpdf(x.points))) < 1e-6


@pytest.mark.parametrize("fam", ["normal:0,1", "gamma:3,1", "laplace:0,1"])
def test_certificates(fam):
    x = sample(parse_dist(fam), 100, 11)
    dist = parse_dist(fam)
    for m in [dist.mode, dist.mode + 1.0, x.lo - 0.5, x.hi + 0.5, float(x.points[30])]:
        r = fit_constrained(x, m)
        cert = check_constrained_characterization(r, x)
        assert cert.passed, (m, cert)
        assert cert.knot_excess <= 1e-9
        assert r.integral_identity_residual <= 1e-9


def test_normal_m0_knot_residuals():
    x = sample(parse_dist("normal:0,1"), 100, 0)
    cert = check_constrained_characterization(fit_constrained(x, 0.0), x)
    assert cert.knot_excess <= 1e-9 and cert.mass_residual <= 1e-9


def test_certificate_negative_control():
    x = sample(parse_dist("normal:0,1"), 100, 0)
    d = fit_constrained(x, 0.5).density
    vals = d.values.copy()
    vals[1] += 0.01
    assert not characterize(PiecewiseLogLinearDensity(d.knots, vals), x, mode=0.5).passed


def test_laplace_projection_is_certified():
    proj = solve_laplace_projection()
    check = population_projection_check(proj.density, parse_dist("laplace:0,1"), 1.0)
    assert check.max_violation <= 1e-6
    assert check.grid_size >= 2000


def test_projection_check_rejects_wrong_candidates():
    from modecert.distributions import laplace_projection_density

    G = parse_dist("laplace:0,1")
    # members of the projection family with the wrong parameter
    for a in (0.3, 0.7):
        assert population_projection_check(laplace_projection_density(a), G, 1.0).max_violation > 1e-3


def test_projection_of_log_concave_onto_own_mode():
    G = ReferenceDistribution("normal", (0.0, 1.0))
    assert population_projection_check(G, G, 0.0).max_violation <= 1e-9
