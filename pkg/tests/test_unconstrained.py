import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modecert.characterization import characterize
from modecert.distributions import ReferenceDistribution, sample
from modecert.errors import NotConverged
from modecert.geometry import PiecewiseLogLinearDensity
from modecert.sample import Sample
from modecert.unconstrained import SolverOptions, check_characterization, fit
from oracle import oracle_fit


def small_instances(count=50, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, 7))
        pts = np.sort(rng.normal(size=n) * rng.uniform(0.5, 3.0) + rng.normal())
        if rng.random() < 0.2 and n > 2:
            pts[1] = pts[0]  # a tie
        out.append(Sample.from_data(pts))
    return out


def test_two_points_give_uniform():
    r = fit(Sample.from_data([0.0, 1.0]))
    assert np.allclose(r.density.values, 0.0, atol=1e-12)
    assert r.log_likelihood == pytest.approx(0.0, abs=1e-12)
    assert r.converged


@pytest.mark.parametrize("idx", range(50))
def test_oracle_equivalence(idx):
    x = small_instances()[idx]
    r = fit(x)
    grid, phi, obj = oracle_fit(x.points, x.weights)
    assert r.objective == pytest.approx(obj, abs=1e-9)
    assert np.max(np.abs(r.density.logpdf(grid) - phi)) <= 1e-7


@pytest.fixture(scope="module")
def gamma_fit():
    x = sample(ReferenceDistribution("gamma", (3.0, 1.0)), 100, 1)
    return x, fit(x)


def test_invariants(gamma_fit):
    x, r = gamma_fit
    d = r.density
    assert abs(d.total_mass() - 1.0) <= 1e-8
    assert d.is_concave()
    assert d.support == (x.lo, x.hi)
    assert set(d.knots) <= set(x.points)
    # log-likelihood is n * P_n(phi)
    assert r.log_likelihood == pytest.approx(x.n * np.dot(x.weights, d.logpdf(x.points)), rel=1e-12)
    assert np.all(np.diff(r.history) >= -1e-12)


def test_characterization_passes(gamma_fit):
    x, r = gamma_fit
    cert = check_characterization(r, x)
    assert cert.passed
    assert cert.knot_excess <= 1e-9
    assert cert.mass_residual <= 1e-9


def test_characterization_detects_perturbation(gamma_fit):
    x, r = gamma_fit
    vals = r.density.values.copy()
    vals[len(vals) // 2] += 0.01
    bad = PiecewiseLogLinearDensity(r.density.knots, vals)
    assert not characterize(bad, x).passed


def test_uniform_endpoint_residuals():
    x = Sample.from_data([0.0, 1.0])
    cert = check_characterization(fit(x), x)
    assert cert.passed and cert.knot_excess <= 0.0


@pytest.mark.parametrize("s", [0.5, 2.0, 10.0])
@pytest.mark.parametrize("mu", [-3.0, 0.0, 7.0])
def test_affine_equivariance(s, mu):
    x = sample(ReferenceDistribution("normal", (0.0, 1.0)), 60, 3)
    base = fit(x).density
    moved = fit(x.affine(s, mu)).density
    assert np.allclose(moved.knots, s * base.knots + mu, rtol=0, atol=1e-7 * max(1, abs(mu)))
    assert np.allclose(moved.values, base.values - np.log(s), atol=1e-7)


def test_not_converged_carries_report():
    x = sample(ReferenceDistribution("normal", (0.0, 1.0)), 200, 0)
    with pytest.raises(NotConverged) as info:
        fit(x, SolverOptions(max_iter=2))
    assert info.value.report is not None and not info.value.report.converged
    r = fit(x, SolverOptions(max_iter=2), raise_on_failure=False)
    assert not r.converged


# data recorded to three decimals; see the ledger for the resolution limit
grid_data = st.lists(st.integers(-10**6, 10**6).map(lambda k: k / 1000), min_size=2, max_size=40).filter(
    lambda v: len(set(v)) > 1
)


@given(grid_data)
def test_random_samples_certify(values):
    x = Sample.from_data(values)
    r = fit(x)
    assert r.converged
    assert abs(r.density.total_mass() - 1) <= 1e-8
    assert r.density.is_concave()
    assert check_characterization(r, x).passed


def test_large_sample_is_fast_and_certified():
    x = sample(ReferenceDistribution("normal", (0.0, 1.0)), 10_000, 5)
    r = fit(x)
    assert check_characterization(r, x).passed
