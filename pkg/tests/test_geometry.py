import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modecert.distributions import ReferenceDistribution
from modecert.geometry import PiecewiseLogLinearDensity as PLD
from modecert.geometry import kl_divergence


def test_eval_log_examples():
    flat = PLD([0, 1], [0, 0])
    assert flat.logpdf(0.5) == 0.0
    assert PLD([0, 1], [0, -1]).logpdf(0.25) == pytest.approx(-0.25)
    assert flat.logpdf(2.0) == -np.inf


def test_total_mass_closed_form():
    assert PLD([0, 1], [0, -1]).total_mass() == pytest.approx(1 - np.exp(-1), rel=1e-15)


def test_mode_summary_peak_and_plateau():
    tri = PLD([0, 1, 2], [-1, 0, -1]).mode_summary()
    assert (tri.mode, tri.modal_lo, tri.modal_hi) == (1.0, 1.0, 1.0)
    flat = PLD([0, 1, 2, 3], [-1, 0, 0, -1]).mode_summary()
    assert (flat.modal_lo, flat.modal_hi, flat.mode) == (1.0, 2.0, 1.0)


@pytest.mark.parametrize(
    "knots, values",
    [([0, 0], [0, 0]), ([1, 0], [0, 0]), ([0, 1], [0]), ([0, np.nan], [0, 0]), ([0], [0])],
)
def test_validation(knots, values):
    with pytest.raises(ValueError):
        PLD(knots, values)


def test_immutable():
    d = PLD([0, 1], [0, 0])
    with pytest.raises(ValueError):
        d.knots[0] = 5.0


def test_concavity():
    assert PLD([0, 1, 2], [-1, 0, -1]).is_concave()
    assert not PLD([0, 1, 2], [0, -1, 0]).is_concave()


concave_density = st.integers(2, 8).flatmap(
    lambda k: st.tuples(
        st.lists(st.floats(0.05, 3.0), min_size=k - 1, max_size=k - 1),
        st.floats(-3, 3),
        st.lists(st.floats(0.0, 4.0), min_size=k - 1, max_size=k - 1),
        st.floats(-3, 3),
    )
)


def _build(params):
    gaps, start_slope, drops, v0 = params
    knots = np.concatenate([[0.0], np.cumsum(gaps)])
    slopes = start_slope - np.concatenate([[0.0], np.cumsum(drops[1:])])
    values = v0 + np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])
    return PLD(knots, values)


@given(concave_density)
def test_cdf_matches_numeric_integral(params):
    d = _build(params)
    x = np.linspace(d.support[0] - 0.5, d.support[1] + 0.5, 41)
    grid = np.linspace(d.support[0], d.support[1], 20001)
    f = d.pdf(grid)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(grid))])
    ref = np.interp(x, grid, cum, left=0.0, right=cum[-1])
    assert np.allclose(d.cdf(x), ref, rtol=1e-5, atol=1e-8 * d.total_mass())
    assert d.cdf(d.support[1]) == pytest.approx(d.total_mass(), rel=1e-14)
    assert d.is_concave()


@given(concave_density, st.sampled_from([0.5, 2.0, 10.0]), st.sampled_from([-3.0, 0.0, 7.0]))
def test_affine_preserves_mass(params, s, mu):
    d = _build(params)
    e = d.affine(s, mu)
    assert e.total_mass() == pytest.approx(d.total_mass(), rel=1e-12)
    x = np.linspace(*d.support, 7)
    assert np.allclose(e.logpdf(s * x + mu), d.logpdf(x) - np.log(s))


def test_json_round_trip_is_exact():
    d = PLD([0.1, 1 / 3, 2.0], [-1.2345678901234567, 0.1, -np.pi])
    text = d.to_json()
    back = PLD.from_json(text)
    assert np.array_equal(back.knots, d.knots) and np.array_equal(back.values, d.values)
    assert set(json.loads(text)) == {"knots", "values"}


def test_kl_zero_and_gaussian_closed_form():
    n0 = ReferenceDistribution("normal", (0.0, 1.0))
    n1 = ReferenceDistribution("normal", (1.0, 1.0))
    assert kl_divergence(n0, n0) == pytest.approx(0.0, abs=1e-9)
    assert kl_divergence(n0, n1) == pytest.approx(0.5, abs=1e-8)


def test_kl_piecewise_against_closed_form():
    # uniform[0,1] against a truncated exponential on [0,1]
    f = PLD([0, 1], [0, 0])
    lam = 2.0
    g = PLD([0, 1], [np.log(lam / -np.expm1(-lam)), np.log(lam / -np.expm1(-lam)) - lam])
    expect = -(np.log(lam / -np.expm1(-lam)) - lam / 2)
    assert kl_divergence(f, g) == pytest.approx(expect, abs=1e-10)


def test_kl_infinite_when_support_not_covered():
    f = ReferenceDistribution("normal", (0.0, 1.0))
    g = PLD([-1, 1], [0, 0])
    assert kl_divergence(f, g) == np.inf
    assert np.isfinite(kl_divergence(g.affine(1.0, 0.0), f))
