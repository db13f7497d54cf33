import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from modecert.segments import SERIES_SWITCH, first_moments, second_moments, segment_mass

vals = st.floats(-30, 30, allow_nan=False)


def _quad(fn):
    return integrate.quad(fn, 0.0, 1.0, epsabs=0, epsrel=1e-13)[0]


@given(vals, vals, st.floats(1e-3, 50))
def test_segment_mass_matches_quadrature(a, b, h):
    expect = h * _quad(lambda t: np.exp((1 - t) * a + t * b))
    assert segment_mass(a, b, h) == pytest.approx(expect, rel=1e-11)


@pytest.mark.parametrize("d", [0.0, 1e-12, SERIES_SWITCH / 2, SERIES_SWITCH * 2, 1e-4, 0.3])
def test_segment_mass_continuous_across_switch(d):
    exact = np.expm1(d) / d if d else 1.0
    assert segment_mass(0.0, d, 1.0) == pytest.approx(exact, rel=1e-14)


@given(vals, vals)
def test_first_moments(a, b):
    ref = [_quad(lambda t, f=f: f(t) * np.exp((1 - t) * a + t * b)) for f in
           (lambda t: 1.0, lambda t: 1 - t, lambda t: t)]
    got = first_moments(np.array([a]), np.array([b]))
    for g, r in zip(got, ref):
        assert g[0] == pytest.approx(r, rel=1e-10, abs=1e-300)


@given(vals, vals)
def test_second_moments(a, b):
    ref = [_quad(lambda t, f=f: f(t) * np.exp((1 - t) * a + t * b)) for f in
           (lambda t: (1 - t) ** 2, lambda t: t * (1 - t), lambda t: t * t)]
    got = second_moments(np.array([a]), np.array([b]))
    for g, r in zip(got, ref):
        assert g[0] == pytest.approx(r, rel=1e-10, abs=1e-300)


def test_no_overflow_for_large_values():
    assert np.isfinite(segment_mass(700.0, 650.0, 1.0))
    j00, j10, j01 = first_moments(np.array([700.0]), np.array([700.0 + 1e-9]))
    assert np.isfinite(j00).all() and j10[0] == pytest.approx(j01[0], rel=1e-8)


def test_segment_mass_rejects_bad_input():
    with pytest.raises(ValueError):
        segment_mass(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        segment_mass(np.nan, 1.0, 1.0)
