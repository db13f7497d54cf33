"""Exponential integrals over linear segments.

Every quantity here is an integral of ``exp`` of a linear function over one
segment, optionally weighted by a low-order polynomial in the local
coordinate ``t in [0, 1]``.  With ``a`` and ``b`` the log-density values at
the left and right ends of the segment::

    j00(a, b) = int_0^1 exp((1-t) a + t b) dt
    j10(a, b) = int_0^1 (1-t)   exp(...) dt        j01(a, b) = int t exp(...)
    j20(a, b) = int_0^1 (1-t)^2 exp(...) dt        j11, j02 likewise

All functions factor out ``exp(max(a, b))`` so the remaining integrand is
bounded by one, and switch to a power series when ``|b - a|`` is small.
"""

from math import factorial

import numpy as np

__all__ = [
    "segment_mass",
    "first_moments",
    "second_moments",
    "SERIES_SWITCH",
]

# Switchover for segment_mass's midpoint series.
SERIES_SWITCH = 1e-8

_FIRST_SWITCH = 0.1
_FIRST_TERMS = 12
_SECOND_SWITCH = 1.0
_SECOND_TERMS = 22


def _coefficients(j: int, k: int, terms: int) -> np.ndarray:
    # int_0^1 t^j (1-t)^k e^{td} dt = sum_r d^r / r! * (j+r)! k! / (j+r+k+1)!
    return np.array(
        [
            factorial(j + r) * factorial(k) / (factorial(r) * factorial(j + r + k + 1))
            for r in range(terms)
        ]
    )


_C = {
    (0, 0, 1): _coefficients(0, 0, _FIRST_TERMS),
    (0, 1, 1): _coefficients(0, 1, _FIRST_TERMS),
    (1, 0, 1): _coefficients(1, 0, _FIRST_TERMS),
    (0, 0, 2): _coefficients(0, 0, _SECOND_TERMS),
    (0, 1, 2): _coefficients(0, 1, _SECOND_TERMS),
    (1, 0, 2): _coefficients(1, 0, _SECOND_TERMS),
    (0, 2, 2): _coefficients(0, 2, _SECOND_TERMS),
    (1, 1, 2): _coefficients(1, 1, _SECOND_TERMS),
    (2, 0, 2): _coefficients(2, 0, _SECOND_TERMS),
}


def _horner(coef: np.ndarray, d: np.ndarray) -> np.ndarray:
    out = np.full_like(d, coef[-1])
    for c in coef[-2::-1]:
        out *= d
        out += c
    return out


def _closed_first(d):
    # d <= -_FIRST_SWITCH; returns (I0, I1) = (int e^{td}, int t e^{td})
    e = np.exp(d)
    i0 = np.expm1(d) / d
    i1 = (e * (d - 1.0) + 1.0) / (d * d)
    return i0, i1


def _closed_second(d):
    e = np.exp(d)
    i0 = np.expm1(d) / d
    i1 = (e * (d - 1.0) + 1.0) / (d * d)
    i2 = (e * (d * d - 2.0 * d + 2.0) - 2.0) / (d * d * d)
    return i0, i1, i2


def _oriented(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = b - a
    swap = diff > 0
    top = np.where(swap, b, a)
    d = -np.abs(diff)
    return top, d, swap


def first_moments(a, b):
    """Return ``(j00, j10, j01)`` for arrays of segment end values."""
    top, d, swap = _oriented(a, b)
    d = np.atleast_1d(d)
    i0 = np.empty_like(d)
    p1 = np.empty_like(d)
    q1 = np.empty_like(d)
    small = d > -_FIRST_SWITCH
    if small.any():
        ds = d[small]
        i0[small] = _horner(_C[(0, 0, 1)], ds)
        p1[small] = _horner(_C[(0, 1, 1)], ds)
        q1[small] = _horner(_C[(1, 0, 1)], ds)
    big = ~small
    if big.any():
        c0, c1 = _closed_first(d[big])
        i0[big] = c0
        p1[big] = c0 - c1
        q1[big] = c1
    scale = np.exp(top).reshape(d.shape)
    swap = np.broadcast_to(swap, d.shape)
    j00 = scale * i0
    j10 = scale * np.where(swap, q1, p1)
    j01 = scale * np.where(swap, p1, q1)
    return j00, j10, j01


def second_moments(a, b):
    """Return ``(j20, j11, j02)``; the Hessian blocks of ``j00``."""
    top, d, swap = _oriented(a, b)
    d = np.atleast_1d(d)
    p2 = np.empty_like(d)
    q11 = np.empty_like(d)
    q2 = np.empty_like(d)
    small = d > -_SECOND_SWITCH
    if small.any():
        ds = d[small]
        p2[small] = _horner(_C[(0, 2, 2)], ds)
        q11[small] = _horner(_C[(1, 1, 2)], ds)
        q2[small] = _horner(_C[(2, 0, 2)], ds)
    big = ~small
    if big.any():
        i0, i1, i2 = _closed_second(d[big])
        p2[big] = i0 - 2.0 * i1 + i2
        q11[big] = i1 - i2
        q2[big] = i2
    scale = np.exp(top).reshape(d.shape)
    swap = np.broadcast_to(swap, d.shape)
    j20 = scale * np.where(swap, q2, p2)
    j11 = scale * q11
    j02 = scale * np.where(swap, p2, q2)
    return j20, j11, j02


def segment_mass(a, b, length):
    """Integral of ``exp`` over a segment of ``length`` with linear log-values.

    Equals ``length * (e^b - e^a) / (b - a)``; below ``|b - a| = 1e-8`` the
    midpoint series ``length * e^{(a+b)/2} * (1 + (b-a)^2 / 24)`` is used.
    Accepts scalars or arrays.
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    len_arr = np.asarray(length, dtype=float)
    if not (np.all(np.isfinite(a_arr)) and np.all(np.isfinite(b_arr))):
        raise ValueError("segment_mass needs finite log-values")
    if not np.all(np.isfinite(len_arr)) or np.any(len_arr <= 0):
        raise ValueError("segment length must be positive and finite")
    diff = b_arr - a_arr
    ad = np.abs(diff)
    top = np.maximum(a_arr, b_arr)
    with np.errstate(invalid="ignore", divide="ignore"):
        closed = np.exp(top) * np.expm1(-ad) / -ad
    series = np.exp(0.5 * (a_arr + b_arr)) * (1.0 + diff * diff / 24.0)
    out = len_arr * np.where(ad < SERIES_SWITCH, series, closed)
    return float(out) if out.ndim == 0 else out
