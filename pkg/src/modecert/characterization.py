"""Finite-sample optimality certificates for fitted log-concave densities.

Both MLEs are characterized by integrated-CDF inequalities against the
empirical distribution.  With ``D(x) = int_lo^x (F_hat - F_n)``:

* unconstrained: ``D(x) <= 0`` everywhere, ``= 0`` at knots;
* mode-constrained at ``m``: ``D(x) <= 0`` for ``x <= m`` with equality at
  knots where the log-density still increases into the knot, and
  ``int_x^hi (F_n - F_hat) <= 0`` for ``x >= m`` with equality at knots where
  it decreases out of the knot.

The computation here is independent of the solver: it works from the
returned density and the sample alone.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .geometry import PiecewiseLogLinearDensity
from .sample import Sample
from .segments import first_moments

SLOPE_EPS = 1e-10


@dataclass
class CharacterizationReport:
    knot_excess: float  # max over knots of |F_n - F_hat| - bound; <= 0 at an optimum
    inequality_violation: float
    equality_residual: float
    mass_residual: float
    integral_tol: float
    cdf_tol: float
    mass_tol: float

    @property
    def passed(self) -> bool:
        return (
            self.knot_excess <= self.cdf_tol
            and self.inequality_violation <= self.integral_tol
            and self.equality_residual <= self.integral_tol
            and self.mass_residual <= self.mass_tol
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _strict_points(density: PiecewiseLogLinearDensity):
    """Knots with their left and right slopes (infinite at the support ends)."""
    s = density.slopes
    left = np.concatenate([[np.inf], s])
    right = np.concatenate([s, [-np.inf]])
    strict = left - right > SLOPE_EPS
    return density.knots[strict], left[strict], right[strict]


def characterize(
    density: PiecewiseLogLinearDensity,
    sample: Sample,
    mode: float | None = None,
    tol: float | None = None,
    cdf_tol: float = 1e-9,
    mass_tol: float = 1e-9,
) -> CharacterizationReport:
    lo, hi = density.support
    half = 0.5 * sample.span
    integral_tol = 1e-6 * half if tol is None else tol
    extra = [] if mode is None else [mode]
    grid = np.unique(np.concatenate([sample.points, density.knots, extra]))
    grid = grid[(grid >= lo) & (grid <= hi)]
    phi = np.interp(grid, density.knots, density.values)
    dx = np.diff(grid)
    j00, j10, _ = first_moments(phi[:-1], phi[1:])
    mass = dx * j00
    f_hat = np.concatenate([[0.0], np.cumsum(mass)])
    f_emp = sample.ecdf(grid)
    # int over [x_i, x_{i+1}) of (F_hat - F_n); F_n is flat there
    seg = dx * (f_hat[:-1] + dx * j10 - f_emp[:-1])
    left_int = np.concatenate([[0.0], np.cumsum(seg)])
    right_int = -np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])

    knots, s_left, s_right = _strict_points(density)
    at = np.searchsorted(grid, knots)
    if mode is None:
        violation = float(np.max(left_int))
        equality = float(np.max(np.abs(left_int[at]))) if len(at) else 0.0
    else:
        lmask = grid <= mode
        rmask = grid >= mode
        violation = max(float(np.max(left_int[lmask], initial=-np.inf)),
                        float(np.max(right_int[rmask], initial=-np.inf)))
        in_left = (knots <= mode) & (s_left > SLOPE_EPS)
        in_right = (knots >= mode) & (s_right < -SLOPE_EPS)
        eq = [0.0]
        if in_left.any():
            eq.append(float(np.max(np.abs(left_int[at[in_left]]))))
        if in_right.any():
            eq.append(float(np.max(np.abs(right_int[at[in_right]]))))
        equality = max(eq)

    # knot-level bound |F_n(tau) - F_hat(tau)| <= 1/n (or the tie weight).
    # At a knot sitting exactly at the hypothesized mode only the side(s) whose
    # integral equality holds there give a bound: F_hat(m) >= F_n(m-) from the
    # left, F_hat(m) <= F_n(m) from the right.
    if len(knots):
        fk = f_hat[at]
        ek = sample.ecdf(knots)
        ek_left = sample.ecdf(knots, left=True)
        pos = np.clip(np.searchsorted(sample.points, knots), 0, len(sample.points) - 1)
        tie = np.where(sample.points[pos] == knots, sample.weights[pos], 0.0)
        bound = np.maximum(1.0 / sample.n, tie)
        excess = np.abs(ek - fk) - bound
        if mode is not None:
            at_mode = np.abs(knots - mode) <= 1e-12 * max(sample.span, abs(mode), 1.0)
            one_sided = np.full(len(knots), -1.0 / sample.n)
            one_sided = np.where(at_mode & (s_left > SLOPE_EPS),
                                 np.maximum(one_sided, ek_left - fk), one_sided)
            one_sided = np.where(at_mode & (s_right < -SLOPE_EPS),
                                 np.maximum(one_sided, fk - ek), one_sided)
            excess = np.where(at_mode, one_sided, excess)
        knot_excess = float(np.max(excess))
    else:
        knot_excess = -1.0 / sample.n
    return CharacterizationReport(
        knot_excess=knot_excess,
        inequality_violation=max(violation, 0.0),
        equality_residual=equality,
        mass_residual=abs(1.0 - f_hat[-1]),
        integral_tol=integral_tol,
        cdf_tol=cdf_tol,
        mass_tol=mass_tol,
    )
