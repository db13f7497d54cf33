"""Log-concave MLE under the constraint that the modal interval contains ``m``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _activeset
from .characterization import CharacterizationReport, characterize
from .characterization import _strict_points as plc_strict_points
from .errors import NotConverged
from .geometry import PiecewiseLogLinearDensity
from .sample import Sample
from .unconstrained import SolverOptions, density_from_solution, standardize

__all__ = [
    "ConstrainedFitReport",
    "fit_constrained",
    "check_constrained_characterization",
    "ProjectionCheck",
    "population_projection_check",
]

MODE_MERGE = 1e-12


@dataclass
class ConstrainedFitReport:
    density: PiecewiseLogLinearDensity
    mode: float
    log_likelihood: float
    objective: float
    iterations: int
    max_characterization_residual: float
    integral_identity_residual: float
    converged: bool
    n: int
    history: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def to_dict(self) -> dict:
        return {
            "density": self.density.to_dict(),
            "mode": self.mode,
            "log_likelihood": self.log_likelihood,
            "objective": self.objective,
            "iterations": self.iterations,
            "max_characterization_residual": self.max_characterization_residual,
            "integral_identity_residual": self.integral_identity_residual,
            "converged": self.converged,
            "n": self.n,
        }


def _constrained_problem(sample: Sample, m: float):
    center, half = standardize(sample.points)
    z = (sample.points - center) / half
    w = np.asarray(sample.weights, dtype=float)
    zm = (m - center) / half
    x = np.array(sample.points, dtype=float)
    near = np.flatnonzero(np.abs(z - zm) <= MODE_MERGE)
    if len(near):
        im = int(near[0])
    else:
        im = int(np.searchsorted(z, zm))
        z = np.insert(z, im, zm)
        w = np.insert(w, im, 0.0)
        x = np.insert(x, im, m)
    last = len(z) - 1
    # left-bending kinks at grid points <= m (the left end would be inert),
    # right-bending kinks at grid points >= m (likewise the right end)
    left = np.arange(1, im + 1)
    right = np.arange(im, last)
    kink_index = np.concatenate([left, right])
    kink_side = np.concatenate([-np.ones(len(left)), np.ones(len(right))])
    order = np.lexsort((kink_side, kink_index))
    prob = _activeset.Problem(z, w, False, kink_index[order], kink_side[order])
    return prob, center, half, im, x


def _warm_candidates(prob, center, half, im, knots):
    if knots is None or len(knots) == 0:
        return None
    zk = (np.asarray(knots, dtype=float) - center) / half
    pos = np.searchsorted(prob.z, zk)
    pos = np.clip(pos, 0, len(prob.z) - 1)
    hit = np.abs(prob.z[pos] - zk) <= 1e-9
    ids = []
    lookup = {(int(j), int(s)): k for k, (j, s) in enumerate(zip(prob.kink_index, prob.kink_side))}
    for j in pos[hit]:
        if j < im:
            sides = (-1,)
        elif j > im:
            sides = (1,)
        else:
            sides = (-1, 1)
        ids.extend(lookup[(int(j), s)] for s in sides if (int(j), s) in lookup)
    return np.array(ids, dtype=np.int64) if ids else None


def fit_constrained(
    sample: Sample,
    m: float,
    opts: SolverOptions | None = None,
    *,
    warm_knots=None,
    raise_on_failure: bool = True,
) -> ConstrainedFitReport:
    """Mode-constrained log-concave MLE.

    The support is ``[min(X(1), m), max(X(n), m)]``; outside the data range the
    log-density is monotone up to (or down from) ``m``.  ``warm_knots`` are
    knot locations (e.g. from an unconstrained fit) used to seed the active
    set; they change the path, not the optimum.
    """
    if not np.isfinite(m):
        raise ValueError("mode must be finite")
    opts = opts or SolverOptions()
    prob, center, half, im, grid = _constrained_problem(sample, float(m))
    warm = _warm_candidates(prob, center, half, im, warm_knots)
    res = _activeset.solve(prob, tol=opts.tol, obj_tol=opts.obj_tol, max_iter=opts.max_iter, warm=warm)
    density = density_from_solution(prob, res, center, half, grid)
    phi = res.phi - np.log(half)
    data_mask = prob.w > 0
    report = ConstrainedFitReport(
        density=density,
        mode=float(m),
        log_likelihood=float(sample.n * np.dot(prob.w[data_mask], phi[data_mask])),
        objective=float(res.objective - np.log(half) + 1.0),
        iterations=res.iterations,
        max_characterization_residual=res.residual,
        integral_identity_residual=abs(1.0 - density.total_mass()),
        converged=res.converged,
        n=sample.n,
        history=res.history - np.log(half) + 1.0,
    )
    if not res.converged and raise_on_failure:
        raise NotConverged(
            f"constrained fit at m={m!r} stopped after {res.iterations} iterations "
            f"(residual {res.residual:.3g})",
            report,
        )
    return report


def check_constrained_characterization(
    report: ConstrainedFitReport, sample: Sample, tol: float | None = None
) -> CharacterizationReport:
    """Two-sided integrated-CDF certificate split at the hypothesized mode.

    ``mass_residual`` is ``|F_n(inf) - F_hat0(inf)|``; the knot bound is
    ``|F_n(tau) - F_hat0(tau)| <= 1/n``.
    """
    return characterize(report.density, sample, mode=report.mode, tol=tol)


# --- population version ----------------------------------------------------


@dataclass
class ProjectionCheck:
    inequality_violation: float
    equality_slack: float
    grid_size: int

    @property
    def max_violation(self) -> float:
        return max(self.inequality_violation, self.equality_slack)

    def to_dict(self) -> dict:
        return {
            "inequality_violation": self.inequality_violation,
            "equality_slack": self.equality_slack,
            "max_violation": self.max_violation,
            "grid_size": self.grid_size,
        }


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _effective_range(obj, eps=1e-15):
    lo, hi = obj.support
    if not np.isfinite(lo):
        lo = float(obj.ppf(eps))
    if not np.isfinite(hi):
        hi = float(obj.ppf(1.0 - eps))
    return lo, hi


def _strict_points(f_m):
    if hasattr(f_m, "strict_points"):
        return f_m.strict_points()
    if isinstance(f_m, PiecewiseLogLinearDensity):
        return plc_strict_points(f_m)
    empty = np.array([])
    return empty, empty, empty


def _cdf_integrals(cdf, grid):
    """Cumulative integrals of ``cdf`` and ``1 - cdf`` over ``grid`` intervals."""
    a, b = grid[:-1], grid[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.asarray(cdf(nodes), dtype=float)
    pieces = half * (vals @ _GL_WEIGHTS)
    tail_pieces = half * ((1.0 - vals) @ _GL_WEIGHTS)
    from_left = np.concatenate([[0.0], np.cumsum(pieces)])
    from_right = np.concatenate([np.cumsum(tail_pieces[::-1])[::-1], [0.0]])
    return from_left, from_right


def population_projection_check(f_m, G, m: float, grid_size: int = 2000) -> ProjectionCheck:
    """Check that ``f_m`` is the projection of ``G`` onto densities with mode ``m``.

    ``f_m`` needs ``cdf``, ``support`` and either ``strict_points`` or the
    piecewise-linear knot structure; ``G`` needs ``cdf``, ``support`` and
    ``ppf``.  Verifies, on a grid, that ``int_{-inf}^x F_m <= int_{-inf}^x G``
    for ``x <= m`` and ``int_x^inf (1 - F_m) <= int_x^inf (1 - G)`` for
    ``x >= m``, with equality at the kinks of ``log f_m`` that increase into
    (left of ``m``) or decrease out of (right of ``m``) the knot.
    """
    f_lo, f_hi = _effective_range(f_m)
    g_lo, g_hi = _effective_range(G)
    lo, hi = min(f_lo, g_lo, m), max(f_hi, g_hi, m)
    knots, s_left, s_right = _strict_points(f_m)
    extra = [np.asarray(G.breakpoints(), dtype=float)] if hasattr(G, "breakpoints") else []
    bps = np.asarray(f_m.breakpoints(), dtype=float) if hasattr(f_m, "breakpoints") else np.array([])
    grid = np.unique(np.concatenate([np.linspace(lo, hi, grid_size), knots, [m], bps, *extra]))
    grid = grid[(grid >= lo) & (grid <= hi)]
    fl, fr = _cdf_integrals(f_m.cdf, grid)
    gl, gr = _cdf_integrals(G.cdf, grid)
    left_gap = fl - gl
    right_gap = fr - gr
    lmask = grid <= m
    rmask = grid >= m
    violation = max(float(np.max(left_gap[lmask])), float(np.max(right_gap[rmask])), 0.0)
    at = np.searchsorted(grid, knots)
    slack = 0.0
    sl = (knots <= m) & (s_left > 0)
    sr = (knots >= m) & (s_right < 0)
    if sl.any():
        slack = max(slack, float(np.max(np.abs(left_gap[at[sl]]))))
    if sr.any():
        slack = max(slack, float(np.max(np.abs(right_gap[at[sr]]))))
    return ProjectionCheck(inequality_violation=violation, equality_slack=slack, grid_size=len(grid))
