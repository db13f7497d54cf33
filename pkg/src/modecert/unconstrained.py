"""Unconstrained log-concave maximum likelihood estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _activeset
from .characterization import CharacterizationReport, characterize
from .errors import NotConverged
from .geometry import PiecewiseLogLinearDensity
from .sample import Sample

__all__ = ["SolverOptions", "FitReport", "fit", "check_characterization"]


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-7
    max_iter: int = 500
    obj_tol: float = 1e-10


@dataclass
class FitReport:
    density: PiecewiseLogLinearDensity
    log_likelihood: float
    objective: float
    iterations: int
    max_characterization_residual: float
    converged: bool
    n: int
    history: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    # solver internals, reused for warm starts
    active_knots: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def to_dict(self) -> dict:
        return {
            "density": self.density.to_dict(),
            "log_likelihood": self.log_likelihood,
            "objective": self.objective,
            "iterations": self.iterations,
            "max_characterization_residual": self.max_characterization_residual,
            "converged": self.converged,
            "n": self.n,
        }


def standardize(points: np.ndarray) -> tuple[float, float]:
    """Center and half-range used to map the data onto ``[-1, 1]``."""
    lo, hi = float(points[0]), float(points[-1])
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


def density_from_solution(prob, result, center, half, x=None) -> PiecewiseLogLinearDensity:
    """Read the fitted density off a solver result.

    ``x`` holds the grid in original units; passing it keeps knots bitwise
    equal to the data points instead of a round trip through ``z``.
    """
    bp = np.unique(np.concatenate([[0, len(prob.z) - 1], prob.kink_index[result.active]]))
    grid = center + half * prob.z if x is None else np.asarray(x, dtype=float)
    knots = grid[bp]
    values = result.phi[bp] - np.log(half)
    return PiecewiseLogLinearDensity(knots, values)


def fit(sample: Sample, opts: SolverOptions | None = None, *, raise_on_failure: bool = True) -> FitReport:
    """Log-concave MLE of ``sample``.

    Raises :class:`NotConverged` (carrying the best iterate) if the active-set
    loop exhausts ``opts.max_iter``.
    """
    opts = opts or SolverOptions()
    center, half = standardize(sample.points)
    z = (sample.points - center) / half
    idx = np.arange(1, len(z) - 1)
    prob = _activeset.Problem(z, sample.weights, True, idx, np.ones(len(idx)))
    res = _activeset.solve(prob, tol=opts.tol, obj_tol=opts.obj_tol, max_iter=opts.max_iter)
    density = density_from_solution(prob, res, center, half, sample.points)
    phi_data = res.phi - np.log(half)
    report = FitReport(
        density=density,
        log_likelihood=float(sample.n * np.dot(sample.weights, phi_data)),
        objective=float(res.objective - np.log(half) + 1.0),
        iterations=res.iterations,
        max_characterization_residual=res.residual,
        converged=res.converged,
        n=sample.n,
        history=res.history - np.log(half) + 1.0,
        active_knots=sample.points[idx[res.active]],
    )
    if not res.converged and raise_on_failure:
        raise NotConverged(
            f"unconstrained fit stopped after {res.iterations} iterations "
            f"(residual {res.residual:.3g})",
            report,
        )
    return report


def check_characterization(report: FitReport, sample: Sample, tol: float | None = None) -> CharacterizationReport:
    """Finite-sample optimality certificate for an unconstrained fit.

    At an exact MLE ``int_{X(1)}^x (F_hat - F_n) <= 0`` for every ``x`` with
    equality at the knots, and ``|F_n(tau) - F_hat(tau)| <= 1/n`` at knots.
    """
    return characterize(report.density, sample, mode=None, tol=tol)
