"""Likelihood-ratio test for the mode and confidence sets by test inversion."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .constrained import fit_constrained
from .errors import OutOfRange
from .sample import Sample
from .unconstrained import FitReport, SolverOptions, fit

__all__ = [
    "LrTestResult",
    "CriticalValueTable",
    "ConfidenceInterval",
    "lr_statistic",
    "lr_test",
    "critical_value",
    "p_value",
    "confidence_interval",
    "confidence_intervals",
    "default_table",
    "reference_table",
    "NEGATIVE_CLAMP",
]

NEGATIVE_CLAMP = 1e-7
DEFAULT_GRID = 201
BISECT_RTOL = 1e-4
_ALPHA_SLACK = 1e-12


@dataclass
class LrTestResult:
    m: float
    stat: float
    loglik_u: float
    loglik_c: float
    n: int
    p_value: float | None = None
    alpha: float | None = None
    critical_value: float | None = None
    reject: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def reject_at(self) -> float | None:
        """The level at which the test rejected, if it did."""
        return self.alpha if self.reject else None

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "stat": self.stat,
            "loglik_u": self.loglik_u,
            "loglik_c": self.loglik_c,
            "n": self.n,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "critical_value": self.critical_value,
            "reject": self.reject,
            "reject_at": self.reject_at,
            "notes": list(self.notes),
        }


@dataclass(frozen=True, eq=False)
class CriticalValueTable:
    """Upper quantiles ``d_alpha`` of the null limit of ``2 log lambda_n``.

    ``alphas`` increase and ``d`` strictly decreases.
    """

    alphas: np.ndarray
    d: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.alphas, dtype=float)
        d = np.array(self.d, dtype=float)
        if a.ndim != 1 or a.shape != d.shape or len(a) < 1:
            raise ValueError("alphas and d must be 1-d, aligned and non-empty")
        order = np.argsort(a)
        a, d = a[order], d[order]
        if np.any(np.diff(a) <= 0):
            raise ValueError("alphas must be distinct")
        if np.any((a <= 0) | (a >= 1)):
            raise ValueError("alphas must lie in (0, 1)")
        if np.any(np.diff(d) >= 0):
            raise ValueError("d must be strictly decreasing in alpha")
        a.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "d", d)

    @property
    def alpha_range(self) -> tuple[float, float]:
        return float(self.alphas[0]), float(self.alphas[-1])

    def critical_value(self, alpha: float) -> float:
        return critical_value(self, alpha)

    def p_value(self, stat: float) -> float:
        """Level at which ``stat`` sits on the boundary, clamped to the table range."""
        lo, hi = self.alpha_range
        # d decreases in alpha, so interpolate alpha against reversed d
        return float(np.interp(stat, self.d[::-1], self.alphas[::-1], left=hi, right=lo))

    def to_dict(self) -> dict:
        return {"alphas": self.alphas.tolist(), "d": self.d.tolist(), "meta": dict(self.meta)}

    @classmethod
    def from_dict(cls, data: dict) -> CriticalValueTable:
        return cls(data["alphas"], data["d"], dict(data.get("meta", {})))

    def to_json(self) -> str:
        from .io import dumps

        return dumps(self.to_dict())

    @classmethod
    def load(cls, path) -> CriticalValueTable:
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_table() -> CriticalValueTable:
    """The shipped table, simulated under N(0, 1) with n = 10^4."""
    text = resources.files("modecert").joinpath("tables/d_alpha_default.json").read_text()
    return CriticalValueTable.from_dict(json.loads(text))


def reference_table() -> CriticalValueTable:
    """Published two-digit critical values of the limiting null distribution."""
    return CriticalValueTable(
        alphas=[0.01, 0.05, 0.10, 0.15, 0.20, 0.25],
        d=[1.92, 1.11, 0.79, 0.61, 0.49, 0.40],
        meta={"source": "published", "n": 1_000_000},
    )


def critical_value(table: CriticalValueTable, alpha: float) -> float:
    """``d_alpha``; exact at nodes, linear in ``alpha`` between them."""
    lo, hi = table.alpha_range
    if not (lo - _ALPHA_SLACK <= alpha <= hi + _ALPHA_SLACK):
        raise OutOfRange(f"alpha={alpha} outside the table range [{lo}, {hi}]")
    hit = np.flatnonzero(np.abs(table.alphas - alpha) <= _ALPHA_SLACK)
    if len(hit):
        return float(table.d[hit[0]])
    return float(np.interp(alpha, table.alphas, table.d))


def p_value(stat: float, null_samples) -> float:
    """Add-one Monte Carlo upper-tail probability of ``stat``."""
    s = np.asarray(null_samples, dtype=float)
    if s.size == 0:
        raise ValueError("null_samples must be non-empty")
    s = np.sort(s)
    exceed = s.size - np.searchsorted(s, stat, side="left")
    return float((1 + exceed) / (1 + s.size))


# --- the statistic -----------------------------------------------------------


def _in_modal_interval(u: FitReport, m: float) -> bool:
    ms = u.density.mode_summary()
    return ms.modal_lo <= m <= ms.modal_hi


def lr_statistic(
    sample: Sample,
    m: float,
    opts: SolverOptions | None = None,
    *,
    unconstrained: FitReport | None = None,
) -> LrTestResult:
    """``2 log lambda_n(m) = 2 n P_n(log f_hat - log f_hat_m)``.

    ``unconstrained`` may be passed to reuse an existing fit.  When ``m`` lies
    in the fitted modal interval the constraint is inactive and the statistic
    is exactly zero.
    """
    opts = opts or SolverOptions()
    u = unconstrained if unconstrained is not None else fit(sample, opts)
    m = float(m)
    notes = []
    if _in_modal_interval(u, m):
        return LrTestResult(m=m, stat=0.0, loglik_u=u.log_likelihood, loglik_c=u.log_likelihood, n=sample.n,
                            notes=["m in the unconstrained modal interval"])
    c = fit_constrained(sample, m, opts, warm_knots=u.active_knots)
    stat = 2.0 * (u.log_likelihood - c.log_likelihood)
    if stat < 0:
        if stat < -NEGATIVE_CLAMP:
            notes.append(f"negative statistic {stat:.3g} beyond the clamp")
        else:
            notes.append(f"clamped negative statistic {stat:.3g} to 0")
            stat = 0.0
    return LrTestResult(m=m, stat=stat, loglik_u=u.log_likelihood, loglik_c=c.log_likelihood, n=sample.n,
                        notes=notes)


def lr_test(
    sample: Sample,
    m: float,
    alpha: float,
    table: CriticalValueTable | None = None,
    opts: SolverOptions | None = None,
) -> LrTestResult:
    """Reject ``H: M(f) = m`` iff ``2 log lambda_n(m) > d_alpha``."""
    table = table if table is not None else default_table()
    d = critical_value(table, alpha)
    res = lr_statistic(sample, m, opts)
    res.alpha = float(alpha)
    res.critical_value = d
    res.reject = bool(res.stat > d)
    res.p_value = table.p_value(res.stat)
    return res


# --- confidence sets -----------------------------------------------------------


@dataclass
class ConfidenceInterval:
    level: float
    lower: float
    upper: float
    alpha: float
    critical_value: float
    grid: np.ndarray = field(repr=False)
    grid_stat: np.ndarray = field(repr=False)
    grid_accepted: np.ndarray = field(repr=False)
    gap_flag: bool = False
    lower_open: bool = False  # accepted at the grid boundary; the set may extend further
    upper_open: bool = False

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, m: float) -> bool:
        return self.lower <= m <= self.upper

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "alpha": self.alpha,
            "critical_value": self.critical_value,
            "lower": self.lower,
            "upper": self.upper,
            "length": self.length,
            "gap_flag": self.gap_flag,
            "lower_open": self.lower_open,
            "upper_open": self.upper_open,
            "grid": self.grid,
            "grid_stat": self.grid_stat,
            "grid_accepted": self.grid_accepted,
        }


class _StatCache:
    def __init__(self, sample, opts, u):
        self.sample, self.opts, self.u = sample, opts, u
        self.values: dict[float, float] = {}

    def __call__(self, m: float) -> float:
        m = float(m)
        if m not in self.values:
            self.values[m] = lr_statistic(self.sample, m, self.opts, unconstrained=self.u).stat
        return self.values[m]


def _bisect(stat, accepted_x, rejected_x, d, steps):
    """Shrink a bracket toward the acceptance boundary; returns the accepted end.

    The midpoints depend only on the bracket, so for a monotone statistic the
    result is monotone in ``d``.
    """
    a, r = accepted_x, rejected_x
    for _ in range(steps):
        mid = 0.5 * (a + r)
        if stat(mid) <= d:
            a = mid
        else:
            r = mid
    return a


def confidence_intervals(
    sample: Sample,
    alphas: Sequence[float],
    table: CriticalValueTable | None = None,
    grid: int = DEFAULT_GRID,
    opts: SolverOptions | None = None,
) -> list[ConfidenceInterval]:
    """Intervals ``{m : 2 log lambda_n(m) <= d_alpha}`` for several levels.

    The statistic is evaluated once on a grid of ``grid`` points spanning
    ``[X(1) - R, X(n) + R]`` (``R`` the data range) plus the fitted mode, and
    the hull endpoints are refined by bisection to ``1e-4 R``.  Evaluations
    are shared between levels.
    """
    if grid < 2:
        raise ValueError("grid must have at least two points")
    table = table if table is not None else default_table()
    ds = [critical_value(table, a) for a in alphas]
    opts = opts or SolverOptions()
    u = fit(sample, opts)
    stat = _StatCache(sample, opts, u)
    R = sample.span
    mode = u.density.mode_summary().mode
    xs = np.unique(np.concatenate([np.linspace(sample.lo - R, sample.hi + R, grid), [mode]]))
    values = np.array([stat(x) for x in xs])
    spacing = 3.0 * R / (grid - 1)
    steps = max(int(np.ceil(np.log2(spacing / (BISECT_RTOL * R)))), 0)

    out = []
    for alpha, d in zip(alphas, ds):
        acc = values <= d
        idx = np.flatnonzero(acc)
        if len(idx) == 0:
            raise RuntimeError("no accepted grid point; the statistic at the fitted mode should be zero")
        i_lo, i_hi = int(idx[0]), int(idx[-1])
        gap = bool(len(idx) != i_hi - i_lo + 1)
        lower = xs[i_lo] if i_lo == 0 else _bisect(stat, xs[i_lo], xs[i_lo - 1], d, steps)
        upper = xs[i_hi] if i_hi == len(xs) - 1 else _bisect(stat, xs[i_hi], xs[i_hi + 1], d, steps)
        out.append(
            ConfidenceInterval(
                level=1.0 - float(alpha),
                lower=float(lower),
                upper=float(upper),
                alpha=float(alpha),
                critical_value=d,
                grid=xs,
                grid_stat=values,
                grid_accepted=acc,
                gap_flag=gap,
                lower_open=i_lo == 0,
                upper_open=i_hi == len(xs) - 1,
            )
        )
    return out


def confidence_interval(
    sample: Sample,
    alpha: float,
    table: CriticalValueTable | None = None,
    grid: int = DEFAULT_GRID,
    opts: SolverOptions | None = None,
) -> ConfidenceInterval:
    return confidence_intervals(sample, [alpha], table, grid, opts)[0]
