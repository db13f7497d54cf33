"""Seeded, parallel replication engine for null, coverage and power studies.

Replication ``r`` of a study keyed by ``seed`` always draws from
``stream(seed, ..., r)``, so results do not depend on how replications are
spread across workers.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from .distributions import ReferenceDistribution, sample, solve_laplace_projection
from .errors import NotConverged, SimulationFailed
from .inference import CriticalValueTable, confidence_intervals, critical_value, lr_statistic
from .unconstrained import SolverOptions

__all__ = [
    "SimulationReport",
    "resolve_workers",
    "simulate_null",
    "estimate_critical_values",
    "coverage_study",
    "pivotality_check",
    "PivotalityReport",
    "alternative_consistency",
    "ConsistencyReport",
    "upper_quantiles",
    "FAILURE_CAP",
]

FAILURE_CAP = 0.01
QUANTILE_METHOD = "linear"  # Hyndman-Fan type 7


def resolve_workers(workers: int | None = None) -> int:
    """Worker count, capped by ``MODECERT_THREADS`` when set."""
    n = workers if workers is not None else (os.cpu_count() or 1)
    cap = os.environ.get("MODECERT_THREADS")
    if cap:
        n = min(n, int(cap))
    return max(int(n), 1)


def _run(fn: Callable, tasks: list, workers: int | None) -> list:
    w = min(resolve_workers(workers), max(len(tasks), 1))
    if w <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * w))
    with ProcessPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def _check_failures(failures: int, total: int, what: str):
    if failures > FAILURE_CAP * total:
        raise SimulationFailed(f"{failures} of {total} {what} replications failed to converge")


def upper_quantiles(values, alphas) -> np.ndarray:
    """Upper-``alpha`` quantiles (type 7) of ``values``."""
    v = np.sort(np.asarray(values, dtype=float))
    return np.quantile(v, 1.0 - np.asarray(alphas, dtype=float), method=QUANTILE_METHOD)


@dataclass
class SimulationReport:
    config: dict
    statistics: np.ndarray = field(repr=False)
    failures: int = 0
    wall_time: float = 0.0
    quantiles: dict = field(default_factory=dict)  # alpha -> upper quantile
    coverage: dict = field(default_factory=dict)  # level -> fraction covering
    coverage_se: dict = field(default_factory=dict)
    mean_length: dict = field(default_factory=dict)
    gap_count: dict = field(default_factory=dict)
    lengths: dict = field(default_factory=dict, repr=False)

    def to_dict(self, include_statistics: bool = False) -> dict:
        out = {
            "config": self.config,
            "failures": self.failures,
            "wall_time": self.wall_time,
            "replications": int(len(self.statistics)) if self.statistics is not None else 0,
        }
        if self.quantiles:
            out["quantiles"] = {f"{a:g}": q for a, q in self.quantiles.items()}
        if self.coverage:
            out["coverage"] = {f"{lv:g}": c for lv, c in self.coverage.items()}
            out["coverage_se"] = {f"{lv:g}": c for lv, c in self.coverage_se.items()}
            out["mean_length"] = {f"{lv:g}": c for lv, c in self.mean_length.items()}
            out["gap_count"] = {f"{lv:g}": c for lv, c in self.gap_count.items()}
        if include_statistics:
            out["statistics"] = self.statistics
        return out


# --- null distribution -----------------------------------------------------


def _null_task(task):
    dist, m, n, seed, key, opts = task
    x = sample(dist, n, seed, *key)
    try:
        return lr_statistic(x, m, opts).stat
    except NotConverged:
        return None


def _null_stats(dist, m, n, M, seed, prefix, opts, workers):
    tasks = [(dist, m, n, seed, (*prefix, r), opts) for r in range(M)]
    raw = _run(_null_task, tasks, workers)
    failures = sum(v is None for v in raw)
    _check_failures(failures, M, "null")
    return np.array([v for v in raw if v is not None], dtype=float), failures


DEFAULT_ALPHAS = (0.25, 0.20, 0.15, 0.10, 0.05, 0.01)


def simulate_null(
    dist: ReferenceDistribution,
    m_true: float | None = None,
    n: int = 10_000,
    M: int = 2000,
    seed: int = 0,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    opts: SolverOptions | None = None,
    workers: int | None = None,
    _prefix: tuple = (),
) -> SimulationReport:
    """``M`` draws of ``2 log lambda_n(m_true)`` with data from ``dist``."""
    if M < 1:
        raise ValueError("M must be positive")
    m = dist.mode if m_true is None else float(m_true)
    t0 = time.perf_counter()
    values, failures = _null_stats(dist, m, n, M, seed, _prefix, opts, workers)
    q = upper_quantiles(values, alphas)
    return SimulationReport(
        config={"kind": "null", "dist": dist.spec(), "m": m, "n": n, "M": M, "seed": seed,
                "quantile_method": "type7"},
        statistics=values,
        failures=failures,
        wall_time=time.perf_counter() - t0,
        quantiles={float(a): float(v) for a, v in zip(alphas, q)},
    )


def _strictly_decreasing(d: np.ndarray) -> np.ndarray:
    """Least-squares non-increasing fit, then break exact ties downward."""
    fitted = optimize.isotonic_regression(d, increasing=False).x
    out = fitted.copy()
    for i in range(1, len(out)):
        if out[i] >= out[i - 1]:
            out[i] = np.nextafter(out[i - 1], -np.inf)
    return out


def estimate_critical_values(
    dist: ReferenceDistribution,
    n: int,
    M: int,
    alphas: Sequence[float],
    seed: int,
    opts: SolverOptions | None = None,
    workers: int | None = None,
) -> CriticalValueTable:
    """Simulated ``d_alpha`` table, forced strictly decreasing in ``alpha``."""
    alphas = np.sort(np.asarray(alphas, dtype=float))
    rep = simulate_null(dist, None, n, M, seed, alphas, opts, workers)
    d = _strictly_decreasing(upper_quantiles(rep.statistics, alphas))
    meta = {"dist": dist.spec(), "n": n, "M": M, "seed": seed, "quantile_method": "type7",
            "failures": rep.failures}
    return CriticalValueTable(alphas, d, meta)


# --- coverage --------------------------------------------------------------


def _coverage_task(task):
    dist, m, n, seed, r, alphas, table, grid, opts = task
    x = sample(dist, n, seed, r)
    try:
        cis = confidence_intervals(x, alphas, table, grid, opts)
    except NotConverged:
        return None
    return [(ci.contains(m), ci.length, ci.gap_flag) for ci in cis]


def coverage_study(
    dist: ReferenceDistribution,
    n: int,
    M: int,
    levels: Sequence[float] = (0.80, 0.90, 0.95, 0.99),
    seed: int = 0,
    table: CriticalValueTable | None = None,
    grid: int = 201,
    opts: SolverOptions | None = None,
    workers: int | None = None,
) -> SimulationReport:
    """Coverage and mean length of the inverted-LR intervals at each level."""
    from .inference import default_table

    table = table if table is not None else default_table()
    levels = [float(v) for v in levels]
    alphas = [round(1.0 - v, 12) for v in levels]
    for a in alphas:
        critical_value(table, a)  # fail fast on out-of-range levels
    m = dist.mode
    t0 = time.perf_counter()
    tasks = [(dist, m, n, seed, r, alphas, table, grid, opts) for r in range(M)]
    raw = _run(_coverage_task, tasks, workers)
    ok = [v for v in raw if v is not None]
    failures = len(raw) - len(ok)
    _check_failures(failures, M, "coverage")
    rep = SimulationReport(
        config={"kind": "coverage", "dist": dist.spec(), "m": m, "n": n, "M": M, "seed": seed,
                "levels": levels, "grid": grid, "table": dict(table.meta)},
        statistics=np.empty(0),
        failures=failures,
    )
    for j, lv in enumerate(levels):
        cover = np.array([row[j][0] for row in ok], dtype=float)
        length = np.array([row[j][1] for row in ok], dtype=float)
        p = float(cover.mean())
        rep.coverage[lv] = p
        rep.coverage_se[lv] = float(np.sqrt(p * (1 - p) / len(cover)))
        rep.mean_length[lv] = float(length.mean())
        rep.gap_count[lv] = int(sum(row[j][2] for row in ok))
        rep.lengths[lv] = length
    rep.wall_time = time.perf_counter() - t0
    return rep


# --- pivotality ------------------------------------------------------------


@dataclass
class PivotalityReport:
    labels: list
    ks: np.ndarray
    statistics: list = field(repr=False)

    def to_dict(self, include_statistics: bool = False) -> dict:
        out = {"labels": self.labels, "ks": self.ks}
        if include_statistics:
            out["statistics"] = {lab: s for lab, s in zip(self.labels, self.statistics)}
        return out


def pivotality_check(
    dists: Sequence[ReferenceDistribution],
    n: int,
    M: int,
    seed: int,
    opts: SolverOptions | None = None,
    workers: int | None = None,
) -> PivotalityReport:
    """Pairwise two-sample KS distances between simulated null distributions."""
    runs = [
        simulate_null(dist, None, n, M, seed, opts=opts, workers=workers, _prefix=(k,)).statistics
        for k, dist in enumerate(dists)
    ]
    k = len(runs)
    ks = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            ks[i, j] = ks[j, i] = stats.ks_2samp(runs[i], runs[j]).statistic
    return PivotalityReport([d.spec() for d in dists], ks, runs)


# --- fixed alternatives -----------------------------------------------------


@dataclass
class ConsistencyReport:
    dist: str
    m: float
    n_grid: list
    mean_stat_over_n: list
    stat_over_n: list = field(repr=False)
    target: float | None = None  # 2 K(f0, f0_m) when known
    reject_rate: list | None = None
    alpha: float | None = None
    failures: int = 0

    def to_dict(self) -> dict:
        return {
            "dist": self.dist,
            "m": self.m,
            "n_grid": self.n_grid,
            "mean_stat_over_n": self.mean_stat_over_n,
            "target": self.target,
            "reject_rate": self.reject_rate,
            "alpha": self.alpha,
            "failures": self.failures,
        }


def _twice_kl_target(dist: ReferenceDistribution, m: float) -> float | None:
    """``2 K(f0, f0_m)`` where a closed form is available."""
    if m == dist.mode and dist.family != "laplace":
        return 0.0
    if dist.family == "laplace":
        mu, b = dist.params
        u = (m - mu) / b
        if u == 0:
            return 0.0
        if abs(u) == 1.0:
            # K is invariant under the affine map taking Laplace(mu, b) to Laplace(0, 1)
            return 2.0 * solve_laplace_projection().kl
    return None


def alternative_consistency(
    dist: ReferenceDistribution,
    m: float,
    n_grid: Sequence[int],
    reps: int,
    seed: int,
    table: CriticalValueTable | None = None,
    alpha: float | None = None,
    opts: SolverOptions | None = None,
    workers: int | None = None,
) -> ConsistencyReport:
    """``stat / n`` under a fixed alternative, and the rejection rate if ``alpha`` is given."""
    means, per_n, rates = [], [], []
    failures = 0
    d = critical_value(table, alpha) if alpha is not None else None
    for k, n in enumerate(n_grid):
        values, f = _null_stats(dist, float(m), int(n), reps, seed, (k,), opts, workers)
        failures += f
        per_n.append(values / n)
        means.append(float(np.mean(values / n)))
        if d is not None:
            rates.append(float(np.mean(values > d)))
    return ConsistencyReport(
        dist=dist.spec(),
        m=float(m),
        n_grid=[int(n) for n in n_grid],
        mean_stat_over_n=means,
        stat_over_n=per_n,
        target=_twice_kl_target(dist, float(m)),
        reject_rate=rates if d is not None else None,
        alpha=alpha,
        failures=failures,
    )
