"""Concave piecewise-linear log-densities and the quantities read off them."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy import integrate

from .segments import first_moments, segment_mass

__all__ = [
    "PiecewiseLogLinearDensity",
    "ModeSummary",
    "eval_log",
    "total_mass",
    "cdf",
    "mode_summary",
    "kl_divergence",
    "FLAT_SLOPE_TOL",
]

FLAT_SLOPE_TOL = 1e-10
CONCAVITY_SLACK = 1e-10


class LogDensity(Protocol):
    """Anything :func:`kl_divergence` can integrate against."""

    support: tuple[float, float]

    def logpdf(self, x): ...

    def breakpoints(self) -> np.ndarray: ...


@dataclass(frozen=True)
class ModeSummary:
    modal_lo: float
    modal_hi: float
    mode: float
    max_log_density: float


@dataclass(frozen=True, eq=False)
class PiecewiseLogLinearDensity:
    """``exp(phi)`` with ``phi`` linear between ``knots`` and ``-inf`` outside."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float)
        values = np.array(self.values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or len(knots) < 2:
            raise ValueError("knots and values must be 1-d of equal length >= 2")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise ValueError("knots and values must be finite")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        knots.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def concavity_slack(self) -> float:
        """``min_j (s_j - s_{j+1})``; non-negative (up to rounding) when concave."""
        s = self.slopes
        if len(s) < 2:
            return np.inf
        return float(np.min(s[:-1] - s[1:]))

    def is_concave(self, slack: float = CONCAVITY_SLACK) -> bool:
        return self.concavity_slack() >= -slack

    def breakpoints(self) -> np.ndarray:
        return self.knots

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        out = np.interp(x, self.knots, self.values)
        out = np.where((x < lo) | (x > hi), -np.inf, out)
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def segment_masses(self) -> np.ndarray:
        return segment_mass(self.values[:-1], self.values[1:], np.diff(self.knots))

    def total_mass(self) -> float:
        return float(np.sum(self.segment_masses()))

    def cdf(self, x):
        """Integral of the density from the left support end up to ``x``."""
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x)
        cum = np.concatenate([[0.0], np.cumsum(self.segment_masses())])
        lo, hi = self.support
        clipped = np.clip(flat, lo, hi)
        j = np.clip(np.searchsorted(self.knots, clipped, side="right") - 1, 0, len(self.knots) - 2)
        left = self.knots[j]
        dx = clipped - left
        phi_x = np.interp(clipped, self.knots, self.values)
        j00, _, _ = first_moments(self.values[j], phi_x)
        out = cum[j] + dx * j00
        out = np.where(flat >= hi, cum[-1], out)
        out = np.where(flat <= lo, 0.0, out)
        out = out.reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    def mode_summary(self) -> ModeSummary:
        values = self.values
        top = int(np.argmax(values))
        s = self.slopes
        lo = top
        while lo > 0 and abs(s[lo - 1]) <= FLAT_SLOPE_TOL:
            lo -= 1
        hi = top
        while hi < len(s) and abs(s[hi]) <= FLAT_SLOPE_TOL:
            hi += 1
        return ModeSummary(
            modal_lo=float(self.knots[lo]),
            modal_hi=float(self.knots[hi]),
            mode=float(self.knots[lo]),
            max_log_density=float(values[lo:hi + 1].max()),
        )

    def affine(self, scale: float, shift: float) -> PiecewiseLogLinearDensity:
        """Density of ``scale * X + shift`` for ``X`` with this density, ``scale > 0``."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        return PiecewiseLogLinearDensity(scale * self.knots + shift, self.values - np.log(scale))

    def to_dict(self) -> dict:
        return {"knots": self.knots.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> PiecewiseLogLinearDensity:
        return cls(np.asarray(data["knots"], dtype=float), np.asarray(data["values"], dtype=float))

    def to_json(self) -> str:
        from .io import dumps

        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> PiecewiseLogLinearDensity:
        return cls.from_dict(json.loads(text))


def eval_log(density: PiecewiseLogLinearDensity, x):
    return density.logpdf(x)


def total_mass(density: PiecewiseLogLinearDensity) -> float:
    return density.total_mass()


def cdf(density: PiecewiseLogLinearDensity, x):
    return density.cdf(x)


def mode_summary(density: PiecewiseLogLinearDensity) -> ModeSummary:
    return density.mode_summary()


def _support_contains(outer, inner, slack=1e-12) -> bool:
    finite = [abs(v) for v in inner if np.isfinite(v)]
    pad = slack * max([1.0] + finite)
    return outer[0] <= inner[0] + pad and outer[1] >= inner[1] - pad


def kl_divergence(f: LogDensity, g: LogDensity, atol: float = 1e-9) -> float:
    """Kullback-Leibler divergence ``int f log(f / g)``.

    Returns ``inf`` when ``f`` puts mass where ``g`` vanishes.  The integral
    is split at the breakpoints of both densities and each smooth piece is
    integrated adaptively.
    """
    f_lo, f_hi = f.support
    if not _support_contains(g.support, f.support):
        return np.inf
    cuts = np.concatenate([f.breakpoints(), g.breakpoints()])
    cuts = cuts[np.isfinite(cuts) & (cuts > f_lo) & (cuts < f_hi)]
    edges = np.unique(np.concatenate([[f_lo], cuts, [f_hi]]))

    def integrand(x):
        lf = f.logpdf(x)
        if lf == -np.inf:
            return 0.0
        lg = g.logpdf(x)
        if lg == -np.inf:
            return np.inf
        return float(np.exp(lf) * (lf - lg))

    total = 0.0
    pieces = max(len(edges) - 1, 1)
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a, b, epsabs=atol / pieces, epsrel=1e-12, limit=200)
        if not np.isfinite(val):
            return np.inf
        total += val
    return max(total, 0.0)
