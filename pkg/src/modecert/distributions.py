"""Reference families with closed-form mode constants, samplers and the
Laplace-to-mode-one projection used as a fixed-alternative example."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy import optimize, stats

from .errors import UndefinedConstant, UnsupportedFamily
from .geometry import kl_divergence
from .sample import Sample

__all__ = [
    "ReferenceDistribution",
    "LaplaceProjection",
    "parse_dist",
    "table1_constants",
    "mode_constant_C",
    "curvature_constant",
    "scaling_constants",
    "solve_laplace_projection",
    "laplace_projection_density",
    "stream",
    "sample",
    "TABLE1",
]

FOUR_FACT = float(factorial(4))


def stream(seed: int, *stream_ids: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, *stream_ids)``.

    Streams for different ids are independent and do not depend on the order
    in which they are created.  With no ids the key is ``(seed, 0)``.
    """
    ids = [int(i) for i in stream_ids] or [0]
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *ids])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ReferenceDistribution:
    family: str
    params: tuple = ()
    _frozen: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_frozen", _scipy_frozen(self.family, self.params))

    def __reduce__(self):
        return (type(self), (self.family, self.params))

    # density interface shared with PiecewiseLogLinearDensity
    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self._frozen.support()
        return float(lo), float(hi)

    def logpdf(self, x):
        return self._frozen.logpdf(x)

    def pdf(self, x):
        return self._frozen.pdf(x)

    def cdf(self, x):
        return self._frozen.cdf(x)

    def ppf(self, q):
        return self._frozen.ppf(q)

    def breakpoints(self) -> np.ndarray:
        if self.family == "laplace":
            return np.array([self.params[0]])
        return np.array([])

    @property
    def mode(self) -> float:
        if self.family in ("laplace", "uniform"):
            return float(self.params[0])
        return table1_constants(self)[0]

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Unsorted i.i.d. draws."""
        fam, p = self.family, self.params
        if fam == "normal":
            return p[0] + p[1] * rng.standard_normal(n)
        if fam == "gamma":
            return p[1] * rng.standard_gamma(p[0], n)
        if fam == "chisq":
            return 2.0 * rng.standard_gamma(p[0] / 2.0, n)
        if fam == "beta":
            return rng.beta(p[0], p[1], n)
        u = rng.random(n)
        if fam == "uniform":
            return p[0] + (p[1] - p[0]) * u
        if fam == "laplace":
            v = u - 0.5
            return p[0] - p[1] * np.sign(v) * np.log1p(-2.0 * np.abs(v))
        if fam == "logistic":
            return p[0] + p[1] * (np.log(u) - np.log1p(-u))
        if fam == "gumbel":
            return p[0] - p[1] * np.log(-np.log(u))
        if fam == "weibull":
            return p[1] * (-np.log1p(-u)) ** (1.0 / p[0])
        raise UnsupportedFamily(fam)

    def spec(self) -> str:
        return f"{self.family}:" + ",".join(repr(float(v)) for v in self.params)


_DEFAULTS = {
    "normal": (0.0, 1.0),
    "gamma": (3.0, 1.0),
    "beta": (2.0, 3.0),
    "weibull": (1.5, 1.0),
    "laplace": (0.0, 1.0),
    "logistic": (0.0, 1.0),
    "gumbel": (0.0, 1.0),
    "chisq": (4.0,),
    "uniform": (0.0, 1.0),
}
_ALIASES = {"chi2": "chisq", "chisquared": "chisq", "gauss": "normal", "norm": "normal"}


def _scipy_frozen(family, p):
    if family == "normal":
        return stats.norm(loc=p[0], scale=p[1])
    if family == "gamma":
        return stats.gamma(p[0], scale=p[1])
    if family == "chisq":
        return stats.chi2(p[0])
    if family == "beta":
        return stats.beta(p[0], p[1])
    if family == "weibull":
        return stats.weibull_min(p[0], scale=p[1])
    if family == "laplace":
        return stats.laplace(loc=p[0], scale=p[1])
    if family == "logistic":
        return stats.logistic(loc=p[0], scale=p[1])
    if family == "gumbel":
        return stats.gumbel_r(loc=p[0], scale=p[1])
    if family == "uniform":
        return stats.uniform(loc=p[0], scale=p[1] - p[0])
    raise UnsupportedFamily(f"unknown family {family!r}")


def parse_dist(text: str) -> ReferenceDistribution:
    """Parse ``family[:p1,p2]``, e.g. ``normal:0,1`` or ``chisq:4``."""
    name, _, args = text.strip().partition(":")
    name = _ALIASES.get(name.lower(), name.lower())
    if name not in _DEFAULTS:
        raise UnsupportedFamily(f"unknown family {name!r}")
    params = tuple(float(a) for a in args.split(",")) if args else _DEFAULTS[name]
    if len(params) != len(_DEFAULTS[name]):
        raise UnsupportedFamily(f"{name} takes {len(_DEFAULTS[name])} parameters")
    return ReferenceDistribution(name, params)


def table1_constants(dist: ReferenceDistribution) -> tuple[float, float, float, float]:
    """``(m, f0(m), f0''(m), phi0''(m))`` in closed form.

    ``f0''(m) = f0(m) * phi0''(m)`` because ``phi0'(m) = 0`` at an interior
    mode.  Families whose log-density has no second derivative at the mode
    (Laplace, uniform) raise :class:`UndefinedConstant`.
    """
    fam, p = dist.family, dist.params
    if fam == "normal":
        mu, s = p
        m = mu
        f = 1.0 / (s * np.sqrt(2.0 * np.pi))
        curv = -1.0 / s**2
    elif fam in ("gamma", "chisq"):
        k, theta = (p[0], p[1]) if fam == "gamma" else (p[0] / 2.0, 2.0)
        if k <= 1:
            raise UndefinedConstant(f"{fam} with shape <= 1 has its mode at the boundary")
        m = (k - 1.0) * theta
        curv = -(k - 1.0) / m**2
        f = float(np.exp(dist.logpdf(m)))
    elif fam == "beta":
        a, b = p
        if a <= 1 or b <= 1:
            raise UndefinedConstant("beta needs both shapes > 1")
        m = (a - 1.0) / (a + b - 2.0)
        curv = -(a - 1.0) / m**2 - (b - 1.0) / (1.0 - m) ** 2
        f = float(np.exp(dist.logpdf(m)))
    elif fam == "weibull":
        k, lam = p
        if k <= 1:
            raise UndefinedConstant("weibull needs shape > 1")
        m = lam * ((k - 1.0) / k) ** (1.0 / k)
        curv = -(k - 1.0) / m**2 - k * (k - 1.0) * m ** (k - 2.0) / lam**k
        f = float(np.exp(dist.logpdf(m)))
    elif fam == "logistic":
        mu, s = p
        m, f, curv = mu, 1.0 / (4.0 * s), -1.0 / (2.0 * s**2)
    elif fam == "gumbel":
        mu, beta = p
        m, f, curv = mu, np.exp(-1.0) / beta, -1.0 / beta**2
    elif fam in ("laplace", "uniform"):
        raise UndefinedConstant(f"{fam} has no curvature at its mode")
    else:
        raise UnsupportedFamily(fam)
    return float(m), float(f), float(f * curv), float(curv)


def mode_constant_C(dist: ReferenceDistribution) -> float:
    """``((4!)^2 f0(m) / f0''(m)^2)^(1/5)``, the scale of the mode estimator's limit law."""
    _, f, f2, _ = table1_constants(dist)
    return (FOUR_FACT**2 * f / f2**2) ** 0.2


def curvature_constant(dist: ReferenceDistribution) -> float:
    """``(|phi0''(m)| / (4! f0(m)^2))^(1/5)``; the reciprocal of ``gamma1 * gamma2^2``."""
    _, f, _, curv = table1_constants(dist)
    return (abs(curv) / (FOUR_FACT * f * f)) ** 0.2


def scaling_constants(dist: ReferenceDistribution) -> tuple[float, float]:
    """Local rescaling constants ``(gamma1, gamma2)`` at the mode."""
    _, f, _, curv = table1_constants(dist)
    a = abs(curv)
    g1 = (f**4 * a**3 / FOUR_FACT**3) ** 0.2
    g2 = (FOUR_FACT**2 / (f * a * a)) ** 0.2
    return g1, g2


TABLE1 = {
    "normal:0,1": ("normal", (0.0, 1.0)),
    "gamma:3,1": ("gamma", (3.0, 1.0)),
    "weibull:1.5,1": ("weibull", (1.5, 1.0)),
    "beta:2,3": ("beta", (2.0, 3.0)),
    "logistic": ("logistic", (0.0, 1.0)),
    "gumbel": ("gumbel", (0.0, 1.0)),
    "chisq:4": ("chisq", (4.0,)),
}


def sample(dist: ReferenceDistribution, n: int, seed: int, *stream_ids: int) -> Sample:
    """Deterministic sorted sample of size ``n`` from ``dist``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return Sample.from_data(dist.draw(n, stream(seed, *stream_ids)))


# --- Laplace(0, 1) projected onto densities with mode 1 --------------------


def _c_of(a: float) -> float:
    return 1.0 / (2.0 * np.exp(a) - (2.0 + a))


@dataclass(frozen=True)
class ThreePieceExponential:
    """``g_a``: Laplace left tail up to ``-a``, flat to ``1``, exponential decay after."""

    a: float

    @property
    def c(self) -> float:
        return _c_of(self.a)

    @property
    def support(self):
        return (-np.inf, np.inf)

    def breakpoints(self):
        return np.array([-self.a, 1.0])

    def strict_points(self):
        """Kinks of the log-density with their one-sided slopes."""
        return np.array([-self.a, 1.0]), np.array([1.0, 0.0]), np.array([0.0, -self.c])

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        a, c = self.a, self.c
        out = np.where(
            x <= -a, np.log(0.5) + x,
            np.where(x <= 1.0, np.log(0.5) - a, np.log(0.5) - a - c * (x - 1.0)),
        )
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        a, c = self.a, self.c
        h = 0.5 * np.exp(-a)
        with np.errstate(over="ignore"):
            out = np.where(
                x <= -a, 0.5 * np.exp(np.minimum(x, -a)),
                np.where(
                    x <= 1.0, h * (1.0 + x + a),
                    h * (2.0 + a) + h * (-np.expm1(-c * np.maximum(x - 1.0, 0.0))) / c,
                ),
            )
        return float(out) if out.ndim == 0 else out

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        a, c = self.a, self.c
        h = 0.5 * np.exp(-a)
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.log(2.0 * q)
            mid = q / h - 1.0 - a
            right = 1.0 - np.log1p(-(q - h * (2.0 + a)) * c / h) / c
        out = np.where(q <= h, left, np.where(q <= h * (2.0 + a), mid, right))
        return float(out) if out.ndim == 0 else out

    def total_mass(self) -> float:
        return 0.5 * np.exp(-self.a) * (2.0 + self.a + 1.0 / self.c)


@dataclass(frozen=True)
class LaplaceProjection:
    a_star: float
    c_star: float
    density: ThreePieceExponential
    kl: float

    def to_dict(self) -> dict:
        return {"a_star": self.a_star, "c_star": self.c_star, "kl": self.kl}


def laplace_projection_density(a: float) -> ThreePieceExponential:
    return ThreePieceExponential(float(a))


def solve_laplace_projection() -> LaplaceProjection:
    """Projection of Laplace(0, 1) onto log-concave densities with mode 1.

    The projection lies in the family ``g_a``; the optimal ``a`` solves
    ``c(a)^2 = exp(-(a - 1))`` on ``(0, 1]``.
    """

    def h(a):
        return _c_of(a) ** 2 - np.exp(-(a - 1.0))

    a_star = optimize.brentq(h, 1e-6, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    g = ThreePieceExponential(a_star)
    kl = kl_divergence(ReferenceDistribution("laplace", (0.0, 1.0)), g)
    return LaplaceProjection(a_star=a_star, c_star=g.c, density=g, kl=kl)
