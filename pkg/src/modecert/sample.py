from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample

MERGE_SPACING = 1e-12


@dataclass(frozen=True, eq=False)
class Sample:
    """Empirical measure: sorted distinct points with multiplicity weights.

    ``n`` is the number of raw observations; ``weights`` are multiplicities
    divided by ``n``.
    """

    points: np.ndarray
    weights: np.ndarray
    n: int

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        wts = np.array(self.weights, dtype=float)
        if pts.ndim != 1 or pts.shape != wts.shape:
            raise ValueError("points and weights must be 1-d and aligned")
        if len(pts) < 2:
            raise DegenerateSample("need at least two distinct observations")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.any(wts <= 0) or abs(wts.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to one")
        pts.flags.writeable = False
        wts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def from_data(cls, data) -> Sample:
        """Sort, reject non-finite values and collapse ties into weights."""
        x = np.asarray(data, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise ValueError("observations must be finite")
        n = len(x)
        if n == 0:
            raise DegenerateSample("empty sample")
        x = np.sort(x)
        span = x[-1] - x[0]
        # start a new group wherever the gap exceeds the merge spacing
        new_group = np.concatenate([[True], np.diff(x) > MERGE_SPACING * max(span, 1e-300)])
        starts = np.flatnonzero(new_group)
        counts = np.diff(np.concatenate([starts, [n]]))
        if len(starts) < 2:
            raise DegenerateSample("need at least two distinct observations")
        return cls(x[starts], counts / n, n)

    @property
    def lo(self) -> float:
        return float(self.points[0])

    @property
    def hi(self) -> float:
        return float(self.points[-1])

    @property
    def span(self) -> float:
        return self.hi - self.lo

    @property
    def counts(self) -> np.ndarray:
        return np.rint(self.weights * self.n).astype(int)

    def ecdf(self, x, left: bool = False):
        """``F_n(x)``; with ``left=True`` the left limit ``F_n(x-)``."""
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        side = "left" if left else "right"
        out = cum[np.searchsorted(self.points, x, side=side)]
        return np.minimum(out, 1.0)

    def mean_of(self, values) -> float:
        return float(np.dot(self.weights, values))

    def affine(self, scale: float, shift: float) -> Sample:
        if scale <= 0:
            raise ValueError("scale must be positive")
        return Sample(scale * self.points + shift, self.weights, self.n)
