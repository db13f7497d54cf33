"""Log-concave mode inference: constrained MLEs, likelihood-ratio tests and intervals."""

from .constrained import ConstrainedFitReport, fit_constrained, population_projection_check
from .distributions import ReferenceDistribution, parse_dist, sample, solve_laplace_projection
from .errors import (
    DegenerateSample,
    NotConverged,
    OutOfRange,
    ParseError,
    SimulationFailed,
    UndefinedConstant,
    UnsupportedFamily,
)
from .geometry import PiecewiseLogLinearDensity, kl_divergence
from .inference import (
    CriticalValueTable,
    confidence_interval,
    confidence_intervals,
    critical_value,
    default_table,
    lr_statistic,
    lr_test,
    p_value,
    reference_table,
)
from .io import read_sample
from .sample import Sample
from .unconstrained import FitReport, SolverOptions, fit

__version__ = "0.1.0"

__all__ = [
    "ConstrainedFitReport",
    "CriticalValueTable",
    "DegenerateSample",
    "FitReport",
    "NotConverged",
    "OutOfRange",
    "ParseError",
    "PiecewiseLogLinearDensity",
    "ReferenceDistribution",
    "Sample",
    "SimulationFailed",
    "SolverOptions",
    "UndefinedConstant",
    "UnsupportedFamily",
    "confidence_interval",
    "confidence_intervals",
    "critical_value",
    "default_table",
    "fit",
    "fit_constrained",
    "kl_divergence",
    "lr_statistic",
    "lr_test",
    "p_value",
    "parse_dist",
    "population_projection_check",
    "read_sample",
    "reference_table",
    "sample",
    "solve_laplace_projection",
]
