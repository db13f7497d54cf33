"""Exception types raised across the package."""


class DegenerateSample(ValueError):
    """Fewer than two distinct observations; the MLE does not exist."""


class NotConverged(RuntimeError):
    """Solver hit ``max_iter``.  ``report`` holds the best iterate found."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OutOfRange(ValueError):
    """A level outside the range covered by a critical-value table."""


class UndefinedConstant(ValueError):
    """A curvature-based constant requested for a family with a flat mode."""


class UnsupportedFamily(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SimulationFailed(RuntimeError):
    """Too many replications of a Monte Carlo study failed."""
