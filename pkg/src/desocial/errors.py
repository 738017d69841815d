"""Exception types shared across the package.

Every error the CLI can surface derives from DesocialError so the entry
point can turn any of them into a one-line diagnostic and a nonzero exit.
"""


class DesocialError(Exception):
    """Base class for all package errors."""


class ParseError(DesocialError):
    """Malformed input record; carries the offending line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ConfigError(DesocialError):
    """Invalid or unknown experiment configuration."""


class GraphError(DesocialError):
    """Invalid graph operation (bad period, infeasible sizes, ...)."""


class SamplingError(DesocialError):
    """A seeded sampling step cannot produce the requested sample."""


class TrainError(DesocialError):
    """Scorer training failed (empty supervision, divergence, ...)."""


class ConsensusError(DesocialError):
    """Committee formation or vote aggregation failed."""


class EvaluationError(DesocialError):
    """Inconsistent inputs to a metric computation."""
