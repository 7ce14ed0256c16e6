"""Semantic exceptions shared across the package.

Public functions raise these instead of bare ValueError/RuntimeError so the
CLI can map failure classes to exit codes (config errors exit 2, capacity
errors exit 3).
"""


class InterferenceLabError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(InterferenceLabError, ValueError):
    """An argument violates a documented precondition."""


class InvalidDesignError(InterferenceLabError, ValueError):
    """A design is structurally unusable for the requested operation."""


class UnsupportedDesignError(InterferenceLabError):
    """The operation has closed forms only for a different design family."""


class UnsupportedEstimandError(InterferenceLabError):
    """The operation cannot handle this estimand shape."""


class CapacityError(InterferenceLabError):
    """Exact enumeration was requested beyond the configured size cap."""


class IncompleteTableError(InterferenceLabError, KeyError):
    """A potential-outcome table lacks an entry the query needs."""


class IncompleteEstimatorError(InterferenceLabError, KeyError):
    """A tabular estimator was queried at a key it does not define."""


class GraphFormatError(InterferenceLabError, ValueError):
    """A graph file is malformed (self-loop, duplicate edge, bad index)."""


class FeasibilityPrecisionError(InterferenceLabError):
    """A feasibility residual fell between the feasible and infeasible
    tolerances, or the constraint system is too ill-conditioned to certify
    either way."""


class ConfigError(InterferenceLabError, ValueError):
    """A run configuration is malformed or contains unknown keys."""
