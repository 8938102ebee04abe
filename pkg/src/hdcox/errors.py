"""Exception hierarchy.

Four top-level families map one-to-one onto the CLI exit codes:
schema (2), solver (3), precision (4), scenario (5).
"""

from __future__ import annotations


class HdcoxError(Exception):
    """Base class for all package errors."""


class SchemaError(HdcoxError):
    """Input data violates the expected layout or content rules."""


class DimensionMismatchError(SchemaError):
    pass


class NonFiniteError(SchemaError):
    pass


class NoEventsError(SchemaError):
    pass


class NonPositiveTimeError(SchemaError):
    pass


class SolverError(HdcoxError):
    """Optimization failed. Carries the last iterate when available."""

    def __init__(self, message, last_beta=None, kkt_violation=None):
        super().__init__(message)
        self.last_beta = last_beta
        self.kkt_violation = kkt_violation


class ConvergenceError(SolverError):
    pass


class DivergenceError(SolverError):
    """Linear predictor ran away; typically a too-small penalty on separable data."""


class PrecisionError(HdcoxError):
    """Relaxed-inverse construction or variance estimation degenerated."""

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class ScenarioError(HdcoxError):
    """Simulation scenario configuration is inconsistent or infeasible."""
