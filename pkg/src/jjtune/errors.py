"""Shared exception types.

Every error raised on a user-facing path derives from one of these so the
CLI can map failures onto stable exit codes.
"""


class DomainError(ValueError):
    """An input is outside the physical or mathematical domain of an operation."""


class InfeasibleError(ValueError):
    """The request is well-formed but cannot be met (e.g. upshift, power ceiling)."""


class FitError(RuntimeError):
    """Nonlinear fit failed in a way that is not just non-convergence."""


class FitEvaluationError(FitError):
    """The model evaluator returned non-finite values during a fit."""


class SchemaError(ValueError):
    """A structured input or output document failed schema validation."""
