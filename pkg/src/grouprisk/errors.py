"""Exception types shared across the library.

The CLI maps these onto stable exit codes: parameter errors exit 2,
input/ingestion errors exit 3, numerical failures exit 4.
"""


class GroupRiskError(Exception):
    """Base class for all library errors."""


class ParameterError(GroupRiskError):
    """An argument is outside its documented domain."""


class InputError(GroupRiskError):
    """A dataset fails validation before any computation runs."""


class IngestionError(InputError):
    """A file cannot be parsed into a dataset; message names row/column."""


class NumericalError(GroupRiskError):
    """A computation produced non-finite values."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class UnsupportedAxiomError(ParameterError):
    """Axiom tag is recognised but has no mechanical falsifier."""


class UndefinedMetricError(GroupRiskError):
    """The requested quantity has no defined value on this input."""
