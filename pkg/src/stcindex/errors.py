"""Exception hierarchy.

Input problems (bad files, bad arguments) derive from :class:`InputError`;
numerical problems that only show up once statistics are computed derive
from :class:`ComputationError`. The CLI maps the two families to exit
codes 1 and 2.
"""


class StciError(Exception):
    """Base class for all errors raised by this package."""


class InputError(StciError, ValueError):
    """Invalid input data, configuration or arguments."""


class SchemaError(InputError):
    """CSV header or JSON document does not match the expected layout."""


class ValidationError(InputError):
    """A data cell violates a constraint (negative value, duplicate code...)."""

    def __init__(self, message, row=None, column=None, source=None):
        self.row = row
        self.column = column
        self.source = source
        where = []
        if source is not None:
            where.append(str(source))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class BoundsError(InputError):
    """Min-max bounds are missing or not strictly increasing."""


class ComputationError(StciError, ArithmeticError):
    """A statistic cannot be computed from the supplied data."""


class InsufficientDataError(ComputationError):
    """Too few present values to compute a statistic."""


class DegenerateColumnError(ComputationError):
    """A column (or score vector) has zero spread."""

    def __init__(self, message, subject=None):
        self.subject = subject
        super().__init__(message)
