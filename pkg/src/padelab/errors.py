"""Exception hierarchy.

Each class carries the CLI exit code it maps to, so the front end can
translate any library failure without a lookup table.
"""


class PadeLabError(Exception):
    exit_code = 1


class ParameterError(PadeLabError, ValueError):
    """Invalid catalog parameters, schedule rules or configuration values."""

    exit_code = 2


class ScheduleError(ParameterError):
    pass


class ConfigError(ParameterError):
    def __init__(self, message, field=None, line=None):
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line


class CapabilityError(PadeLabError):
    """The requested operation needs something the series does not provide."""

    exit_code = 3


class DomainError(PadeLabError, ValueError):
    """An argument lies outside the region where an evaluator is valid."""

    exit_code = 3


class PoleProximityError(DomainError):
    pass


class GridError(PadeLabError):
    exit_code = 3


class NumericFailure(PadeLabError, ArithmeticError):
    exit_code = 4

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class InvariantViolation(PadeLabError, AssertionError):
    """An exact identity that must hold failed; always an implementation bug."""

    exit_code = 4
