"""Exception hierarchy shared by every module of the package."""


class RvdeError(Exception):
    """Base class for all errors raised by :mod:`rvde`."""


class ParameterError(RvdeError, ValueError):
    """A hyperparameter or argument is outside its admissible range."""


class EmptyDataset(ParameterError):
    pass


class DuplicatePoints(ParameterError):
    """Two rows of the point set coincide."""

    def __init__(self, first, second):
        self.first = int(first)
        self.second = int(second)
        super().__init__(f"duplicate points at rows {self.first} and {self.second}")


class DimensionError(ParameterError):
    pass


class DegenerateDirection(ParameterError):
    pass


class NeedsTwoPoints(ParameterError):
    pass


class DomainError(RvdeError, ValueError):
    """A kernel was evaluated outside of its domain ``t > A``."""


class NotIntegrable(RvdeError, ValueError):
    pass


class KernelNotAdmissible(ParameterError):
    pass


class IntegrationError(RvdeError, ArithmeticError):
    def __init__(self, message, achieved=None):
        self.achieved = achieved
        super().__init__(message)


class ConvergenceError(RvdeError, ArithmeticError):
    """The bandwidth solver did not reach its residual tolerance."""

    def __init__(self, message, beta=None, residual=None):
        self.beta = beta
        self.residual = residual
        super().__init__(message)


class PilotUnderflow(RvdeError, ArithmeticError):
    def __init__(self, index):
        self.index = int(index)
        super().__init__(f"pilot density underflows to zero at point {self.index}")


class ParseError(RvdeError, ValueError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class ConfigError(RvdeError, ValueError):
    """Configuration document violates the schema; ``pointer`` is a JSON pointer."""

    def __init__(self, message, pointer=""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
