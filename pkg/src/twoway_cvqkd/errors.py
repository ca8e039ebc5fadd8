"""Exception hierarchy shared by every module of the package."""


class CVQKDError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(CVQKDError, ValueError):
    pass


class NumericFailureError(CVQKDError, ArithmeticError):
    pass


class UnphysicalEigenvalueError(CVQKDError, ValueError):
    """A symplectic eigenvalue fell below 1 by more than the tolerance."""


class UnphysicalStateError(CVQKDError, ValueError):
    """A constructed covariance matrix violates the uncertainty principle."""

    def __init__(self, message, min_eigenvalue=None, parameters=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.parameters = parameters


class DegenerateCalibrationError(CVQKDError, ValueError):
    pass


class DegenerateComplementError(CVQKDError, ValueError):
    pass


class NoCrossingError(CVQKDError, RuntimeError):
    """The key rate does not change sign on the searched interval."""


class ConfigParseError(CVQKDError, ValueError):
    def __init__(self, message, line, column=1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ConfigValidationError(CVQKDError, ValueError):
    def __init__(self, field, constraint):
        super().__init__(f"{field}: {constraint}")
        self.field = field
        self.constraint = constraint
