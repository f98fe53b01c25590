"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class RydsqError(Exception):
    exit_code = 1


class ConfigError(RydsqError, ValueError):
    exit_code = 2


class NumericalError(RydsqError, ArithmeticError):
    exit_code = 3


class NumericalBranchError(NumericalError):
    """No admissible root of the exact pair potential was real within tolerance."""

    def __init__(self, message, r=None, params=None):
        super().__init__(message)
        self.r = r
        self.params = params


class DegenerateStateError(NumericalError):
    """Mean spin length vanished (over-wound state); xi^2 is undefined."""


class CapacityError(RydsqError):
    exit_code = 4


class DomainError(RydsqError, ValueError):
    exit_code = 2


class DataError(RydsqError, ValueError):
    exit_code = 2
