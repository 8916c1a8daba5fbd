"""Exception hierarchy shared by the solver modules and the CLI."""


class Wc4dvarError(Exception):
    """Base class for all package errors."""


class ConfigError(Wc4dvarError, ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class NumericalError(Wc4dvarError, ArithmeticError):
    """Numerical failure inside a solver stage (CLI exit code 3).

    ``module`` names the component that failed so CLI messages can be tagged.
    """

    def __init__(self, message, module="numerics"):
        super().__init__(message)
        self.module = module

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class NotPositiveDefiniteError(NumericalError):
    """A matrix expected to be SPD has a non-positive eigenvalue."""

    def __init__(self, message, eigenvalue, module="covariance"):
        super().__init__(f"{message} (smallest eigenvalue {eigenvalue:.6g})", module)
        self.eigenvalue = eigenvalue


class DenseCapError(Wc4dvarError):
    """Dense assembly requested above the configured size cap (CLI exit code 4)."""
