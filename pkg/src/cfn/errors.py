"""Exception types raised across the package."""


class CFNError(Exception):
    pass


class ShapeError(CFNError, ValueError):
    pass


class NumericError(CFNError, ArithmeticError):
    pass


class OracleError(NumericError):
    """Finite-difference oracle hit a non-finite function value."""


class ArgumentError(CFNError, ValueError):
    pass


class MetricUndefinedError(ArgumentError):
    pass


class UsageError(CFNError, RuntimeError):
    pass


class IngestionError(CFNError, ValueError):
    pass


class RegistryError(CFNError, KeyError):
    def __str__(self):
        # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class VersionError(CFNError, ValueError):
    pass


class TrainingAborted(NumericError):
    pass
