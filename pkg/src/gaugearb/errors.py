"""Exception hierarchy.

Every error carries a ``category`` (``config``, ``data``, ``numerical`` or
``internal``) which the command-line front end maps to an exit code.
"""


class GaugeArbError(Exception):
    category = "internal"


class ConfigError(GaugeArbError, ValueError):
    category = "config"

    def __init__(self, message, problems=None):
        self.problems = list(problems) if problems else [message]
        super().__init__(message)


class DataError(GaugeArbError, ValueError):
    category = "data"

    def __init__(self, message, problems=None):
        self.problems = list(problems) if problems else [message]
        super().__init__(message)


class DimensionError(GaugeArbError, ValueError):
    category = "config"


class InsufficientDataError(DataError):
    def __init__(self, message, required=None, available=None):
        self.required = required
        self.available = available
        super().__init__(message)


class AssetLookupError(GaugeArbError, KeyError):
    category = "data"

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown asset"


class NonAnticipationError(GaugeArbError, RuntimeError):
    """A basis built with information later than the trading time was used."""

    category = "internal"


class AlignmentDegenerateError(GaugeArbError, ArithmeticError):
    category = "numerical"


class InvalidSpectrumError(GaugeArbError, ValueError):
    category = "numerical"


class ConvergenceError(GaugeArbError, ArithmeticError):
    category = "numerical"

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class DomainError(GaugeArbError, ArithmeticError):
    category = "numerical"


class MisalignedInputError(DataError):
    """Inputs that should share a time axis or asset set do not."""
