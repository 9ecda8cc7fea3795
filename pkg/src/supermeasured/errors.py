"""Exception hierarchy shared by every module of the package."""


class SupermeasuredError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SupermeasuredError, ValueError):
    """Objects defined on incompatible spaces or with mismatched shapes."""


class NormalizationError(SupermeasuredError, ValueError):
    pass


class ConditioningError(SupermeasuredError, ValueError):
    """Conditioning on an event of zero probability."""


class EmptySpaceError(SupermeasuredError, ValueError):
    pass


class InsufficientDataError(SupermeasuredError, ValueError):
    pass


class StateError(SupermeasuredError, ValueError):
    """A quantum state that is not normalized."""


class ModelError(SupermeasuredError, ValueError):
    pass


class CounterfactualError(SupermeasuredError, LookupError):
    """Query of an outcome at a setting for which the hidden variable is not physical."""


class EnsembleSetError(SupermeasuredError, ValueError):
    pass


class SparseCellError(SupermeasuredError, ValueError):
    """Chi-square cell with expected count below 5; merge cells first."""


class DivergenceError(SupermeasuredError, ArithmeticError):
    pass


class ConfigError(SupermeasuredError, ValueError):
    """Invalid or incomplete experiment configuration."""
