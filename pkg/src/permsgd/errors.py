"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A constructor or schedule received an out-of-range parameter."""


class ConstructionRegimeError(ParameterError):
    """The requested constants fall outside the regime a construction needs."""


class ContractError(ValueError):
    """An input violates the documented pre-condition of an operation."""


class GuardrailError(RuntimeError):
    """An exact computation would exceed its enumeration budget."""


class DomainError(ValueError):
    """A special function was evaluated outside its domain."""


class FitError(ValueError):
    """Too few usable points for a rate fit."""
