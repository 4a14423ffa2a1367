"""Permutation-based SGD: shuffling policies, worst-case objectives and rate checks."""

from .errors import (
    ConstructionRegimeError,
    ContractError,
    DomainError,
    FitError,
    GuardrailError,
    ParameterError,
)

__version__ = "0.1.0"

__all__ = [
    "ConstructionRegimeError",
    "ContractError",
    "DomainError",
    "FitError",
    "GuardrailError",
    "ParameterError",
]
