"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so new error conditions should
subclass one of the four categories below rather than raising bare ValueError.
"""
from __future__ import annotations

__all__ = [
    "LatcountError",
    "SpecError",
    "BudgetError",
    "NumericalError",
]


class LatcountError(Exception):
    """Base class for all package-specific errors."""


class SpecError(LatcountError):
    """Invalid experiment specification or unsupported parameter combination (exit code 2)."""


class BudgetError(LatcountError):
    """Estimated enumeration output exceeds the configured element budget (exit code 3)."""


class NumericalError(LatcountError):
    """Quadrature non-convergence or other numerical failure (exit code 4)."""
