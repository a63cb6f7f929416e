# mmopt/core/errors.py
"""
Exception hierarchy for mmopt.

Library code raises these; the CLI maps them onto exit codes
(ValidationError -> 2, NumericalError -> 3).
"""

from __future__ import annotations


class MmoptError(Exception):
    """Base class for all mmopt errors."""


class ValidationError(MmoptError, ValueError):
    """Bad input: wrong dimensions, out-of-range parameters, unparsable files."""


class InfeasibleMenuError(ValidationError):
    """A menu violates a constraint that an operation depends on (e.g. u(c) = 0)."""


class NumericalError(MmoptError, ArithmeticError):
    """A computation produced a non-finite value or failed a residual check."""


class ConvergenceError(NumericalError):
    """An iterative solver did not converge within its iteration limit."""
