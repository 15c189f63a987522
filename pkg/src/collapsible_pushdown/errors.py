"""
Exception hierarchy for the collapsible pushdown toolkit.

Undefined stack operations are not errors; they are reported as ``None``.
Everything here signals bad input, a broken invariant or an exhausted budget.
"""

from typing import List, Optional


class CpkError(Exception):
    """Base class for all toolkit errors."""


class StackInvariantError(CpkError):
    """A stack value breaks one of the stack laws."""


class SpecError(CpkError):
    """A system or constraint document is malformed or inconsistent."""


class ParseError(CpkError):
    """Text in one of the toolkit formats could not be parsed."""

    def __init__(self, message: str, text: str = "", position: Optional[int] = None):
        super().__init__(message)
        self.text = text
        self.position = position


class TreeError(CpkError):
    """A tree is not a member of EncTrees where one is required."""

    def __init__(self, message: str, violations: Optional[List] = None):
        super().__init__(message)
        self.violations = list(violations or [])


class BudgetExceeded(CpkError):
    """A state, iteration or bound budget was exhausted."""

    def __init__(self, message: str, kind: str = "", limit: Optional[int] = None):
        super().__init__(message)
        self.kind = kind
        self.limit = limit


class NonConvergence(BudgetExceeded):
    """A summary fixpoint or quotient did not stabilise within its budget."""


class UnsupportedFormula(CpkError):
    """The exact first-order backend cannot compile a formula shape."""
