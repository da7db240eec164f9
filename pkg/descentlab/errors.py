"""
DESCENTLAB - ERRORS
Exception hierarchy shared by every module.
"""

from __future__ import annotations

from typing import Any, Optional


class DescentLabError(Exception):
    """Base class for every error raised by descentlab."""


class SpaceMismatchError(DescentLabError):
    """Two objects that must live on the same FiniteSpace do not."""


class GeneratorError(DescentLabError):
    """A matrix is not a Markov generator."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None):
        super().__init__(message)
        self.row = row
        self.column = column


class NeighborhoodError(DescentLabError):
    """A neighborhood system has some D_x not containing x."""


class MetricError(DescentLabError):
    """A metric matrix violates separation or positivity."""


class OperatorSpecError(DescentLabError):
    """Ill-formed operator expression or invalid phi."""


class BudgetError(DescentLabError):
    """An enumeration would exceed its configured cap."""

    def __init__(self, what: str, requested: int, cap: int):
        super().__init__(f"{what}: {requested} exceeds cap {cap}")
        self.requested = requested
        self.cap = cap


class SpecParseError(DescentLabError):
    """A JSON space-spec document could not be parsed."""

    def __init__(self, message: str, where: Any = None):
        text = message if where is None else f"{message} (at {where})"
        super().__init__(text)
        self.where = where


class ClassificationError(DescentLabError):
    """Classification preconditions fail (homogeneity, missing table entry)."""


class DispersionError(DescentLabError):
    """Invalid grid, radius or query point for the dispersion layer."""
