"""Exception types raised throughout **Few-SUM**.

Index
-----
.. currentmodule:: fewSUM.exceptions
.. autosummary::
    ReviewFormatError
    AnnotationError
    ConfigError
    ShapeError
    StageAbort

"""

from typing import Optional

__all__ = ['ReviewFormatError', 'AnnotationError', 'ConfigError', 'ShapeError', 'StageAbort']


class ReviewFormatError(ValueError):
    """Raised when a line of a review file can not be parsed.

    Attributes
    ----------
    lineno : :class:`int`
        The 1-based line number of the offending record.
    field : :class:`str`, optional
        The name of the missing or invalid field.

    """

    def __init__(self, msg: str, lineno: int, field: Optional[str] = None) -> None:
        super().__init__(f'line {lineno}: {msg}')
        self.lineno = lineno
        self.field = field


class AnnotationError(ValueError):
    """Raised when an annotated entry violates the summary/source arity."""

    def __init__(self, msg: str, group_id: str) -> None:
        super().__init__(f'{group_id!r}: {msg}')
        self.group_id = group_id


class ConfigError(ValueError):
    """Raised when a config value is missing or out of range."""

    def __init__(self, key: str, constraint: str) -> None:
        super().__init__(f'{key!r}: {constraint}')
        self.key = key
        self.constraint = constraint


class ShapeError(ValueError):
    """Raised by the differentiable operations when operand shapes do not match."""


class StageAbort(RuntimeError):
    """Raised when a training stage encounters a non-finite loss or gradient."""
