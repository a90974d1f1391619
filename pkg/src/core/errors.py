"""
Exceptions raised by the homreg core modules.
"""

from typing import List, Optional, Sequence, Tuple


class HomRegException(Exception):
    """Base class for every error raised by the toolkit."""
    pass


class PositionException(HomRegException):
    """Exception raised when a position does not address a node of a tree."""
    pass


class ArityException(HomRegException):
    """Exception raised for rank or arity mismatches."""
    pass


class AlphabetException(HomRegException):
    """Exception raised for invalid alphabets, reserved names and alphabet mismatches."""
    pass


class GrammarException(HomRegException):
    """Exception raised for malformed rules, states or weights."""
    pass


class HomomorphismException(HomRegException):
    """Exception raised when a homomorphism violates a required property."""
    pass


class NotTetrisFreeException(HomomorphismException):
    """
    Exception raised when a procedure requires a tetris-free homomorphism.

    Attributes:
        witness: Violating pair (s, s') when one is known.
    """

    def __init__(self, message: str, witness: Optional[Tuple[object, object]] = None):
        super().__init__(message)
        self.witness = witness


class PreconditionException(HomRegException):
    """
    Exception raised when a construction is called outside its preconditions.

    Attributes:
        diagnostics: Human-readable list of violated conditions.
    """

    def __init__(self, message: str, diagnostics: Optional[Sequence[str]] = None):
        super().__init__(message)
        self.diagnostics: List[str] = list(diagnostics or [])


class HatTreeException(HomRegException):
    """
    Exception raised when t ↦ t̂ is undefined for a tree.

    Attributes:
        reason: Either "no-run" or "ambiguous-decomposition".
    """

    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason


class LinearizationException(HomRegException):
    """Exception raised when the linearization cannot be built."""
    pass


class FormatException(HomRegException):
    """
    Exception raised for unparsable term or block text.

    Attributes:
        line: 1-based line number of the offending statement, if known.
    """

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
