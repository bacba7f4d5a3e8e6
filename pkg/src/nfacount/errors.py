"""Exception types shared across the package."""

from __future__ import annotations


class ParseError(ValueError):
    """Raised when a text input (automaton, formula, diagram, graph) is malformed.

    ``line`` is the 1-based line number of the offending line, or 0 when the
    problem is not tied to a single line (e.g. a missing section).
    """

    def __init__(self, message: str, line: int = 0):
        self.line = line
        where = f"line {line}: " if line else ""
        super().__init__(where + message)


class NfaParseError(ParseError):
    """The NFA text format could not be parsed."""


class ContractViolation(ValueError):
    """An operation was called on an input outside its precondition."""


class EmptyLanguageError(ValueError):
    """Sampling was requested from an empty language."""


class OracleCapExceeded(RuntimeError):
    """A brute-force oracle refused an instance larger than its cap."""


class SketchInvariantError(RuntimeError):
    """A sketch produced an acceptance probability above one.

    This can only happen when the stored estimates are far from the true
    counts, i.e. the sketch is corrupt.
    """
