"""Exception hierarchy shared by every module of the package."""


class ReflectError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ReflectError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ResonanceError(DomainError):
    """sin(omega*T) is too close to zero for the Green's function to exist."""


class HypothesisViolation(ReflectError):
    """A structural hypothesis of the existence theory fails (for example g < 0)."""


class ParseError(ReflectError, ValueError):
    """Malformed expression source.

    ``offset`` is the 0-based character offset where parsing stopped and
    ``expected`` the set of tokens that would have been accepted there.
    """

    def __init__(self, message, offset, expected=(), source=""):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        self.source = source
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)
        self.message = message


class EvaluationError(ReflectError, ArithmeticError):
    """An expression produced a non-finite or undefined value."""


class ConfigError(ReflectError, ValueError):
    """Problem configuration file is invalid."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message}" + (f" [{', '.join(where)}]" if where else ""))
