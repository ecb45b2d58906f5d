"""Exception hierarchy shared by every epinarr module."""

from __future__ import annotations


class EpinarrError(Exception):
    """Base class for all errors raised by epinarr."""


# --- model / expression evaluation -------------------------------------------

class UnknownAction(EpinarrError):
    def __init__(self, action: str):
        super().__init__(f"action {action!r} has no functional rate")
        self.action = action


class UnboundSymbol(EpinarrError):
    def __init__(self, name: str):
        super().__init__(f"symbol {name!r} is not bound")
        self.name = name


class DivisionByZero(EpinarrError, ZeroDivisionError):
    pass


class NonFiniteResult(EpinarrError, ArithmeticError):
    pass


# --- text / xml input ---------------------------------------------------------

class ParseError(EpinarrError):
    """Syntax error in a .biopepa source, with a 1-based position.

    ``related`` holds the position of an earlier definition for duplicate
    definition errors.
    """

    def __init__(self, line: int, column: int, message: str,
                 expected: str | None = None,
                 related: tuple[int, int] | None = None):
        self.line = line
        self.column = column
        self.message = message
        self.expected = expected
        self.related = related
        text = f"line {line}, column {column}: {message}"
        if expected and "expected" not in message:
            text += f" (expected {expected})"
        super().__init__(text)


class XmlError(EpinarrError):
    pass


class SchemaError(EpinarrError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class UnresolvedReference(EpinarrError):
    def __init__(self, name: str, detail: str = ""):
        super().__init__(detail or f"unresolved reference {name!r}")
        self.name = name


class UnsupportedMathml(EpinarrError):
    def __init__(self, element: str):
        super().__init__(f"unsupported MathML element <{element}>")
        self.element = element


# --- preconditions / simulation ----------------------------------------------

class ValidationFailed(EpinarrError):
    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(i.detail for i in self.issues[:5])
        more = "" if len(self.issues) <= 5 else f" (+{len(self.issues) - 5} more)"
        super().__init__(f"model has {len(self.issues)} validation error(s): {lines}{more}")


class NumericalBlowup(EpinarrError):
    def __init__(self, time: float, detail: str):
        super().__init__(f"numerical failure at t={time!r}: {detail}")
        self.time = time


class NonIntegerInitialAmount(EpinarrError):
    def __init__(self, species: str, value: float):
        super().__init__(f"species {species!r} has non-integer amount {value!r}; "
                         "stochastic simulation needs whole individuals")
        self.species = species
        self.value = value
