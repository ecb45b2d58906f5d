"""Arithmetic expression trees used for rates, sizes and kinetic laws."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Union

from .errors import DivisionByZero, NonFiniteResult, UnboundSymbol


@dataclass(frozen=True)
class Number:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Symbol:
    name: str


@dataclass(frozen=True)
class BinOp:
    left: "Expr"
    right: "Expr"

    op = "?"
    precedence = 0


class Add(BinOp):
    op = "+"
    precedence = 1


class Sub(BinOp):
    op = "-"
    precedence = 1


class Mul(BinOp):
    op = "*"
    precedence = 2


class Div(BinOp):
    op = "/"
    precedence = 2


class Pow(BinOp):
    op = "^"
    precedence = 4


Expr = Union[Number, Symbol, BinOp]

OPERATORS: dict[str, type[BinOp]] = {c.op: c for c in (Add, Sub, Mul, Div, Pow)}


def neg(expr: Expr) -> Sub:
    """Unary negation, which is stored as ``0 - expr``."""
    return Sub(Number(0.0), expr)


def format_number(value: float) -> str:
    """Shortest decimal that reads back to the same float.

    Integral values drop the trailing ``.0`` so stoichiometries and counts
    print as plain integers.
    """
    value = float(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def free_symbols(expr: Expr) -> set[str]:
    if isinstance(expr, Symbol):
        return {expr.name}
    if isinstance(expr, BinOp):
        return free_symbols(expr.left) | free_symbols(expr.right)
    return set()


def _checked(value: float) -> float:
    if math.isnan(value) or math.isinf(value):
        raise NonFiniteResult(f"expression evaluated to {value!r}")
    return value


def eval_expr(expr: Expr, env: Mapping[str, float]) -> float:
    """Evaluate ``expr`` with symbols looked up in ``env``.

    Raises UnboundSymbol, DivisionByZero or NonFiniteResult.
    """
    if isinstance(expr, Number):
        return _checked(expr.value)
    if isinstance(expr, Symbol):
        try:
            return _checked(float(env[expr.name]))
        except KeyError:
            raise UnboundSymbol(expr.name) from None
    a = eval_expr(expr.left, env)
    b = eval_expr(expr.right, env)
    if isinstance(expr, Add):
        return _checked(a + b)
    if isinstance(expr, Sub):
        return _checked(a - b)
    if isinstance(expr, Mul):
        return _checked(a * b)
    if isinstance(expr, Div):
        if b == 0:
            raise DivisionByZero("division by zero")
        return _checked(a / b)
    if isinstance(expr, Pow):
        if a == 0 and b < 0:
            raise DivisionByZero("zero raised to a negative power")
        try:
            return _checked(math.pow(a, b))
        except (ValueError, OverflowError) as exc:
            raise NonFiniteResult(f"{a!r} ^ {b!r}: {exc}") from None
    raise TypeError(f"not an expression: {expr!r}")


def map_symbols(expr: Expr, fn: Callable[[str], str]) -> Expr:
    """Return a copy of ``expr`` with every symbol name passed through ``fn``."""
    if isinstance(expr, Symbol):
        return Symbol(fn(expr.name))
    if isinstance(expr, BinOp):
        return type(expr)(map_symbols(expr.left, fn), map_symbols(expr.right, fn))
    return expr


def to_infix(expr: Expr) -> str:
    """Render with single spaces around operators and minimal parentheses.

    The output parses back to the identical tree (negative literals aside,
    which the grammar reads as ``0 - x``).
    """
    if isinstance(expr, Number):
        return format_number(expr.value)
    if isinstance(expr, Symbol):
        return expr.name
    left = to_infix(expr.left)
    right = to_infix(expr.right)
    p = expr.precedence
    lp = _precedence(expr.left)
    rp = _precedence(expr.right)
    if isinstance(expr, Pow):
        # right-associative: only a left-hand power needs grouping
        if lp <= p:
            left = f"({left})"
        if rp < p:
            right = f"({right})"
    else:
        if lp < p:
            left = f"({left})"
        if rp <= p:
            right = f"({right})"
    return f"{left} {expr.op} {right}"


def _precedence(expr: Expr) -> int:
    if isinstance(expr, BinOp):
        return expr.precedence
    if isinstance(expr, Number) and expr.value < 0:
        # a leading minus binds looser than '^'
        return 3
    return 10


def _flatten(expr: Expr, kind: type) -> list[Expr]:
    if type(expr) is kind:
        return _flatten(expr.left, kind) + _flatten(expr.right, kind)
    return [expr]


def canonical(expr: Expr) -> Expr:
    """Normalise associative chains of ``+`` and ``*`` into a sorted order.

    Two laws that differ only in how sums and products are grouped or
    ordered share the same canonical form.
    """
    if isinstance(expr, (Add, Mul)):
        kind = type(expr)
        operands = [canonical(e) for e in _flatten(expr, kind)]
        operands.sort(key=to_infix)
        out = operands[0]
        for e in operands[1:]:
            out = kind(out, e)
        return out
    if isinstance(expr, BinOp):
        return type(expr)(canonical(expr.left), canonical(expr.right))
    return expr
