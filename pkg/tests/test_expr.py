import math

import pytest
from hypothesis import given, settings, strategies as st

from epinarr.dsl import parse_expr
from epinarr.errors import DivisionByZero, NonFiniteResult, UnboundSymbol
from epinarr.expr import (
    Add, Div, Mul, Number, Pow, Sub, Symbol, canonical, eval_expr, format_number,
    free_symbols, map_symbols, neg, to_infix,
)


def test_eval_product():
    law = parse_expr("lambda * S * I")
    assert eval_expr(law, {"lambda": 0.0005, "S": 990, "I": 10}) == pytest.approx(4.95)


def test_eval_unbound():
    with pytest.raises(UnboundSymbol) as exc:
        eval_expr(Symbol("W"), {})
    assert exc.value.name == "W"


def test_eval_number_ignores_env():
    assert eval_expr(Number(7.0), {"x": 1.0}) == 7.0


def test_eval_division_by_zero():
    with pytest.raises(DivisionByZero):
        eval_expr(Div(Number(1), Symbol("x")), {"x": 0.0})


def test_eval_overflow_is_non_finite():
    with pytest.raises(NonFiniteResult):
        eval_expr(Pow(Number(10), Number(400)), {})


def test_free_symbols():
    assert free_symbols(parse_expr("lambda * S * I")) == {"lambda", "S", "I"}
    assert free_symbols(Number(3)) == set()
    assert free_symbols(parse_expr("W * VP")) == {"W", "VP"}


def test_map_symbols_renames_leaves():
    e = map_symbols(parse_expr("a + b * a"), str.upper)
    assert to_infix(e) == "A + B * A"


@pytest.mark.parametrize("value, text", [
    (1.0, "1"), (100000.0, "100000"), (0.5, "0.5"), (1e-07, "1e-07"), (1e20, "1e+20"),
])
def test_format_number(value, text):
    assert format_number(value) == text


@pytest.mark.parametrize("text", [
    "a - (b - c)", "a / (b * c)", "(a + b) * c", "a ^ b ^ c", "(a ^ b) ^ c",
    "0 - x", "a - b - c", "a * b / c",
])
def test_infix_minimal_parentheses_round_trip(text):
    assert to_infix(parse_expr(text)) == text


def test_power_is_right_associative():
    assert parse_expr("2 ^ 3 ^ 2") == Pow(Number(2), Pow(Number(3), Number(2)))
    assert eval_expr(parse_expr("2 ^ 3 ^ 2"), {}) == 512


def test_negative_literal_is_grouped_under_power():
    assert to_infix(Pow(Number(-2), Number(2))) == "(-2) ^ 2"


def test_neg_is_zero_minus():
    assert neg(Symbol("x")) == Sub(Number(0.0), Symbol("x"))
    assert parse_expr("-x") == neg(Symbol("x"))


def test_canonical_ignores_grouping_and_order():
    a = parse_expr("(S * lambda) * I")
    b = parse_expr("lambda * (I * S)")
    assert a != b
    assert canonical(a) == canonical(b)
    assert canonical(parse_expr("a - b")) != canonical(parse_expr("b - a"))


names = st.sampled_from(["a", "b", "S_Age1", "k2"])
leaves = st.one_of(names.map(Symbol),
                   st.floats(0, 1e6, allow_nan=False).map(Number))
exprs = st.recursive(
    leaves,
    lambda kids: st.builds(lambda op, l, r: op(l, r),
                           st.sampled_from([Add, Sub, Mul, Div, Pow]), kids, kids),
    max_leaves=12,
)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_infix_round_trip(e):
    assert parse_expr(to_infix(e)) == e


sums_products = st.recursive(
    st.one_of(names.map(Symbol), st.floats(0.1, 100).map(Number)),
    lambda kids: st.builds(lambda op, l, r: op(l, r), st.sampled_from([Add, Mul]), kids, kids),
    max_leaves=10,
)


@settings(max_examples=100, deadline=None)
@given(sums_products, st.floats(0.1, 3), st.floats(0.1, 3))
def test_canonical_preserves_value(e, a, b):
    # positive operands only, so reordering changes rounding but never cancels
    env = {"a": a, "b": b, "S_Age1": 1.5, "k2": 0.7}
    assert math.isclose(eval_expr(canonical(e), env), eval_expr(e, env), rel_tol=1e-12)
