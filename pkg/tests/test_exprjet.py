import math

import numpy as np
import pytest
import sympy

from curveflow.errors import DomainError, ParseError, UnboundVariable
from curveflow.exprjet import (
    BinOp,
    Call,
    Lit,
    Neg,
    Pow,
    Var,
    eval_jet,
    eval_scalar,
    parse,
    to_text,
    variables,
)


def test_parse_examples():
    assert parse("sin(u)") == Call("sin", Var("u"))
    assert parse("1 - cos(s)") == BinOp("-", Lit(1.0), Call("cos", Var("s")))
    assert eval_scalar(parse("2*u + u^3"), u=2.0) == pytest.approx(12.0)


def test_precedence():
    # ^ binds above unary minus, which binds above * and /
    assert parse("-u^2") == Neg(Pow(Var("u"), 2))
    assert parse("2*u^3") == BinOp("*", Lit(2.0), Pow(Var("u"), 3))
    assert parse("-u*v") == BinOp("*", Neg(Var("u")), Var("v"))
    assert parse("1 - 2 - 3") == BinOp("-", BinOp("-", Lit(1.0), Lit(2.0)), Lit(3.0))
    assert parse("u^2^3") == Pow(Var("u"), 8)  # right-assoc exponent chain
    assert parse("u^-2") == Pow(Var("u"), -2)


def test_constants_and_whitespace():
    assert parse(" pi ") == Lit(math.pi)
    assert eval_scalar(parse("cos(pi)")) == pytest.approx(-1.0)


@pytest.mark.parametrize(
    "text,offset",
    [
        ("2 +", 3),
        ("sin(u", 5),
        ("u^x", 2),
        ("(1+2", 4),
        ("1 @ 2", 2),
        ("foo(u)", 0),
        ("1 2", 2),
    ],
)
def test_parse_errors_carry_offsets(text, offset):
    with pytest.raises(ParseError) as err:
        parse(text)
    assert err.value.offset == offset


def test_eval_jet_polynomial():
    jet = eval_jet(parse("u^2"), "u", 3.0, 2)
    assert np.allclose(jet.coeffs, [9.0, 6.0, 1.0])


def test_eval_jet_sin_maclaurin():
    jet = eval_jet(parse("sin(u)"), "u", 0.0, 3)
    assert np.allclose(jet.coeffs, [0.0, 1.0, 0.0, -1.0 / 6.0], atol=1e-15)


def test_eval_jet_matches_central_difference():
    expr = parse("sinh(u)")
    jet = eval_jet(expr, "u", 0.7, 1)
    h = 1e-5
    fd = (eval_scalar(expr, u=0.7 + h) - eval_scalar(expr, u=0.7 - h)) / (2 * h)
    assert jet.derivative(1) == pytest.approx(fd, abs=1e-9)


def test_eval_jet_env_and_unbound():
    expr = parse("sin(s) * cos(t)")
    jet = eval_jet(expr, "s", 0.3, 1, {"t": 0.5})
    assert jet.coeffs[0] == pytest.approx(math.sin(0.3) * math.cos(0.5))
    with pytest.raises(UnboundVariable):
        eval_jet(expr, "s", 0.3, 1)


def test_eval_jet_vectorized_grid():
    grid = np.linspace(0.0, 2.0, 17)
    jet = eval_jet(parse("u*sin(u)"), "u", grid, 2)
    assert np.allclose(jet.coeffs[0], grid * np.sin(grid))
    assert np.allclose(jet.derivative(1), np.sin(grid) + grid * np.cos(grid))
    assert np.allclose(jet.derivative(2), 2 * np.cos(grid) - grid * np.sin(grid))


def _random_expr(rng, depth=0):
    # literals are non-negative, as the parser produces (a leading minus
    # becomes a Neg node); negativity enters through Neg
    roll = rng.integers(0, 8 if depth < 3 else 2)
    if roll == 0:
        return Lit(round(float(rng.uniform(0, 3)), 3))
    if roll == 1:
        return Var("u")
    if roll == 2:
        return Neg(_random_expr(rng, depth + 1))
    if roll == 3:
        return Pow(_random_expr(rng, depth + 1), int(rng.integers(0, 4)))
    if roll == 4:
        fn = ("sin", "cos", "sinh", "cosh", "exp")[rng.integers(0, 5)]
        return Call(fn, _random_expr(rng, depth + 1))
    op = "+-*"[rng.integers(0, 3)]
    return BinOp(op, _random_expr(rng, depth + 1), _random_expr(rng, depth + 1))


@pytest.mark.parametrize("seed", range(40))
def test_print_parse_round_trip(seed):
    rng = np.random.default_rng(seed)
    expr = _random_expr(rng)
    assert parse(to_text(expr)) == expr


@pytest.mark.parametrize("seed", range(12))
def test_jet_derivatives_match_sympy(seed):
    """Independent oracle: symbolic differentiation of random expressions."""
    rng = np.random.default_rng(100 + seed)
    expr = _random_expr(rng)
    u = sympy.Symbol("u")
    sym = sympy.sympify(to_text(expr).replace("^", "**"))
    point = 0.37
    jet = eval_jet(expr, "u", point, 4)
    for order in range(5):
        expected = float(sympy.diff(sym, u, order).subs(u, point))
        got = float(jet.derivative(order))
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_product_rule_consistency(seed):
    rng = np.random.default_rng(200 + seed)
    f = _random_expr(rng)
    g = _random_expr(rng)
    at = 0.81
    prod = eval_jet(BinOp("*", f, g), "u", at, 5)
    via_jets = eval_jet(f, "u", at, 5) * eval_jet(g, "u", at, 5)
    scale = np.maximum(1.0, np.abs(prod.coeffs))
    assert np.all(np.abs(prod.coeffs - via_jets.coeffs) <= 1e-12 * scale)


def test_division_and_sqrt_jets():
    jet = eval_jet(parse("1 / (1 + u^2)"), "u", 0.5, 3)
    u = sympy.Symbol("u")
    sym = 1 / (1 + u**2)
    for order in range(4):
        expected = float(sympy.diff(sym, u, order).subs(u, 0.5))
        assert float(jet.derivative(order)) == pytest.approx(expected, rel=1e-12)
    jet = eval_jet(parse("sqrt(1 + u)"), "u", 0.2, 3)
    sym = sympy.sqrt(1 + u)
    for order in range(4):
        expected = float(sympy.diff(sym, u, order).subs(u, 0.2))
        assert float(jet.derivative(order)) == pytest.approx(expected, rel=1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        eval_jet(parse("1/u"), "u", 0.0, 1)
    with pytest.raises(DomainError):
        eval_jet(parse("sqrt(u)"), "u", -1.0, 0)
    with pytest.raises(DomainError):
        eval_jet(parse("sqrt(u)"), "u", 0.0, 1)  # not differentiable at 0
    # order-0 sqrt at exactly zero is fine
    assert eval_jet(parse("sqrt(u)"), "u", 0.0, 0).coeffs[0] == 0.0


def test_negative_and_zero_powers():
    jet = eval_jet(parse("u^-2"), "u", 2.0, 2)
    assert np.allclose(jet.coeffs, [0.25, -0.25, 3.0 / 16.0])
    jet0 = eval_jet(parse("u^0"), "u", 5.0, 2)
    assert np.allclose(jet0.coeffs, [1.0, 0.0, 0.0])


def test_variables():
    assert variables(parse("sin(s)*cos(t) + 1")) == frozenset({"s", "t"})
    assert variables(parse("2 + pi")) == frozenset()
