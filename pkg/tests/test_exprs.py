import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvcheck import exprs as E
from curvcheck.errors import ParseError, UnknownFunctionError, UnknownIdentifierError, JetDomainError

from conftest import rel_err, richardson_partial

COORDS = ("r", "a", "b", "c")


def test_parse_cos_squared():
    ast = E.parse_expr("cos(r)^2", COORDS)
    assert isinstance(ast, E.Pow)
    assert ast.exponent == 2
    assert isinstance(ast.base, E.Call) and ast.base.func == "cos"
    assert isinstance(ast.base.arg, E.Coord) and ast.base.arg.name == "r"


def test_parse_unbalanced_paren():
    with pytest.raises(ParseError, match="unbalanced parenthesis"):
        E.parse_expr("1/(1 - a^2", COORDS)


def test_parse_unknown_identifier():
    with pytest.raises(UnknownIdentifierError, match="q"):
        E.parse_expr("2*pi*q", COORDS)


def test_parse_unknown_function():
    with pytest.raises(UnknownFunctionError):
        E.parse_expr("arctan(r)", COORDS)


def test_parse_nonliteral_exponent():
    with pytest.raises(ParseError, match="literal"):
        E.parse_expr("r^(2)", COORDS)


def test_parse_pi_and_precedence():
    ast = E.parse_expr("2*pi + r*a^2", COORDS)
    val = E.eval_expr(ast, np.array([3.0, 2.0, 0.0, 0.0]))
    assert abs(val - (2 * math.pi + 12.0)) < 1e-14


def test_parse_empty():
    with pytest.raises(ParseError):
        E.parse_expr("   ", COORDS)


def test_unary_minus_and_division():
    ast = E.parse_expr("-r/(1 + a)", COORDS)
    assert abs(E.eval_expr(ast, np.array([2.0, 1.0, 0, 0])) + 1.0) < 1e-15


# -- round trip ---------------------------------------------------------------


def _ast_strategy():
    leaf = st.one_of(
        st.floats(0.1, 5.0).map(E.e_num),
        st.integers(0, 3).map(lambda i: E.Coord(i, COORDS[i])),
    )

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from("+-*"), children, children).map(
                lambda t: E.BinOp(t[0], t[1], t[2])
            ),
            children.map(E.Neg),
            st.tuples(children, st.sampled_from([2.0, 3.0, 0.5])).map(
                lambda t: E.Pow(t[0], t[1])
            ),
            st.tuples(st.sampled_from(["sin", "cos", "exp", "tanh"]), children).map(
                lambda t: E.Call(t[0], t[1])
            ),
        )

    return st.recursive(leaf, extend, max_leaves=12)


@settings(max_examples=60, deadline=None)
@given(_ast_strategy())
def test_pretty_print_round_trip(ast):
    text = E.pretty(ast)
    again = E.parse_expr(text, COORDS)
    assert E.pretty(again) == text


def test_round_trip_corpus():
    corpus = [
        "cos(r)^2",
        "1 + r*a - b/c" .replace("c", "(1+c)"),
        "exp(2*log(1 + r^2))",
        "sin(a)*sin(a) + cos(a)*cos(a)",
        "sqrt(4 + r)",
        "-r^3 + 2*pi",
        "tanh(r)*sinh(a) + cosh(b)",
        "1/(1 + r^2)",
        "(r + a)*(r - a)",
        "sin(r)^2*sin(a)^2",
    ]
    for text in corpus:
        ast = E.parse_expr(text, COORDS)
        assert E.pretty(E.parse_expr(E.pretty(ast), COORDS)) == E.pretty(ast)


# -- jet evaluation -----------------------------------------------------------


def test_eval_jet_constant_exponential():
    ast = E.parse_expr("exp(0*r)", COORDS)
    j = E.eval_expr_jet(ast, np.array([0.7, 0.1, 0.0, 0.0]), 3)
    assert abs(j.value - 1.0) < 1e-15
    assert np.max(np.abs(j.coeffs[..., 1:])) < 1e-15


def test_eval_jet_cos_squared_series():
    # cos^2 r = 1 - r^2 + r^4/3 + O(r^6)
    ast = E.parse_expr("cos(r)^2", COORDS)
    j = E.eval_expr_jet(ast, np.zeros(4), 4)
    assert abs(j.value - 1.0) < 1e-15
    assert abs(j.partial((2, 0, 0, 0)) / 2.0 + 1.0) < 1e-14
    assert abs(j.partial((4, 0, 0, 0)) / 24.0 - 1.0 / 3.0) < 1e-13


def test_eval_jet_domain_error():
    ast = E.parse_expr("sqrt(r - 1)", COORDS)
    with pytest.raises(JetDomainError):
        E.eval_expr_jet(ast, np.zeros(4), 2)


def test_eval_matches_richardson_fd(rng):
    texts = [
        "sin(r + 2*a)*exp(b)",
        "1/(2 + r^2 + a^2)",
        "log(3 + r*a + c^2)",
        "sqrt(2 + sin(r))*cos(a - b)",
        "tanh(r)*c + cosh(a)/3",
    ]
    for text in texts:
        ast = E.parse_expr(text, COORDS)
        x0 = rng.uniform(-0.2, 0.2, size=4)
        jet = E.eval_expr_jet(ast, x0, 3)
        f = lambda y: E.eval_expr(ast, y)
        for exps in [(1, 0, 0, 0), (0, 2, 0, 0), (1, 1, 0, 0), (1, 0, 1, 1)]:
            fd = richardson_partial(f, x0, exps, h=1e-3)
            assert rel_err(jet.partial(exps), fd) < 1e-6


def test_substitute_coordinates():
    ast = E.parse_expr("sin(a) + r", COORDS)
    sub = E.substitute(ast, {0: E.e_num(0.0)})
    assert abs(E.eval_expr(sub, np.array([9.9, 0.5, 0, 0])) - math.sin(0.5)) < 1e-15
