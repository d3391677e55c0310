"""Metric component expression language.

Grammar (whitespace insignificant):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' number)?
    base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' base

'pi' is a predefined constant; '^' takes a literal number exponent
only, so every expression stays smooth and totally differentiable.
ASTs are immutable and evaluation is pure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    JetDomainError,
    ParseError,
    UnknownFunctionError,
    UnknownIdentifierError,
)
from .jets import ELEMENTARY, Jet, jet_variable, jpow

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Coord:
    index: int
    name: str


@dataclass(frozen=True)
class Neg:
    child: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: float


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


ExprAst = (Num, Coord, Neg, BinOp, Pow, Call)

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}", pos)
        if m.lastgroup == "num":
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", None, len(source)))
    return tokens


class _Parser:
    def __init__(self, source, coords):
        self.source = source
        self.coords = tuple(coords)
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, symbol):
        kind, val, pos = self.peek()
        if kind == "op" and val == symbol:
            return self.advance()
        if symbol == ")" and kind == "end":
            raise ParseError("unbalanced parenthesis at end of input", pos, (")",))
        raise ParseError(f"unexpected {val!r}" if kind != "end" else "unexpected end of input",
                         pos, (symbol,))

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = BinOp(val, node, self.factor())
            else:
                return node

    def factor(self):
        node = self.base()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            kind, val, pos = self.peek()
            sign = 1.0
            if kind == "op" and val == "-":
                self.advance()
                sign = -1.0
                kind, val, pos = self.peek()
            if kind != "num":
                raise ParseError("exponent must be a literal number", pos, ("number",))
            self.advance()
            node = Pow(node, sign * val)
        return node

    def base(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.advance()
            return Num(val)
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.base())
        if kind == "op" and val == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "ident":
            self.advance()
            nkind, nval, _ = self.peek()
            if nkind == "op" and nval == "(":
                if val not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {val!r} at position {pos}")
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(val, arg)
            if val == "pi":
                return Num(math.pi)
            if val in self.coords:
                return Coord(self.coords.index(val), val)
            raise UnknownIdentifierError(f"unknown identifier {val!r} at position {pos}")
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected {val!r}", pos)


def parse_expr(source, coords):
    """Parse `source` against the chart coordinate names."""
    if not source or not source.strip():
        raise ParseError("empty expression", 0)
    return _Parser(source, coords).parse()


# ---------------------------------------------------------------------------


def pretty(ast):
    """Render an AST back to parseable source."""
    if isinstance(ast, Num):
        return repr(ast.value)
    if isinstance(ast, Coord):
        return ast.name
    if isinstance(ast, Neg):
        return f"-({pretty(ast.child)})"
    if isinstance(ast, BinOp):
        return f"({pretty(ast.left)} {ast.op} {pretty(ast.right)})"
    if isinstance(ast, Pow):
        return f"({pretty(ast.base)})^{ast.exponent!r}"
    if isinstance(ast, Call):
        return f"{ast.func}({pretty(ast.arg)})"
    raise TypeError(f"not an AST node: {ast!r}")


_FLOAT_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
}


def eval_expr(ast, values):
    """Plain float evaluation; `values` is (..., dim) array-like."""
    values = np.asarray(values, dtype=np.float64)

    def rec(node):
        if isinstance(node, Num):
            return np.full(values.shape[:-1], node.value) if values.ndim > 1 else node.value
        if isinstance(node, Coord):
            return values[..., node.index]
        if isinstance(node, Neg):
            return -rec(node.child)
        if isinstance(node, BinOp):
            a, b = rec(node.left), rec(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if np.any(np.abs(b) < 1e-300):
                raise JetDomainError("divide", 0.0)
            return a / b
        if isinstance(node, Pow):
            base = rec(node.base)
            if float(node.exponent).is_integer():
                return base ** int(node.exponent)
            if np.any(base <= 0.0):
                raise JetDomainError("pow", float(np.min(base)))
            return base ** node.exponent
        if isinstance(node, Call):
            arg = rec(node.arg)
            if node.func == "log" and np.any(arg <= 0.0):
                raise JetDomainError("log", float(np.min(arg)))
            if node.func == "sqrt" and np.any(arg < 0.0):
                raise JetDomainError("sqrt", float(np.min(arg)))
            return _FLOAT_FUNCS[node.func](arg)
        raise TypeError(f"not an AST node: {node!r}")

    return rec(ast)


def eval_expr_jet(ast, base, order):
    """Evaluate as a jet at `base` (shape (..., dim)); dim from base."""
    base = np.asarray(base, dtype=np.float64)
    dim = base.shape[-1]
    seeds = [jet_variable(base, axis, dim, order) for axis in range(dim)]
    return eval_with_seeds(ast, seeds, dim, order, batch=base.shape[:-1])


def eval_with_seeds(ast, seeds, dim, order, batch=()):
    """Evaluate an AST with caller-supplied coordinate jets."""

    def rec(node):
        if isinstance(node, Num):
            return Jet.constant(np.full(batch, node.value), dim, order)
        if isinstance(node, Coord):
            return seeds[node.index]
        if isinstance(node, Neg):
            return -rec(node.child)
        if isinstance(node, BinOp):
            a, b = rec(node.left), rec(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            return a / b
        if isinstance(node, Pow):
            return jpow(rec(node.base), node.exponent)
        if isinstance(node, Call):
            return ELEMENTARY[node.func](rec(node.arg))
        raise TypeError(f"not an AST node: {node!r}")

    return rec(ast)


def substitute(ast, mapping):
    """Replace Coord leaves per `mapping` (index -> AST); leaves not in
    the mapping are kept."""
    if isinstance(ast, Num):
        return ast
    if isinstance(ast, Coord):
        return mapping.get(ast.index, ast)
    if isinstance(ast, Neg):
        return Neg(substitute(ast.child, mapping))
    if isinstance(ast, BinOp):
        return BinOp(ast.op, substitute(ast.left, mapping), substitute(ast.right, mapping))
    if isinstance(ast, Pow):
        return Pow(substitute(ast.base, mapping), ast.exponent)
    if isinstance(ast, Call):
        return Call(ast.func, substitute(ast.arg, mapping))
    raise TypeError(f"not an AST node: {ast!r}")


# Small builder helpers for programmatic model construction.


def e_num(v):
    return Num(float(v))


def e_add(a, b):
    return BinOp("+", a, b)


def e_sub(a, b):
    return BinOp("-", a, b)


def e_mul(a, b):
    return BinOp("*", a, b)


def e_call(func, arg):
    return Call(func, arg)


def e_sum(terms):
    terms = list(terms)
    if not terms:
        return Num(0.0)
    node = terms[0]
    for t in terms[1:]:
        node = BinOp("+", node, t)
    return node
