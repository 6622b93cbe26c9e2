"""Tiny expression language for weights and derivatives.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('+' | '-') factor | power
    power  := atom ('^' signed)?
    signed := ('+' | '-') signed | atom
    atom   := number | 't' | '(' expr ')' | func '(' expr (',' expr)? ')'
    func   := 'exp' | 'log' | 'sqrt' | 'min2' | 'max2'

``^`` does not chain: ``2^3^2`` is a syntax error, write ``2^(3^2)``.
Expressions compile to numpy-vectorized callables of the variable ``t``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import WeightSyntaxError

__all__ = [
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Expression",
    "parse_expression",
    "power_hints",
]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]

_FUNCS = {"exp": 1, "log": 1, "sqrt": 1, "min2": 2, "max2": 2}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise WeightSyntaxError(f"unexpected character {text[start]!r}", start, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.advance()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise WeightSyntaxError(f"expected {value!r}, found {found}", pos, self.text)

    def fail(self, message):
        kind, val, pos = self.peek()
        found = "end of input" if kind == "end" else repr(val)
        raise WeightSyntaxError(f"{message}, found {found}", pos, self.text)

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("unexpected trailing input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.advance()
            arg = self.factor()
            return Neg(arg) if val == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.advance()
            exponent = self.signed()
            if self.peek()[1] == "^":
                self.fail("chained '^' needs parentheses")
            return BinOp("^", base, exponent)
        return base

    def signed(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.advance()
            arg = self.signed()
            return Neg(arg) if val == "-" else arg
        return self.atom()

    def atom(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(val))
        if kind == "name":
            self.advance()
            if val == "t":
                return Var()
            if val not in _FUNCS:
                raise WeightSyntaxError(f"unknown name {val!r}", pos, self.text)
            self.expect("(")
            args = [self.expr()]
            while self.peek()[1] == ",":
                self.advance()
                args.append(self.expr())
            self.expect(")")
            if len(args) != _FUNCS[val]:
                raise WeightSyntaxError(
                    f"{val} takes {_FUNCS[val]} argument(s), got {len(args)}", pos, self.text
                )
            return Call(val, tuple(args))
        if val == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, 't', a function or '('")


def _eval(node, t):
    if isinstance(node, Num):
        return np.full_like(t, node.value)
    if isinstance(node, Var):
        return t
    if isinstance(node, Neg):
        return -_eval(node.arg, t)
    if isinstance(node, BinOp):
        a = _eval(node.left, t)
        b = _eval(node.right, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return np.power(a, b)
    args = [_eval(a, t) for a in node.args]
    if node.name == "exp":
        return np.exp(args[0])
    if node.name == "log":
        return np.log(args[0])
    if node.name == "sqrt":
        return np.sqrt(args[0])
    if node.name == "min2":
        return np.minimum(args[0], args[1])
    return np.maximum(args[0], args[1])


def _render(node):
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        return f"-({_render(node.arg)})"
    if isinstance(node, BinOp):
        return f"({_render(node.left)}){node.op}({_render(node.right)})"
    return f"{node.name}({','.join(_render(a) for a in node.args)})"


class Expression:
    """Compiled expression in the variable ``t``.

    Calling it with a scalar returns a float; with an array, an array of the
    same shape.  Floating point exceptions are silenced; domain violations
    show up as ``nan``/``inf`` in the result.
    """

    def __init__(self, text, tree):
        self.text = text
        self.tree = tree

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = _eval(self.tree, np.atleast_1d(arr))
        out = np.broadcast_to(out, np.atleast_1d(arr).shape).astype(float)
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    def render(self):
        """Fully parenthesized canonical text; parses back to the same tree."""
        return _render(self.tree)

    def __repr__(self):
        return f"Expression({self.text!r})"


def parse_expression(text: str) -> Expression:
    """Parse ``text`` into an :class:`Expression` or raise WeightSyntaxError."""
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return Expression(text, _Parser(text).parse())


def _const(node):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        inner = _const(node.arg)
        return None if inner is None else -inner
    return None


def power_hints(node):
    """Power-law exponents of a positive expression near 0 and near infinity.

    Recognized building blocks: positive numbers, ``t``, sums, products and
    quotients of recognized pieces, ``sqrt`` of one, and a recognized piece
    raised to a numeric power.  Subtraction, negation (outside an exponent),
    ``exp``/``log``/``min2``/``max2`` make the expression unrecognized and
    ``None`` is returned.  Every recognized expression is positive on
    (0, inf), which is what makes the sum rule valid.
    """
    if isinstance(node, Num):
        return (0.0, 0.0) if node.value > 0 else None
    if isinstance(node, Var):
        return (1.0, 1.0)
    if isinstance(node, BinOp):
        if node.op == "^":
            e = _const(node.right)
            base = power_hints(node.left)
            if e is None or base is None:
                return None
            return (e * base[0], e * base[1])
        left = power_hints(node.left)
        right = power_hints(node.right)
        if left is None or right is None:
            return None
        if node.op == "*":
            return (left[0] + right[0], left[1] + right[1])
        if node.op == "/":
            return (left[0] - right[0], left[1] - right[1])
        if node.op == "+":
            return (min(left[0], right[0]), max(left[1], right[1]))
        return None
    if isinstance(node, Call) and node.name == "sqrt":
        inner = power_hints(node.args[0])
        return None if inner is None else (inner[0] / 2, inner[1] / 2)
    return None
