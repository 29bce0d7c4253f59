"""A small arithmetic language for map components and normals.

Grammar (whitespace ignored)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" INTEGER)*
    atom   := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"

``VAR`` is one of ``u``, ``v``, ``t``; ``FUNC`` one of ``sqrt``, ``sin``,
``cos``, ``exp``.  Numbers are decimal literals (``3``, ``0.25``, ``1e-3``)
read as exact fractions.  There is no implicit multiplication.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np

from . import jets
from .jets import Jet, JetError

VARIABLES = ("u", "v", "t")
FUNCTIONS = ("sqrt", "sin", "cos", "exp")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprDomainError(ExprError):
    pass


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


def num(x) -> Num:
    return Num(Fraction(x))


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, pool: dict | None = None):
        self.tokens = _tokenize(text)
        self.i = 0
        # equal subtrees become one object, so evaluation memos can share work
        self.pool = {} if pool is None else pool

    def node(self, e: Expr) -> Expr:
        return self.pool.setdefault(e, e)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value:
            raise ExprSyntaxError(f"expected {value!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            e = self.node(BinOp(op, e, self.term()))
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            e = self.node(BinOp(op, e, self.unary()))
        return e

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            return self.node(Neg(self.unary()))
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        while self.peek()[1] == "^":
            self.take()
            kind, text, pos = self.take()
            if kind != "number" or not text.isdigit():
                raise ExprSyntaxError("exponent must be a non-negative integer literal", pos)
            e = self.node(Pow(e, int(text)))
        return e

    def atom(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "number":
            return self.node(Num(Fraction(text)))
        if kind == "name":
            if text in VARIABLES:
                return self.node(Var(text))
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return self.node(Call(text, arg))
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {text!r}", pos)


def parse(text: str, pool: dict | None = None) -> Expr:
    """Parse ``text`` into an expression tree.

    Passing the same ``pool`` to several calls shares equal subtrees between them.
    """
    return _Parser(text, pool).parse()


# ---------------------------------------------------------------------------
# tree utilities


def to_text(e: Expr) -> str:
    """Fully parenthesized source text.

    ``parse(to_text(e)) == e`` whenever every literal is a non-negative
    integer or decimal; other literals come back as small quotient trees.
    """
    if isinstance(e, Num):
        v = e.value
        body = _decimal(abs(v)) if v.denominator != 1 else str(abs(v.numerator))
        if body is None:
            body = f"{abs(v.numerator)}/{v.denominator}"
        return body if v >= 0 and "/" not in body else f"({'-' if v < 0 else ''}{body})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)}{e.op}{to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)}^{e.exponent})"
    if isinstance(e, Call):
        return f"{e.fn}({to_text(e.arg)})"
    raise TypeError(e)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _decimal(v: Fraction) -> str | None:
    """Exact decimal text for v >= 0 when the denominator has only factors 2 and 5."""
    d = v.denominator
    k = 0
    while d % 2 == 0 or d % 5 == 0:
        d //= 2 if d % 2 == 0 else 5
        k += 1
    if d != 1:
        return None
    digits = str(v.numerator * 10**k // v.denominator).rjust(k + 1, "0")
    text = f"{digits[:-k]}.{digits[-k:]}".rstrip("0")
    return text


def to_source(e: Expr) -> str:
    """Readable source text with minimal parentheses; it parses back to an equal value."""
    return _source(e)[0]


def _source(e: Expr) -> tuple[str, int]:
    if isinstance(e, Num):
        v = e.value
        if v < 0:
            inner, _ = _source(Num(-v))
            return f"-{inner}", 3
        if v.denominator == 1:
            return str(v.numerator), 5
        dec = _decimal(v)
        return (dec, 5) if dec is not None else (f"({v.numerator}/{v.denominator})", 5)
    if isinstance(e, Var):
        return e.name, 5
    if isinstance(e, Call):
        return f"{e.fn}({to_source(e.arg)})", 5
    if isinstance(e, Neg):
        inner, p = _source(e.arg)
        return "-" + (inner if p >= 3 else f"({inner})"), 3
    if isinstance(e, Pow):
        inner, p = _source(e.base)
        return (inner if p >= 4 else f"({inner})") + f"^{e.exponent}", 4
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        left, lp = _source(e.left)
        right, rp = _source(e.right)
        if lp < prec:
            left = f"({left})"
        if rp <= prec:
            right = f"({right})"
        sep = f" {e.op} " if prec == 1 else e.op
        return f"{left}{sep}{right}", prec
    raise TypeError(e)


def variables(e: Expr) -> set[str]:
    seen: set[str] = set()
    stack = [e]
    visited: set[int] = set()
    while stack:
        node = stack.pop()
        if id(node) in visited:
            continue
        visited.add(id(node))
        if isinstance(node, Var):
            seen.add(node.name)
        elif isinstance(node, (Neg, Call)):
            stack.append(node.arg)
        elif isinstance(node, BinOp):
            stack.extend((node.left, node.right))
        elif isinstance(node, Pow):
            stack.append(node.base)
    return seen


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions.  Shared subtrees stay shared."""
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Var):
            out = mapping.get(node.name, node)
        elif isinstance(node, Num):
            out = node
        elif isinstance(node, Neg):
            out = Neg(go(node.arg))
        elif isinstance(node, BinOp):
            out = BinOp(node.op, go(node.left), go(node.right))
        elif isinstance(node, Pow):
            out = Pow(go(node.base), node.exponent)
        elif isinstance(node, Call):
            out = Call(node.fn, go(node.arg))
        else:
            raise TypeError(node)
        memo[key] = out
        return out

    return go(e)


# ---------------------------------------------------------------------------
# evaluation


def _bind(point: Sequence | Mapping, names: Sequence[str] | None) -> dict:
    if isinstance(point, Mapping):
        return dict(point)
    names = VARIABLES[: len(point)] if names is None else names
    if len(names) != len(point):
        raise ExprError("point dimension does not match variable names")
    return dict(zip(names, point))


def _lookup(env: dict, name: str):
    try:
        return env[name]
    except KeyError:
        raise ExprError(f"variable {name!r} not bound at this point") from None


def _is_array(x) -> bool:
    return isinstance(x, np.ndarray)


def eval_scalar(e: Expr, point, names: Sequence[str] | None = None, exact: bool | None = None):
    """Evaluate at a point.  ``point`` may hold numpy arrays (vectorized)."""
    env = _bind(point, names)
    if exact is None:
        exact = all(jets.is_exact(x) for x in env.values())
    if exact:
        env = {k: Fraction(x) for k, x in env.items()}
    else:
        env = {k: (x.astype(float) if _is_array(x) else float(x)) for k, x in env.items()}
    memo: dict[int, object] = {}

    def go(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Num):
            out = node.value if exact else float(node.value)
        elif isinstance(node, Var):
            out = _lookup(env, node.name)
        elif isinstance(node, Neg):
            out = -go(node.arg)
        elif isinstance(node, BinOp):
            a, b = go(node.left), go(node.right)
            if node.op == "+":
                out = a + b
            elif node.op == "-":
                out = a - b
            elif node.op == "*":
                out = a * b
            else:
                if (np.any(b == 0) if _is_array(b) else b == 0):
                    raise ExprDomainError("division by zero")
                out = a / b
        elif isinstance(node, Pow):
            out = go(node.base) ** node.exponent
        elif isinstance(node, Call):
            out = _apply_scalar(node.fn, go(node.arg))
        else:
            raise TypeError(node)
        memo[key] = out
        return out

    return go(e)


def _apply_scalar(fn: str, x):
    if fn == "sqrt":
        if (np.any(x < 0) if _is_array(x) else x < 0):
            raise ExprDomainError("square root of a negative value")
        return jets.exact_sqrt(x)
    if jets.is_exact(x) and x == 0:
        return {"sin": Fraction(0), "cos": Fraction(1), "exp": Fraction(1)}[fn]
    if _is_array(x):
        return getattr(np, fn)(x)
    return getattr(math, fn)(float(x))


def eval_jet(
    e: Expr,
    base_point,
    order: int = jets.DEFAULT_ORDER,
    names: Sequence[str] | None = None,
    exact: bool | None = None,
) -> Jet:
    """Truncated Taylor expansion of ``e`` at ``base_point``."""
    return eval_jets((e,), base_point, order, names, exact)[0]


def eval_jets(
    exprs: Sequence[Expr],
    base_point,
    order: int = jets.DEFAULT_ORDER,
    names: Sequence[str] | None = None,
    exact: bool | None = None,
) -> tuple[Jet, ...]:
    """Expand several expressions at once; equal subtrees are expanded once."""
    if isinstance(base_point, Mapping):
        names = tuple(base_point)
        base_point = tuple(base_point.values())
    names = tuple(VARIABLES[: len(base_point)] if names is None else names)
    if exact is None:
        exact = all(jets.is_exact(x) for x in base_point)
    if exact:
        base = tuple(Fraction(x) for x in base_point)
    else:
        base = tuple(x.astype(float) if _is_array(x) else float(x) for x in base_point)
    n = len(base)
    env = {name: jets.variable(i, n, order, base) for i, name in enumerate(names)}
    memo: dict[int, Jet] = {}

    def go(node) -> Jet:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Num):
            out = jets.constant(node.value if exact else float(node.value), n, order, base)
        elif isinstance(node, Var):
            out = _lookup(env, node.name)
        elif isinstance(node, Neg):
            out = -go(node.arg)
        elif isinstance(node, BinOp):
            a, b = go(node.left), go(node.right)
            if node.op == "+":
                out = a + b
            elif node.op == "-":
                out = a - b
            elif node.op == "*":
                out = a * b
            else:
                b0 = b.value
                if (np.any(b0 == 0) if _is_array(b0) else b0 == 0):
                    raise ExprDomainError("division by zero at the base point")
                out = a / b
        elif isinstance(node, Pow):
            out = go(node.base) ** node.exponent
        elif isinstance(node, Call):
            out = _apply_jet(node.fn, go(node.arg))
        else:
            raise TypeError(node)
        memo[key] = out
        return out

    return tuple(go(e) for e in exprs)


def _apply_jet(fn: str, a: Jet) -> Jet:
    if fn == "sqrt":
        a0 = a.value
        if (np.any(a0 <= 0) if _is_array(a0) else a0 <= 0):
            raise ExprDomainError("square root needs a positive value at the base point")
        return jets.jet_sqrt(a)
    try:
        return {"sin": jets.jet_sin, "cos": jets.jet_cos, "exp": jets.jet_exp}[fn](a)
    except JetError as exc:  # pragma: no cover - defensive
        raise ExprDomainError(str(exc)) from exc
