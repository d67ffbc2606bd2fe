"""Tiny polynomial grammar over the ambient coordinates X, Y, Z.

Grammar (standard precedence, ^ for nonnegative integer powers):

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := '-' factor | atom ('^' integer)?
    atom   := number | 'X' | 'Y' | 'Z' | '(' expr ')'

No implicit multiplication.  Trees pretty-print fully parenthesized, so
print-then-parse is the identity on trees.  Compilation produces the
ambient coefficient table of a HamiltonianFn; everything stays exact
because only polynomials are admitted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import AMBIENT_DEGREE_MAX, HamiltonianFn
from .errors import DegreeExceeded, ExpressionSyntaxError


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


_VARS = ("X", "Y", "Z")


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^()":
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch in _VARS:
            tokens.append(("var", ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                seen_dot = seen_dot or text[j] == "."
                j += 1
            lit = text[i:j]
            if lit == ".":
                raise ExpressionSyntaxError("lone decimal point", i)
            tokens.append(("num", float(lit), i))
            i = j
            continue
        raise ExpressionSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.take()
        if tok[0] != kind:
            raise ExpressionSyntaxError(f"expected {kind!r}", tok[2])
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionSyntaxError("trailing input", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "*":
            self.take()
            node = Mul(node, self.factor())
        return node

    def factor(self):
        tok = self.peek()
        if tok[0] == "-":
            self.take()
            return Neg(self.factor())
        node = self.atom()
        if self.peek()[0] == "^":
            self.take()
            etok = self.take()
            if etok[0] != "num" or etok[1] != int(etok[1]) or etok[1] < 0:
                raise ExpressionSyntaxError(
                    "exponent must be a nonnegative integer", etok[2])
            node = Pow(node, int(etok[1]))
        return node

    def atom(self):
        tok = self.take()
        if tok[0] == "num":
            return Num(tok[1])
        if tok[0] == "var":
            return Var(tok[1])
        if tok[0] == "(":
            node = self.expr()
            closing = self.take()
            if closing[0] != ")":
                raise ExpressionSyntaxError("expected ')'", closing[2])
            return node
        raise ExpressionSyntaxError("expected a value", tok[2])


def parse_expression(text: str):
    """Parse to a tree; offsets in errors point into the input string."""
    return _Parser(text).parse()


def pretty(node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{pretty(node.arg)})"
    if isinstance(node, Add):
        return f"({pretty(node.left)} + {pretty(node.right)})"
    if isinstance(node, Sub):
        return f"({pretty(node.left)} - {pretty(node.right)})"
    if isinstance(node, Mul):
        return f"({pretty(node.left)} * {pretty(node.right)})"
    if isinstance(node, Pow):
        return f"({pretty(node.base)}^{node.exponent})"
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, X, Y, Z):
    """Direct arithmetic evaluation, the oracle for compiled tables."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return {"X": X, "Y": Y, "Z": Z}[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.arg, X, Y, Z)
    if isinstance(node, Add):
        return evaluate(node.left, X, Y, Z) + evaluate(node.right, X, Y, Z)
    if isinstance(node, Sub):
        return evaluate(node.left, X, Y, Z) - evaluate(node.right, X, Y, Z)
    if isinstance(node, Mul):
        return evaluate(node.left, X, Y, Z) * evaluate(node.right, X, Y, Z)
    if isinstance(node, Pow):
        return evaluate(node.base, X, Y, Z) ** node.exponent
    raise TypeError(f"not an expression node: {node!r}")


def _table_degree(c: np.ndarray) -> int:
    nz = np.nonzero(c)
    if len(nz[0]) == 0:
        return 0
    return int((nz[0] + nz[1] + nz[2]).max())


def _table_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0] - 1,
                    a.shape[1] + b.shape[1] - 1,
                    a.shape[2] + b.shape[2] - 1))
    for (i, j, l) in zip(*np.nonzero(a)):
        out[i: i + b.shape[0], j: j + b.shape[1], l: l + b.shape[2]] += (
            a[i, j, l] * b)
    if _table_degree(out) > AMBIENT_DEGREE_MAX:
        raise DegreeExceeded(
            f"product has degree {_table_degree(out)} > {AMBIENT_DEGREE_MAX}")
    return out


def _table_add(a: np.ndarray, b: np.ndarray, sign: float = 1.0) -> np.ndarray:
    shape = tuple(max(x, y) for x, y in zip(a.shape, b.shape))
    out = np.zeros(shape)
    out[: a.shape[0], : a.shape[1], : a.shape[2]] += a
    out[: b.shape[0], : b.shape[1], : b.shape[2]] += sign * b
    return out


def _compile_table(node) -> np.ndarray:
    if isinstance(node, Num):
        return np.full((1, 1, 1), node.value)
    if isinstance(node, Var):
        c = np.zeros((2, 2, 2))
        c[{"X": (1, 0, 0), "Y": (0, 1, 0), "Z": (0, 0, 1)}[node.name]] = 1.0
        return c
    if isinstance(node, Neg):
        return -_compile_table(node.arg)
    if isinstance(node, Add):
        return _table_add(_compile_table(node.left), _compile_table(node.right))
    if isinstance(node, Sub):
        return _table_add(_compile_table(node.left), _compile_table(node.right), -1.0)
    if isinstance(node, Mul):
        return _table_mul(_compile_table(node.left), _compile_table(node.right))
    if isinstance(node, Pow):
        out = np.full((1, 1, 1), 1.0)
        base = _compile_table(node.base)
        for _ in range(node.exponent):
            out = _table_mul(out, base)
        return out
    raise TypeError(f"not an expression node: {node!r}")


def compile_expression(node) -> HamiltonianFn:
    table = _compile_table(node)
    if _table_degree(table) > AMBIENT_DEGREE_MAX:
        raise DegreeExceeded(f"degree {_table_degree(table)} too large")
    # trim trailing all-zero planes so equal polynomials share a shape
    deg = _table_degree(table)
    size = deg + 1
    return HamiltonianFn(table[: size, : size, : size])


def hamiltonian_from_text(text: str) -> HamiltonianFn:
    return compile_expression(parse_expression(text))
