"""Recursive-descent parser for rational expressions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | '(' expr ')'

Exponents must evaluate to integer constants. Decimal literals are read
exactly (``0.1`` is ``1/10``).
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import InvalidExpressionError, ParseError
from .rational import RationalExpr

RESERVED = frozenset({"eps1", "eps2"})

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>\*\*|[-+*/^()]))"
)


def tokenize(text: str, line: int | None = None, col0: int = 0):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", line, col0 + bad + 1)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), col0 + start + 1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, line):
        self.toks = tokens
        self.i = 0
        self.line = line

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        col = tok[2] if tok else (self.toks[-1][2] + len(self.toks[-1][1]) if self.toks else 1)
        raise ParseError(msg, self.line, col)

    def expr(self):
        left = self.term()
        while (tok := self.peek()) and tok[1] in ("+", "-"):
            self.take()
            right = self.term()
            left = left + right if tok[1] == "+" else left - right
        return left

    def term(self):
        left = self.unary()
        while (tok := self.peek()) and tok[1] in ("*", "/"):
            self.take()
            right = self.unary()
            if tok[1] == "*":
                left = left * right
            else:
                if right.is_zero:
                    self.error("division by zero", tok)
                left = left / right
        return left

    def unary(self):
        tok = self.peek()
        if tok and tok[1] in ("+", "-"):
            self.take()
            val = self.unary()
            return -val if tok[1] == "-" else val
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok and tok[1] in ("^", "**"):
            self.take()
            exp = self.unary()
            if not exp.is_constant or exp.constant_value().denominator != 1:
                self.error("exponent must be an integer constant", tok)
            k = int(exp.constant_value())
            if k < 0 and base.is_zero:
                self.error("zero raised to a negative power", tok)
            return base ** k
        return base

    def atom(self):
        tok = self.take()
        if tok is None:
            self.error("unexpected end of expression")
        kind, text, _ = tok
        if kind == "num":
            return RationalExpr.const(Fraction(text))
        if kind == "name":
            return RationalExpr.symbol(text)
        if text == "(":
            val = self.expr()
            close = self.take()
            if close is None or close[1] != ")":
                self.error("expected ')'", close)
            return val
        self.error(f"unexpected token {text!r}", tok)


def parse_expr(text: str, line: int | None = None, col0: int = 0) -> RationalExpr:
    """Parse ``text`` into a canonical RationalExpr."""
    toks = tokenize(text, line, col0)
    if not toks:
        raise ParseError("empty expression", line, col0 + 1)
    p = _Parser(toks, line)
    try:
        val = p.expr()
    except InvalidExpressionError as exc:
        raise ParseError(str(exc), line, col0 + 1) from None
    if p.peek() is not None:
        p.error(f"unexpected token {p.peek()[1]!r}", p.peek())
    return val


def names_in(text: str) -> list:
    """Identifiers in ``text`` in order of first appearance."""
    seen = []
    for kind, tok, _ in tokenize(text):
        if kind == "name" and tok not in seen:
            seen.append(tok)
    return seen
