"""Exact polynomial, rational-function and matrix arithmetic."""

from .lambdify import compile_vector
from .matrix import SymMatrix, det, invert, jacobian
from .parse import RESERVED, names_in, parse_expr
from .poly import Polynomial
from .rational import ONE, ZERO, RationalExpr


def canonicalize(e: RationalExpr) -> RationalExpr:
    """Return the canonical representative (expressions are stored canonically)."""
    return RationalExpr(e.num, e.den)


def differentiate(e: RationalExpr, v: str, aux=None) -> RationalExpr:
    return e.diff(v, aux)


def substitute(e: RationalExpr, bindings) -> RationalExpr:
    return e.subs(bindings)


__all__ = [
    "ONE",
    "ZERO",
    "Polynomial",
    "RESERVED",
    "RationalExpr",
    "SymMatrix",
    "canonicalize",
    "compile_vector",
    "det",
    "differentiate",
    "invert",
    "jacobian",
    "names_in",
    "parse_expr",
    "substitute",
]
