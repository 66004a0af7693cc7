"""Canonical multivariate rational functions over the rationals.

Canonical form: numerator and denominator have integer coefficients and
are jointly primitive, share no nonconstant factor, and the denominator's
grlex-leading coefficient is positive. Two expressions are equal iff
their canonical forms are identical.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Mapping

from ..errors import EvaluationError, InvalidExpressionError
from ._gcd import cofactors
from .poly import Polynomial

_ONE = Polynomial.constant(1)
_ZERO = Polynomial()


def _int_scale(p: Polynomial, q: Polynomial):
    """Scale p, q by a common rational so both become integral and jointly primitive."""
    den = 1
    for _, c in p.items():
        den = lcm(den, c.denominator)
    for _, c in q.items():
        den = lcm(den, c.denominator)
    num = 0
    for _, c in p.items():
        num = gcd(num, (c * den).numerator)
    for _, c in q.items():
        num = gcd(num, (c * den).numerator)
    f = Fraction(den, num)
    if q.leading_coefficient() < 0:
        f = -f
    if f == 1:
        return p, q
    return p.scale(f), q.scale(f)


def _canonical(num: Polynomial, den: Polynomial):
    if den.is_zero:
        raise InvalidExpressionError("zero denominator")
    if num.is_zero:
        return _ZERO, _ONE
    if den.is_constant:
        c = den.constant_value
        num = num.scale(1 / c)
        return _int_scale(num, _ONE)
    if den.is_monomial:
        mc = num.monomial_content()
        (dm, _), = den.items()
        common = tuple((n, min(e, dict(mc).get(n, 0))) for n, e in dm)
        common = tuple(t for t in common if t[1])
        if common:
            num = num.divide_monomial(common)
            den = den.divide_monomial(common)
        return _int_scale(num, den)
    # clear rational coefficients before the integer gcd
    num, den = _int_scale(num, den)
    g, a, b = cofactors(num, den)
    if not g.is_constant:
        num, den = a, b
    return _int_scale(num, den)


class RationalExpr:
    """Immutable canonical rational function."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num=None, den=None, *, _raw=False):
        if num is None:
            num = _ZERO
        elif not isinstance(num, Polynomial):
            num = Polynomial.constant(num)
        if den is None:
            den = _ONE
        elif not isinstance(den, Polynomial):
            den = Polynomial.constant(den)
        if not _raw:
            num, den = _canonical(num, den)
        self.num = num
        self.den = den
        self._hash = None

    # -- constructors --------------------------------------------------
    @classmethod
    def symbol(cls, name: str) -> "RationalExpr":
        return cls(Polynomial.symbol(name), _ONE, _raw=True)

    @classmethod
    def const(cls, value) -> "RationalExpr":
        return cls(Polynomial.constant(Fraction(value)))

    @classmethod
    def from_poly(cls, p: Polynomial) -> "RationalExpr":
        return cls(p)

    @staticmethod
    def coerce(x) -> "RationalExpr":
        if isinstance(x, RationalExpr):
            return x
        if isinstance(x, Polynomial):
            return RationalExpr(x)
        if isinstance(x, (int, Fraction)):
            return RationalExpr.const(x)
        if isinstance(x, str):
            from .parse import parse_expr

            return parse_expr(x)
        raise TypeError(f"cannot convert {type(x).__name__} to RationalExpr")

    # -- inspection ------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_constant(self) -> bool:
        return self.num.is_constant and self.den.is_constant

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_constant

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"expression {self} is not constant")
        return self.num.constant_value / self.den.constant_value

    def variables(self) -> frozenset:
        return self.num.variables() | self.den.variables()

    def depends_on(self, names) -> bool:
        return bool(self.variables() & frozenset(names))

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        other = RationalExpr.coerce(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        if self.den == other.den:
            return RationalExpr(self.num + other.num, self.den)
        return RationalExpr(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr(-self.num, self.den, _raw=True)

    def __sub__(self, other):
        return self + (-RationalExpr.coerce(other))

    def __rsub__(self, other):
        return RationalExpr.coerce(other) + (-self)

    def __mul__(self, other):
        other = RationalExpr.coerce(other)
        if self.is_zero or other.is_zero:
            return RationalExpr()
        if other.is_constant and other.den.is_constant:
            c = other.constant_value()
            if c == 1:
                return self
        # cross-cancel before multiplying to keep the gcd work small
        n1, d2 = _cancel_pair(self.num, other.den)
        n2, d1 = _cancel_pair(other.num, self.den)
        return RationalExpr(n1 * n2, d1 * d2)

    __rmul__ = __mul__

    def inverse(self) -> "RationalExpr":
        if self.is_zero:
            raise InvalidExpressionError("division by zero expression")
        return RationalExpr(self.den, self.num)

    def __truediv__(self, other):
        return self * RationalExpr.coerce(other).inverse()

    def __rtruediv__(self, other):
        return RationalExpr.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise InvalidExpressionError("only integer powers are supported")
        if k < 0:
            return self.inverse() ** (-k)
        return RationalExpr(self.num ** k, self.den ** k, _raw=True) if k else RationalExpr.const(1)

    # -- calculus and substitution ----------------------------------------
    def diff(self, name: str, aux: Mapping[str, "RationalExpr"] | None = None) -> "RationalExpr":
        """Derivative with respect to ``name``.

        Symbols in ``aux`` are auxiliary atoms standing for their expansions;
        the chain rule runs through them.
        """
        out = self._partial(name)
        if aux:
            for atom, expansion in aux.items():
                if atom == name or atom not in self.variables():
                    continue
                inner = expansion.diff(name, aux)
                if not inner.is_zero:
                    out = out + self._partial(atom) * inner
        return out

    def _partial(self, name: str) -> "RationalExpr":
        dn = self.num.diff(name)
        dd = self.den.diff(name)
        if dd.is_zero:
            return RationalExpr(dn, self.den)
        return RationalExpr(dn * self.den - self.num * dd, self.den * self.den)

    def subs(self, bindings: Mapping[str, object]) -> "RationalExpr":
        """Simultaneous substitution of symbols by expressions."""
        vars_ = self.variables()
        live = {k: RationalExpr.coerce(v) for k, v in bindings.items() if k in vars_}
        if not live:
            return self
        poly_b = {k: v.num.scale(1 / v.den.constant_value) for k, v in live.items() if v.is_polynomial}
        rat_b = {k: v for k, v in live.items() if not v.is_polynomial}
        num = self.num.subs(poly_b) if poly_b else self.num
        den = self.den.subs(poly_b) if poly_b else self.den
        if rat_b:
            # homogenise in each rational binding's denominator
            degs = {k: max(num.degree(k), den.degree(k), 0) for k in rat_b}
            num = _homogenised_subs(num, rat_b, degs)
            den = _homogenised_subs(den, rat_b, degs)
        if den.is_zero:
            raise EvaluationError(f"substitution makes the denominator of {self} vanish")
        return RationalExpr(num, den)

    def evaluate(self, point: Mapping[str, object]):
        """Evaluate at numeric values; floats give a float, rationals an exact Fraction."""
        use_float = any(isinstance(v, float) for v in point.values())
        try:
            d = _eval_poly(self.den, point, use_float)
            n = _eval_poly(self.num, point, use_float)
        except KeyError as exc:
            raise EvaluationError(str(exc)) from None
        if d == 0:
            raise EvaluationError(f"denominator of {self} vanishes at the given point")
        return n / d

    def expand_aux(self, aux: Mapping[str, "RationalExpr"]) -> "RationalExpr":
        """Replace auxiliary atoms by their expansions, to a fixed point."""
        out = self
        for _ in range(len(aux) + 1):
            if not (out.variables() & aux.keys()):
                return out
            out = out.subs(aux)
        raise InvalidExpressionError("cyclic auxiliary definitions")

    # -- comparison and display -----------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Polynomial)):
            other = RationalExpr.coerce(other)
        if not isinstance(other, RationalExpr):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __str__(self):
        if self.den == _ONE:
            return str(self.num)
        n = str(self.num)
        if len(self.num) > 1:
            n = f"({n})"
        d = str(self.den)
        if len(self.den) > 1 or "*" in d or "/" in d:
            d = f"({d})"
        return f"{n}/{d}"

    def __repr__(self):
        return f"RationalExpr({str(self)!r})"


def _cancel_pair(a: Polynomial, b: Polynomial):
    if a.is_constant or b.is_constant:
        return a, b
    if b.is_monomial or a.is_monomial:
        ma, mb = a.monomial_content(), b.monomial_content()
        da = dict(ma)
        common = tuple((n, min(e, da[n])) for n, e in mb if n in da)
        if common:
            return a.divide_monomial(common), b.divide_monomial(common)
        return a, b
    return a, b


def _homogenised_subs(p: Polynomial, rat_b: Mapping[str, RationalExpr], degs: Mapping[str, int]):
    pw_num: dict = {}
    pw_den: dict = {}

    def pn(k, e):
        if (k, e) not in pw_num:
            pw_num[(k, e)] = rat_b[k].num ** e
        return pw_num[(k, e)]

    def pd(k, e):
        if (k, e) not in pw_den:
            pw_den[(k, e)] = rat_b[k].den ** e
        return pw_den[(k, e)]

    out = Polynomial()
    for m, c in p.items():
        dm = dict(m)
        kept = tuple(t for t in m if t[0] not in rat_b)
        term = Polynomial._wrap({kept: c})
        for k in rat_b:
            e = dm.get(k, 0)
            if e:
                term = term * pn(k, e)
            if degs[k] - e:
                term = term * pd(k, degs[k] - e)
        out = out + term
    return out


def _eval_poly(p: Polynomial, point, use_float: bool):
    total = 0.0 if use_float else Fraction(0)
    for m, c in p.items():
        v = float(c) if use_float else c
        for n, e in m:
            x = point[n]
            v = v * (x if e == 1 else x ** e)
        total += v
    return total


ZERO = RationalExpr()
ONE = RationalExpr.const(1)
