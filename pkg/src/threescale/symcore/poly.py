"""Sparse multivariate polynomials over the rationals.

A monomial is a tuple of ``(name, exponent)`` pairs sorted by name, with
positive exponents only; the empty tuple is the constant monomial. Symbols
are ordered by name, and monomials by graded lexicographic order on that
symbol order. Polynomials from different systems combine freely because
the representation never refers to a positional symbol table.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Mapping

ONE_MONO: tuple = ()


def mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        na, ea = a[i]
        nb, eb = b[j]
        if na == nb:
            out.append((na, ea + eb))
            i += 1
            j += 1
        elif na < nb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    if i < la:
        out.extend(a[i:])
    if j < lb:
        out.extend(b[j:])
    return tuple(out)


def mono_div(a: tuple, b: tuple):
    """Return a/b if b divides a, else None."""
    if not b:
        return a
    da = dict(a)
    for n, e in b:
        have = da.get(n, 0)
        if have < e:
            return None
        if have == e:
            del da[n]
        else:
            da[n] = have - e
    return tuple(sorted(da.items()))


def mono_degree(m: tuple) -> int:
    return sum(e for _, e in m)


def grlex_key(m: tuple):
    """Sort key placing grlex-larger monomials first."""
    return (-mono_degree(m), tuple((n, -e) for n, e in m))


def mono_str(m: tuple) -> str:
    return "*".join(n if e == 1 else f"{n}^{e}" for n, e in m)


def _coerce_coeff(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


class Polynomial:
    """Immutable sparse polynomial; zero coefficients are never stored."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple, object] | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = _coerce_coeff(c)
                if c:
                    clean[m] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _wrap(cls, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def constant(cls, c) -> "Polynomial":
        c = _coerce_coeff(c)
        return cls._wrap({ONE_MONO: c} if c else {})

    @classmethod
    def symbol(cls, name: str) -> "Polynomial":
        return cls._wrap({((name, 1),): Fraction(1)})

    # -- inspection ---------------------------------------------------
    def items(self):
        return self._terms.items()

    def coeff(self, m: tuple) -> Fraction:
        return self._terms.get(m, Fraction(0))

    def __len__(self):
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and ONE_MONO in self._terms)

    @property
    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError("polynomial is not constant")
        return self._terms.get(ONE_MONO, Fraction(0))

    @property
    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def variables(self) -> frozenset:
        return frozenset(n for m in self._terms for n, _ in m)

    def total_degree(self) -> int:
        return max((mono_degree(m) for m in self._terms), default=-1)

    def degree(self, name: str) -> int:
        best = -1 if not self._terms else 0
        for m in self._terms:
            for n, e in m:
                if n == name and e > best:
                    best = e
        return best

    def sorted_terms(self):
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]))

    def leading_term(self):
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        m = min(self._terms, key=grlex_key)
        return m, self._terms[m]

    def leading_coefficient(self) -> Fraction:
        return self.leading_term()[1]

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        if len(other._terms) > len(self._terms):
            big, small = other._terms, self._terms
        else:
            big, small = self._terms, other._terms
        out = dict(big)
        for m, c in small.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v += c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return Polynomial._wrap(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._wrap({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _coerce_coeff(c)
        if not c:
            return Polynomial._wrap({})
        return Polynomial._wrap({m: v * c for m, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        a, b = self._terms, other._terms
        if not a or not b:
            return Polynomial._wrap({})
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            (mb, cb), = b.items()
            return Polynomial._wrap({mono_mul(m, mb): c * cb for m, c in a.items()})
        out: dict = {}
        get = out.get
        for mb, cb in b.items():
            for ma, ca in a.items():
                m = mono_mul(ma, mb)
                out[m] = get(m, 0) + ca * cb
        return Polynomial._wrap({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = Polynomial.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def diff(self, name: str) -> "Polynomial":
        out = {}
        for m, c in self._terms.items():
            for idx, (n, e) in enumerate(m):
                if n == name:
                    if e == 1:
                        nm = m[:idx] + m[idx + 1:]
                    else:
                        nm = m[:idx] + ((n, e - 1),) + m[idx + 1:]
                    out[nm] = out.get(nm, 0) + c * e
                    break
        return Polynomial._wrap({m: c for m, c in out.items() if c})

    def subs(self, bindings: Mapping[str, "Polynomial"]) -> "Polynomial":
        """Simultaneous polynomial substitution of symbols."""
        if not bindings or not (self.variables() & bindings.keys()):
            return self
        powers: dict = {}

        def power(name, e):
            key = (name, e)
            if key not in powers:
                powers[key] = bindings[name] ** e
            return powers[key]

        out = Polynomial._wrap({})
        for m, c in self._terms.items():
            kept = []
            factor = None
            for n, e in m:
                if n in bindings:
                    f = power(n, e)
                    factor = f if factor is None else factor * f
                else:
                    kept.append((n, e))
            term = Polynomial._wrap({tuple(kept): c})
            out = out + (term if factor is None else term * factor)
        return out

    def evaluate(self, point: Mapping[str, object]):
        """Evaluate at a point; floats in ``point`` give a float result."""
        use_float = any(isinstance(v, float) for v in point.values())
        total = 0.0 if use_float else Fraction(0)
        for m, c in self._terms.items():
            v = float(c) if use_float else c
            for n, e in m:
                try:
                    x = point[n]
                except KeyError:
                    raise KeyError(f"no value for symbol {n!r}") from None
                v = v * (x if e == 1 else x ** e)
            total += v
        return total

    # -- content and normalisation -----------------------------------
    def integer_content(self):
        """Return (c, p) with self = c*p, p integral and primitive with positive lead."""
        if not self._terms:
            return Fraction(0), self
        den = 1
        for c in self._terms.values():
            den = den * c.denominator // gcd(den, c.denominator)
        num = 0
        for c in self._terms.values():
            num = gcd(num, (c * den).numerator)
        content = Fraction(num, den)
        if self.leading_coefficient() < 0:
            content = -content
        return content, Polynomial._wrap({m: c / content for m, c in self._terms.items()})

    def monomial_content(self) -> tuple:
        """Largest monomial dividing every term."""
        it = iter(self._terms)
        try:
            first = dict(next(it))
        except StopIteration:
            return ONE_MONO
        for m in it:
            dm = dict(m)
            for n in list(first):
                e = dm.get(n, 0)
                if e == 0:
                    del first[n]
                elif e < first[n]:
                    first[n] = e
            if not first:
                break
        return tuple(sorted(first.items()))

    def divide_monomial(self, mono: tuple) -> "Polynomial":
        out = {}
        for m, c in self._terms.items():
            q = mono_div(m, mono)
            if q is None:
                raise ValueError("monomial does not divide polynomial")
            out[q] = c
        return Polynomial._wrap(out)

    def coefficients_in(self, names: Iterable[str]) -> dict:
        """Split by monomials in ``names``; values are polynomials in the rest."""
        names = frozenset(names)
        out: dict = {}
        for m, c in self._terms.items():
            inner = tuple(p for p in m if p[0] in names)
            outer = tuple(p for p in m if p[0] not in names)
            out.setdefault(inner, {})[outer] = c
        return {k: Polynomial._wrap(v) for k, v in out.items()}

    # -- comparison and display ---------------------------------------
    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == ({ONE_MONO: Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if not m:
                body = str(a)
            elif a == 1:
                body = mono_str(m)
            elif a.denominator == 1:
                body = f"{a.numerator}*{mono_str(m)}"
            else:
                body = f"{a.numerator}/{a.denominator}*{mono_str(m)}"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"Polynomial({str(self)!r})"
