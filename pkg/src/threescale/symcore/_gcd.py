"""Multivariate integer polynomial gcd, delegated to sympy's sparse rings."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from sympy.polys.domains import ZZ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyRing

from .poly import Polynomial


@lru_cache(maxsize=256)
def _ring(gens: tuple) -> PolyRing:
    return PolyRing(gens, ZZ, grlex)


def _to_ring(R: PolyRing, gens: tuple, p: Polynomial):
    index = {g: i for i, g in enumerate(gens)}
    n = len(gens)
    data = {}
    for m, c in p.items():
        exps = [0] * n
        for name, e in m:
            exps[index[name]] = e
        data[tuple(exps)] = ZZ(c.numerator)
    return R.from_dict(data)


def _from_ring(gens: tuple, f) -> Polynomial:
    terms = {}
    for exps, c in f.items():
        m = tuple((gens[i], e) for i, e in enumerate(exps) if e)
        terms[m] = Fraction(int(c))
    return Polynomial._wrap(terms)


def cofactors(a: Polynomial, b: Polynomial):
    """Return (g, a/g, b/g) for integer-coefficient polynomials a, b."""
    gens = tuple(sorted(a.variables() | b.variables()))
    if not gens:
        return Polynomial.constant(1), a, b
    R = _ring(gens)
    h, ca, cb = _to_ring(R, gens, a).cofactors(_to_ring(R, gens, b))
    return _from_ring(gens, h), _from_ring(gens, ca), _from_ring(gens, cb)
