"""Compile rational expressions to plain Python float functions."""

from __future__ import annotations

from typing import Sequence

from .poly import Polynomial
from .rational import RationalExpr


def _poly_src(p: Polynomial, index: dict) -> str:
    if p.is_zero:
        return "0.0"
    terms = []
    for m, c in p.sorted_terms():
        factors = [repr(float(c))] if (c != 1 or not m) else []
        for n, e in m:
            v = index[n]
            factors.append(v if e == 1 else f"{v}**{e}")
        terms.append("*".join(factors))
    return " + ".join(terms)


def _expr_src(e: RationalExpr, index: dict) -> str:
    num = _poly_src(e.num, index)
    if e.den.is_constant:
        d = float(e.den.constant_value)
        return f"({num})" if d == 1 else f"({num})/{d!r}"
    return f"({num})/({_poly_src(e.den, index)})"


def compile_vector(exprs: Sequence[RationalExpr], argnames: Sequence[str], aux=None, fixed=None):
    """Return f(args) -> list of floats for the given expressions.

    ``argnames`` name the entries of the positional vector; ``aux`` atoms are
    computed from their expansions first; ``fixed`` binds remaining symbols to
    numbers.
    """
    aux = dict(aux or {})
    fixed = dict(fixed or {})
    index = {n: f"a[{i}]" for i, n in enumerate(argnames)}
    lines = ["def _f(a):"]
    for k, v in sorted(fixed.items()):
        if k in index:
            continue
        local = f"_p_{len(index)}"
        lines.append(f"    {local} = {float(v)!r}")
        index[k] = local
    # atoms in dependency order
    pending = dict(aux)
    while pending:
        progressed = False
        for name, ex in list(pending.items()):
            if all(v in index for v in ex.variables()):
                local = f"_x_{len(index)}"
                lines.append(f"    {local} = {_expr_src(ex, index)}")
                index[name] = local
                del pending[name]
                progressed = True
        if not progressed:
            missing = sorted({v for ex in pending.values() for v in ex.variables() if v not in index})
            raise KeyError(f"no value for symbols {missing}")
    needed = set()
    for e in exprs:
        needed |= e.variables()
    missing = sorted(needed - index.keys())
    if missing:
        raise KeyError(f"no value for symbols {missing}")
    body = ", ".join(_expr_src(e, index) for e in exprs)
    lines.append(f"    return [{body}]")
    namespace: dict = {}
    exec("\n".join(lines), namespace)  # noqa: S102 - generated from canonical expressions
    return namespace["_f"]
