"""Product decompositions g00 = P1 μ1 and g00 + ε1 g10 = (P1 | ε1 P2)(μ1; μ2)."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .errors import DecompositionError, DegenerateDecompositionError, ParseError, PreconditionError
from .scaling import EPS1, ThreeScaleSystem
from .symcore import ZERO, Polynomial, RationalExpr, SymMatrix, jacobian, parse_expr
from .symcore._gcd import cofactors
from .symcore.poly import grlex_key, mono_div, mono_mul

_E1 = RationalExpr.symbol(EPS1)


@dataclass(frozen=True)
class Decomposition:
    states: tuple
    aux: dict
    P1: SymMatrix
    mu1: tuple
    P2: SymMatrix | None = None
    mu2: tuple | None = None
    R: SymMatrix | None = None  # μ1-component of g10, usually zero

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def n1(self) -> int:
        return len(self.mu1)

    @property
    def n2(self) -> int:
        return len(self.mu2) if self.mu2 else 0

    @property
    def has_second_layer(self) -> bool:
        return self.P2 is not None

    def dmu1(self) -> SymMatrix:
        return jacobian(self.mu1, self.states, self.aux)

    def dmu2(self) -> SymMatrix:
        if not self.has_second_layer:
            raise PreconditionError("decomposition has no second layer")
        return jacobian(self.mu2, self.states, self.aux)

    def dmu(self) -> SymMatrix:
        return self.dmu1().vstack(self.dmu2()) if self.has_second_layer else self.dmu1()

    def P(self) -> SymMatrix:
        """(P1 | P2) at ε1 = 0."""
        if not self.has_second_layer:
            return self.P1
        return self.P1.subs({EPS1: 0}).hstack(self.P2.subs({EPS1: 0}))


# -- solving g = P μ ------------------------------------------------------------
def _split(p: Polynomial, names) -> dict:
    """State monomial -> RationalExpr coefficient in the remaining symbols."""
    return {m: RationalExpr(c) for m, c in p.coefficients_in(names).items()}


def _divide(g: RationalExpr, mus: Sequence[RationalExpr], names):
    """Multivariate division of g by mus over the field of state-free expressions.

    Returns (quotients, remainder) with g = Σ q_j mu_j + remainder.
    """
    names = frozenset(names)
    if g.den.variables() & names:
        return None
    p = {m: c / RationalExpr(g.den) for m, c in _split(g.num, names).items()}
    divs = []
    for mu in mus:
        if mu.den.variables() & names:
            return None
        terms = {m: c / RationalExpr(mu.den) for m, c in _split(mu.num, names).items()}
        if not terms:
            return None
        lm = min(terms, key=grlex_key)
        divs.append((terms, lm, terms[lm]))
    quot = [dict() for _ in mus]
    rem: dict = {}
    while p:
        lm = min(p, key=grlex_key)
        lc = p[lm]
        for j, (terms, dlm, dlc) in enumerate(divs):
            q = mono_div(lm, dlm)
            if q is None:
                continue
            f = lc / dlc
            quot[j][q] = quot[j].get(q, ZERO) + f
            for m, c in terms.items():
                mm = mono_mul(q, m)
                v = p.get(mm, ZERO) - f * c
                if v.is_zero:
                    p.pop(mm, None)
                else:
                    p[mm] = v
            break
        else:
            rem[lm] = lc
            del p[lm]
    return [_join(q) for q in quot], _join(rem)


def _join(terms: dict) -> RationalExpr:
    out = ZERO
    for m, c in terms.items():
        out = out + c * RationalExpr(Polynomial({m: 1}))
    return out


def _coefficient_match(g: Sequence[RationalExpr], mus, names):
    """State-independent P with g = P μ, by matching state-monomial coefficients."""
    names = frozenset(names)
    cols = []
    for mu in mus:
        if mu.den.variables() & names:
            return None
        cols.append({m: c / RationalExpr(mu.den) for m, c in _split(mu.num, names).items()})
    rows = []
    for gi in g:
        if gi.den.variables() & names:
            return None
        rows.append({m: c / RationalExpr(gi.den) for m, c in _split(gi.num, names).items()})
    monos = sorted({m for c in cols for m in c} | {m for r in rows for m in r}, key=grlex_key)
    M = SymMatrix(len(monos), len(mus), [cols[j].get(m, ZERO) for m in monos for j in range(len(mus))])
    if M.rank() < len(mus):
        return None
    # least-norm-free exact solve: pick independent rows
    _, piv, _ = M.T._eliminate()
    sub = M.submatrix(piv, range(len(mus)))
    sub_inv = sub.inverse()
    P = []
    for r in rows:
        rhs = SymMatrix.column([r.get(monos[i], ZERO) for i in piv])
        sol = (sub_inv @ rhs).col(0)
        P.append(sol)
    return P


def _solve_factor(g: Sequence[RationalExpr], mus: Sequence[RationalExpr], names, expand):
    """Find P with g = P mus identically; return (P rows, residual)."""
    n1 = len(mus)
    g_exp = [expand(e) for e in g]
    mus_exp = [expand(m) for m in mus]

    def residual(P):
        return [expand(gi - sum((p * m for p, m in zip(row, mus)), ZERO)) for gi, row in zip(g, P)]

    if all(e.is_zero for e in g_exp):
        return [[ZERO] * n1 for _ in g], [ZERO] * len(g)
    attempts = []
    if n1 == 1:
        mu = mus[0]
        for mu_form, g_form in ((mu, g), (mus_exp[0], g_exp)):
            if mu_form.is_zero:
                continue
            P = [[gi / mu_form] for gi in g_form]
            # no poles along the manifold: denominators coprime with the numerator of μ
            ok = all(cofactors(_intpoly(row[0].den), _intpoly(mu_form.num))[0].is_constant for row in P)
            if ok:
                attempts.append(P)
    cm = _coefficient_match(g_exp, mus_exp, names)
    if cm is not None:
        attempts.append(cm)
    best_res = None
    for gs, ms in ((g, mus), (g_exp, mus_exp)):
        P, rems = [], []
        for gi in gs:
            out = _divide(gi, ms, names)
            if out is None:
                break
            q, r = out
            P.append(q)
            rems.append(r)
        else:
            attempts.append(P)
            if best_res is None:
                best_res = rems
    for P in attempts:
        res = residual(P)
        if all(r.is_zero for r in res):
            return P, res
    if best_res is None:
        best_res = g_exp
    return None, best_res


def _intpoly(p: Polynomial) -> Polynomial:
    return p.integer_content()[1] if not p.is_zero else p


def _check_rank(mat: SymMatrix, need: int, what: str):
    if mat.rows < need or mat.cols < need:
        raise DegenerateDecompositionError(f"{what} is {mat.rows}x{mat.cols}, rank {need} impossible")
    if mat.nonzero_maximal_minor() is None:
        raise DegenerateDecompositionError(f"{what} does not have generic rank {need}")


def decompose(ts: ThreeScaleSystem, mu1: Sequence, mu2: Sequence | None = None) -> Decomposition:
    """Solve for P1 (and P2) given the manifold functions, and verify exactly."""
    mu1 = tuple(RationalExpr.coerce(m) for m in mu1)
    if not mu1:
        raise PreconditionError("at least one mu1 function is required (n1 >= 1)")
    states = ts.states
    aux = ts.aux
    names = set(states) | set(aux)
    expand = ts.field.expand
    P1rows, res = _solve_factor(list(ts.g00), mu1, names, expand)
    if P1rows is None:
        raise DecompositionError("g00 is not expressible as P1*mu1", residual=[str(r) for r in res])
    P1 = SymMatrix.from_rows(P1rows)
    _check_rank(P1, len(mu1), "P1")
    dmu1 = jacobian(mu1, states, aux)
    _check_rank(dmu1, len(mu1), "Dmu1")
    if mu2 is None:
        return Decomposition(tuple(states), dict(aux), P1, mu1)
    mu2 = tuple(RationalExpr.coerce(m) for m in mu2)
    if not mu2:
        raise PreconditionError("mu2 is empty")
    both = mu1 + mu2
    rows, res = _solve_factor(list(ts.g10), both, names, expand)
    if rows is None:
        raise DecompositionError("g10 is not expressible over (mu1, mu2)", residual=[str(r) for r in res])
    n1 = len(mu1)
    R = SymMatrix.from_rows([r[:n1] for r in rows])
    P2 = SymMatrix.from_rows([r[n1:] for r in rows])
    d = Decomposition(tuple(states), dict(aux), P1, mu1, P2, mu2, None if R.is_zero else R)
    _check_rank(d.P(), n1 + len(mu2), "(P1|P2) at eps1=0")
    _check_rank(d.dmu(), n1 + len(mu2), "(Dmu1; Dmu2)")
    return d


def residual(ts: ThreeScaleSystem, d: Decomposition) -> list:
    """g00 - P1 μ1 (expanded); zero for an accepted decomposition."""
    prod = d.P1.apply(d.mu1)
    return [ts.field.expand(g - p) for g, p in zip(ts.g00, prod)]


def A1(d: Decomposition) -> SymMatrix:
    return d.dmu1() @ d.P1


def A2(d: Decomposition) -> SymMatrix:
    """(Dμ1; Dμ2)(P1 + ε1 R, ε1 P2) with ε1 symbolic."""
    if not d.has_second_layer:
        raise PreconditionError("decomposition has no second layer")
    P1 = d.P1 if d.R is None else d.P1 + d.R.scale(_E1)
    return d.dmu() @ P1.hstack(d.P2.scale(_E1))


# -- heuristics ------------------------------------------------------------------
def _state_gcd(exprs, names) -> RationalExpr | None:
    g = None
    for e in exprs:
        if e.is_zero:
            continue
        num = _intpoly(e.num)
        g = num if g is None else cofactors(g, num)[0]
    if g is None:
        return None
    # strip factors free of states: divide out the gcd of state-monomial coefficients
    coeffs = list(g.coefficients_in(names).values())
    content = coeffs[0]
    for c in coeffs[1:]:
        content = cofactors(_intpoly(content), _intpoly(c))[0]
    stripped = RationalExpr(g) / RationalExpr(content)
    if not stripped.variables() & set(names):
        return None
    return stripped


def _network_fluxes(ts: ThreeScaleSystem, net) -> list:
    from .network import state_name

    pi = ts.surface.at_zero()
    fluxes = []
    for r in net.reactions:
        terms = []
        for lhs, _, k in r.directed():
            kv = pi.get(k, RationalExpr.symbol(k))
            if kv.is_zero:
                continue
            mono = kv
            for s, m in lhs:
                mono = mono * RationalExpr.symbol(state_name(s)) ** m
            terms.append(mono)
        if not terms:
            continue
        flux = terms[0] - terms[1] if len(terms) == 2 else terms[0]
        fluxes.append(flux)
    return fluxes


def suggest_mu(ts: ThreeScaleSystem, net=None) -> list:
    """Candidate μ1 vectors for g00, each verified by :func:`decompose`."""
    names = set(ts.states) | set(ts.aux)
    if all(ts.field.expand(g).is_zero for g in ts.g00):
        return []
    cands: list = []
    for exprs in (list(ts.g00), [ts.field.expand(g) for g in ts.g00]):
        f = _state_gcd(exprs, names)
        if f is not None:
            cands.append((f,))
            break
    if net is not None:
        fluxes = _network_fluxes(ts, net)
        distinct: list = []
        for fl in fluxes:
            if not fl.variables() & names:
                continue
            if any(not (fl / o).variables() & names for o in distinct):
                continue
            distinct.append(fl)
        for fl in distinct:
            stripped = _state_gcd([fl], names) or fl
            cands.append((stripped,))
        if len(distinct) > 1:
            cands.append(tuple(distinct))
    seen = []
    out = []
    for c in cands:
        key = tuple(_normal(m) for m in c)
        if key in seen:
            continue
        seen.append(key)
        try:
            decompose(ts, c)
        except (DecompositionError, DegenerateDecompositionError, PreconditionError):
            continue
        out.append(list(c))
    out.sort(key=lambda c: (max(m.num.total_degree() for m in c), len(c)))
    return out


def _normal(e: RationalExpr) -> RationalExpr:
    """Representative up to a nonzero constant factor."""
    lc = e.num.leading_coefficient()
    return e / RationalExpr.const(lc)


# -- files -----------------------------------------------------------------------
def parse_mu(text: str) -> tuple:
    """Read ``mu1: expr; expr`` and optional ``mu2: ...`` lines."""
    mu1 = mu2 = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = re.match(r"^\s*(mu1|mu2)\s*:(.*)$", line)
        if not m:
            raise ParseError("decomposition lines look like  mu1: expr; expr", lineno, 1)
        exprs = []
        offset = m.start(2)
        for part in m.group(2).split(";"):
            if part.strip():
                exprs.append(parse_expr(part, lineno, offset))
            offset += len(part) + 1
        if m.group(1) == "mu1":
            if mu1 is not None:
                raise ParseError("mu1 given twice", lineno, 1)
            mu1 = tuple(exprs)
        else:
            if mu2 is not None:
                raise ParseError("mu2 given twice", lineno, 1)
            mu2 = tuple(exprs)
    if mu1 is None:
        raise ParseError("decomposition file needs a mu1 line", None, None)
    return mu1, mu2


def load_mu(path) -> tuple:
    with open(path, encoding="utf-8") as fh:
        return parse_mu(fh.read())


__all__ = ["A1", "A2", "Decomposition", "decompose", "load_mu", "parse_mu", "residual", "suggest_mu"]
