"""Parameter surfaces and the exact three-timescale split of a field."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import MalformedSurfaceError, ParseError, StrictRemainderError
from .field import VectorField
from .symcore import RationalExpr, parse_expr

EPS1 = "eps1"
EPS2 = "eps2"
EPS = (EPS1, EPS2)
_E1 = RationalExpr.symbol(EPS1)
_E2 = RationalExpr.symbol(EPS2)


@dataclass(frozen=True)
class ScalingSurface:
    """γ(ε1, ε2) = pi_hat + ε1 (rho1(ε1) + ε2 rho2(ε1, ε2)), per parameter."""

    pi_hat: Mapping[str, RationalExpr]
    rho1: Mapping[str, RationalExpr] = field(default_factory=dict)
    rho2: Mapping[str, RationalExpr] = field(default_factory=dict)

    def __post_init__(self):
        for p, v in self.pi_hat.items():
            if v.depends_on(EPS):
                raise MalformedSurfaceError(f"base value of {p} depends on eps")
        for p, v in self.rho1.items():
            if v.depends_on([EPS2]):
                raise MalformedSurfaceError(f"first-order direction of {p} depends on eps2")

    def gamma(self, p: str) -> RationalExpr:
        base = self.pi_hat.get(p, RationalExpr.symbol(p))
        return base + _E1 * (self.rho1.get(p, RationalExpr()) + _E2 * self.rho2.get(p, RationalExpr()))

    @property
    def parameters(self) -> list:
        return list(dict.fromkeys(list(self.pi_hat) + list(self.rho1) + list(self.rho2)))

    def bindings(self) -> dict:
        return {p: self.gamma(p) for p in self.parameters}

    def at_eps2_zero(self) -> dict:
        return {p: self.gamma(p).subs({EPS2: 0}) for p in self.parameters}

    def at_zero(self) -> dict:
        return {p: self.gamma(p).subs({EPS1: 0, EPS2: 0}) for p in self.parameters}

    def new_symbols(self) -> list:
        out = set()
        for p in self.parameters:
            out |= self.gamma(p).variables()
        return sorted(out - set(EPS))

    @classmethod
    def from_gamma(cls, gamma: Mapping[str, RationalExpr]) -> "ScalingSurface":
        """Split declared curves ``p = γ_p(ε1, ε2)`` into base and directions."""
        pi_hat, rho1, rho2 = {}, {}, {}
        for p, g in gamma.items():
            g0 = g.subs({EPS1: 0, EPS2: 0})
            g1 = g.subs({EPS2: 0})
            r1 = (g1 - g0) / _E1
            r2 = (g - g1) / (_E1 * _E2)
            for name, r in (("eps1", r1), ("eps1*eps2", r2)):
                if r.den.variables() & set(EPS):
                    raise MalformedSurfaceError(
                        f"curve for {p} is not of the form base + eps1*(rho1 + eps2*rho2); "
                        f"the {name} part does not divide out"
                    )
            pi_hat[p] = g0
            if not r1.is_zero:
                rho1[p] = r1
            if not r2.is_zero:
                rho2[p] = r2
        return cls(pi_hat, rho1, rho2)


def parse_scaling(text: str) -> ScalingSurface:
    """Read ``<param> = <expression>`` lines; ``#`` starts a comment."""
    gamma: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = re.match(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=(.*)$", line)
        if not m:
            raise ParseError("scaling lines look like  k2 = eps1*eps2*k2s", lineno, 1)
        p = m.group(1)
        if p in EPS:
            raise ParseError(f"{p} cannot be rescaled", lineno, 1)
        if p in gamma:
            raise ParseError(f"parameter {p} scaled twice", lineno, 1)
        gamma[p] = parse_expr(m.group(2), lineno, m.start(2))
    return ScalingSurface.from_gamma(gamma)


def load_scaling(path) -> ScalingSurface:
    with open(path, encoding="utf-8") as fh:
        return parse_scaling(fh.read())


@dataclass(frozen=True)
class ThreeScaleSystem:
    """ẋ = g00 + ε1 (g10 + ε2 g11) + remainder, exactly."""

    field: VectorField
    g00: tuple
    g10: tuple
    g11: tuple
    remainder: tuple
    surface: ScalingSurface

    @property
    def states(self) -> tuple:
        return self.field.states

    @property
    def aux(self) -> dict:
        return self.field.aux

    @property
    def dim(self) -> int:
        return self.field.dim

    def full_rhs(self) -> list:
        return [a + _E1 * (b + _E2 * c) + r for a, b, c, r in zip(self.g00, self.g10, self.g11, self.remainder)]

    @property
    def has_remainder(self) -> bool:
        return any(not r.is_zero for r in self.remainder)


def _expand_touched_atoms(vf: VectorField, params) -> VectorField:
    """Replace atoms whose expansion involves rescaled parameters by that expansion."""
    touched = {a for a, ex in vf.aux.items() if vf.expand(ex).depends_on(params)}
    if not touched:
        return vf
    sub = {a: vf.expand(vf.aux[a]) for a in touched}
    rhs = [e.subs(sub) for e in vf.rhs]
    aux = {a: ex.subs(sub) for a, ex in vf.aux.items() if a not in touched}
    return VectorField(vf.states, rhs, vf.params, aux, vf.nonneg - touched)


def apply_surface(vf: VectorField, surf: ScalingSurface, strict: bool = False) -> ThreeScaleSystem:
    unknown = [p for p in surf.parameters if p not in vf.params]
    if unknown:
        raise MalformedSurfaceError(f"scaling names parameters absent from the model: {', '.join(unknown)}")
    vf = _expand_touched_atoms(vf, surf.parameters)
    full = surf.bindings()
    h1 = surf.at_eps2_zero()
    h0 = surf.at_zero()
    g00, g10, g11, rem = [], [], [], []
    for e in vf.rhs:
        a = e.subs(h0)
        b = e.subs(h1)
        c = e.subs(full)
        for part in (a, b, c):
            if part.den.variables() & set(EPS):
                raise MalformedSurfaceError(f"denominator of {part} depends on eps after substitution")
        d1 = (b - a) / _E1
        d2 = (c - b) / (_E1 * _E2)
        for q, what in ((d1, "eps1"), (d2, "eps1*eps2")):
            if q.den.variables() & set(EPS):
                raise MalformedSurfaceError(f"difference is not divisible by {what}")
        lead = d2.subs({EPS1: 0, EPS2: 0})
        g00.append(a)
        g10.append(d1)
        g11.append(lead)
        rem.append(_E1 * _E2 * (d2 - lead))
    params = [p for p in vf.params if p not in surf.parameters]
    for s in surf.new_symbols():
        if s not in params and s not in vf.states:
            params.append(s)
    base = VectorField(vf.states, vf.rhs, tuple(params), vf.aux, vf.nonneg)
    ts = ThreeScaleSystem(base, tuple(g00), tuple(g10), tuple(g11), tuple(rem), surf)
    if strict and ts.has_remainder:
        bad = [str(r) for r in rem if not r.is_zero]
        raise StrictRemainderError(f"nonzero higher-order remainder: {bad[0]}")
    return ts


def assemble(ts: ThreeScaleSystem, eps1, eps2) -> VectorField:
    """Field at fixed (ε1, ε2): the original field evaluated on the surface."""
    e1, e2 = Fraction(eps1), Fraction(eps2)
    if e1 < 0 or e2 < 0:
        raise MalformedSurfaceError("eps values must be nonnegative")
    vals = {EPS1: RationalExpr.const(e1), EPS2: RationalExpr.const(e2)}
    rhs = [e.subs(vals) for e in ts.full_rhs()]
    aux = {a: ex.subs(vals) for a, ex in ts.aux.items()}
    return VectorField(ts.states, rhs, ts.field.params, aux, ts.field.nonneg)


__all__ = [
    "EPS1",
    "EPS2",
    "ScalingSurface",
    "ThreeScaleSystem",
    "apply_surface",
    "assemble",
    "load_scaling",
    "parse_scaling",
]
