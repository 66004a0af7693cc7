"""Symbols and polynomial/rational vector fields."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidExpressionError
from .symcore import RESERVED, RationalExpr, SymMatrix, jacobian

KINDS = ("state", "parameter", "epsilon", "auxiliary")


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")


@dataclass(frozen=True)
class VectorField:
    """ẋ = rhs(x) over named states.

    ``aux`` maps auxiliary atoms to their expansions in states, parameters
    and other atoms; right-hand sides may be stated over the atoms.
    ``nonneg`` lists atoms known to be nonnegative on the region of interest.
    """

    states: tuple
    rhs: tuple
    params: tuple = ()
    aux: Mapping[str, RationalExpr] = field(default_factory=dict)
    nonneg: frozenset = frozenset()
    first_integrals: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "rhs", tuple(RationalExpr.coerce(e) for e in self.rhs))
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "aux", dict(self.aux))
        object.__setattr__(self, "nonneg", frozenset(self.nonneg))
        if len(self.states) != len(self.rhs):
            raise InvalidExpressionError(f"{len(self.states)} states but {len(self.rhs)} right-hand sides")
        names = list(self.states) + list(self.params) + list(self.aux)
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise InvalidExpressionError(f"symbol names used twice: {', '.join(sorted(dup))}")
        bad = set(self.states) & RESERVED
        if bad:
            raise InvalidExpressionError(f"reserved names used as states: {', '.join(sorted(bad))}")

    @property
    def dim(self) -> int:
        return len(self.states)

    def symbols(self) -> list:
        out = [Symbol(s, "state") for s in self.states]
        out += [Symbol(p, "epsilon" if p in RESERVED else "parameter") for p in self.params]
        out += [Symbol(a, "auxiliary") for a in self.aux]
        return out

    def expand(self, e: RationalExpr) -> RationalExpr:
        return e.expand_aux(self.aux) if self.aux else e

    def expanded_rhs(self) -> list:
        return [self.expand(e) for e in self.rhs]

    def jacobian(self, exprs: Sequence | None = None) -> SymMatrix:
        return jacobian(self.rhs if exprs is None else exprs, self.states, self.aux)

    def with_rhs(self, rhs: Sequence) -> "VectorField":
        return replace(self, rhs=tuple(rhs))

    def subs(self, bindings: Mapping[str, object]) -> "VectorField":
        """Substitute symbols in right-hand sides and atom expansions."""
        rhs = [e.subs(bindings) for e in self.rhs]
        aux = {k: v.subs(bindings) for k, v in self.aux.items()}
        used = set()
        for e in list(rhs) + list(aux.values()):
            used |= e.variables()
        params = [p for p in self.params if p not in bindings]
        params += sorted(v for v in used if v not in params and v not in self.states and v not in aux)
        return replace(self, rhs=tuple(rhs), aux=aux, params=tuple(params))

    def point(self, x, values: Mapping[str, object]) -> dict:
        """Full numeric assignment: states, parameters, then atoms from expansions."""
        pt = dict(values)
        pt.update({s: v for s, v in zip(self.states, x)})
        for a, ex in self.aux.items():
            if a not in pt:
                pt[a] = self.expand(ex).evaluate(pt)
        return pt

    def evaluate(self, x, values: Mapping[str, object]) -> np.ndarray:
        pt = self.point([float(v) for v in x], {k: float(v) for k, v in values.items()})
        return np.array([float(e.evaluate(pt)) for e in self.rhs])
