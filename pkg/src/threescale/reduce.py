"""Projection matrices and the auxiliary, intermediate and completely reduced systems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .decomp import A1, A2, Decomposition
from .errors import (
    AmbiguousRootError,
    DegenerateDecompositionError,
    NewtonDivergenceError,
    PreconditionError,
    SingularMatrixError,
)
from .scaling import EPS1, EPS2, ThreeScaleSystem
from .stability import projector
from .symcore import ONE, ZERO, RationalExpr, SymMatrix, compile_vector, jacobian
from .symcore._gcd import cofactors

KINDS = ("auxiliary", "intermediate", "complete")
TIMESCALES = {"auxiliary": "eps1_t", "intermediate": "eps1_t", "complete": "eps1eps2_t"}
_AT_ZERO = {EPS1: 0, EPS2: 0}


@dataclass(frozen=True)
class ReducedModel:
    kind: str
    states: tuple
    field: tuple
    manifold: tuple
    timescale: str
    aux: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown reduced model kind {self.kind!r}")
        if TIMESCALES[self.kind] != self.timescale:
            raise ValueError(f"{self.kind} system lives on time scale {TIMESCALES[self.kind]}")

    @property
    def dim(self) -> int:
        return len(self.states)

    def expanded(self) -> list:
        return [e.expand_aux(self.aux) if self.aux else e for e in self.field]

    def subs(self, bindings) -> "ReducedModel":
        return ReducedModel(
            self.kind,
            self.states,
            tuple(e.subs(bindings) for e in self.field),
            tuple(m.subs(bindings) for m in self.manifold),
            self.timescale,
            {a: v.subs(bindings) for a, v in self.aux.items()},
            self.provenance,
        )

    def render(self) -> str:
        tau = {"eps1_t": "eps1*t", "eps1eps2_t": "eps1*eps2*t"}[self.timescale]
        lines = [f"{self.kind} system (time scale {tau})"]
        for m in self.manifold:
            lines.append(f"  on  {m} = 0")
        for a in sorted(self.aux):
            lines.append(f"  where {a} = {self.aux[a]}")
        width = max(len(s) for s in self.states)
        for s, e in zip(self.states, self.field):
            lines.append(f"  d{s:<{width}}/dtau = {e}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "timescale": self.timescale,
            "states": list(self.states),
            "manifold": [str(m) for m in self.manifold],
            "aux": {a: str(self.aux[a]) for a in sorted(self.aux)},
            "rhs": [str(e) for e in self.field],
            "numerator": [str(e.num) for e in self.field],
            "denominator": [str(e.den) for e in self.field],
        }


# -- projections -----------------------------------------------------------------
def _inverse(m: SymMatrix, what: str) -> SymMatrix:
    try:
        return m.inverse()
    except SingularMatrixError:
        raise DegenerateDecompositionError(f"{what} is identically singular") from None


def q1(d: Decomposition) -> SymMatrix:
    """I - P1 A1^-1 Dμ1, with ε-dependence kept symbolic."""
    a1inv = _inverse(A1(d), "A1 = Dmu1*P1")
    return SymMatrix.identity(d.n) - d.P1 @ a1inv @ d.dmu1()


def kernel_basis(dmu: SymMatrix) -> SymMatrix:
    """Columns spanning ker Dμ: rows J of a nonzero maximal minor get -A_J^-1 A_rest, the rest I."""
    m, n = dmu.shape
    minor = dmu.nonzero_maximal_minor()
    if minor is None or len(minor[1]) < m:
        raise DegenerateDecompositionError(f"stacked Dmu ({m}x{n}) has no nonzero {m}x{m} minor")
    J = list(minor[1])
    rest = [j for j in range(n) if j not in J]
    aJ = dmu.submatrix(range(m), J)
    top = -(aJ.inverse() @ dmu.submatrix(range(m), rest))
    rows: list = [None] * n
    for i, j in enumerate(J):
        rows[j] = top.row(i)
    for i, j in enumerate(rest):
        rows[j] = [ONE if k == i else ZERO for k in range(len(rest))]
    return SymMatrix.from_rows(rows)


def q2(d: Decomposition) -> SymMatrix:
    """Projector onto ker(Dμ1; Dμ2) along span(P1 | P2), all at ε1 = ε2 = 0."""
    if not d.has_second_layer:
        raise PreconditionError("Q2 needs a second decomposition layer (mu2)")
    B1 = d.P().subs(_AT_ZERO)
    dmu = d.dmu().subs(_AT_ZERO)
    k = d.n1 + d.n2
    if B1.nonzero_maximal_minor() is None:
        raise DegenerateDecompositionError("(P1 | P2) at eps = 0 does not have full column rank")
    if k == d.n:
        return SymMatrix.zeros(d.n, d.n)
    K = kernel_basis(dmu)
    try:
        return projector(B1, K)
    except SingularMatrixError:
        raise DegenerateDecompositionError("(P1 | P2 | ker Dmu) is singular at eps = 0") from None


def q2_limit(d: Decomposition) -> SymMatrix:
    """Independent route: I - (P1, ε1 P2) A2(ε1)^-1 Dμ at ε2 = 0, then ε1 -> 0."""
    if not d.has_second_layer:
        raise PreconditionError("Q2 needs a second decomposition layer (mu2)")
    eps1 = RationalExpr.symbol(EPS1)
    a2 = A2(d).subs({EPS2: 0})
    P1 = d.P1 if d.R is None else d.P1 + d.R.scale(eps1)
    left = P1.hstack(d.P2.scale(eps1)).subs({EPS2: 0})
    q = SymMatrix.identity(d.n) - left @ _inverse(a2, "A2") @ d.dmu().subs({EPS2: 0})
    for e in q.entries:
        if EPS1 in e.den.subs({EPS1: 0}).variables() or e.den.subs({EPS1: 0}).is_zero:
            raise DegenerateDecompositionError("Q2(eps1) has a pole at eps1 = 0")
    return q.subs({EPS1: 0})


# -- reduced systems ---------------------------------------------------------------
def _prov(ts, d) -> dict:
    return {"decomposition": d, "system": ts}


def auxiliary_system(ts: ThreeScaleSystem, d: Decomposition) -> ReducedModel:
    """Q1 (g10|ε1=0 + ε2 g11) on μ1 = 0, time scale ε1 t."""
    Q = q1(d).subs({EPS1: 0})
    eps2 = RationalExpr.symbol(EPS2)
    forcing = [a.subs({EPS1: 0}) + eps2 * b for a, b in zip(ts.g10, ts.g11)]
    rhs = tuple(Q.apply(forcing))
    manifold = tuple(m.subs({EPS1: 0}) for m in d.mu1)
    return ReducedModel("auxiliary", ts.states, rhs, manifold, "eps1_t", dict(ts.aux), _prov(ts, d))


def intermediate_system(ts: ThreeScaleSystem, d: Decomposition) -> ReducedModel:
    aux = auxiliary_system(ts, d)
    rhs = tuple(e.subs({EPS2: 0}) for e in aux.field)
    manifold = tuple(m.subs({EPS2: 0}) for m in aux.manifold)
    return ReducedModel("intermediate", ts.states, rhs, manifold, "eps1_t", dict(ts.aux), _prov(ts, d))


def complete_system(ts: ThreeScaleSystem, d: Decomposition, q: SymMatrix | None = None) -> ReducedModel:
    """Q2 g11 on μ1 = μ2 = 0 (ε = 0), time scale ε1 ε2 t."""
    Q = q2(d) if q is None else q
    g11 = [g.subs(_AT_ZERO) for g in ts.g11]
    rhs = tuple(Q.apply(g11))
    manifold = tuple(m.subs(_AT_ZERO) for m in d.mu1 + d.mu2)
    return ReducedModel("complete", ts.states, rhs, manifold, "eps1eps2_t", dict(ts.aux), _prov(ts, d))


def reduce_all(ts: ThreeScaleSystem, d: Decomposition) -> dict:
    out = {"auxiliary": auxiliary_system(ts, d)}
    out["intermediate"] = intermediate_system(ts, d)
    if d.has_second_layer:
        out["complete"] = complete_system(ts, d)
    return out


# -- first integrals and initial values -------------------------------------------------
def linear_first_integrals(d: Decomposition, level: str = "M1") -> list:
    """State-independent w with w·P = 0, as coefficient lists over the states.

    Level M1 uses P1, level M2 uses (P1 | P2); everything at ε = 0.
    """
    if level not in ("M1", "M2"):
        raise ValueError("level must be M1 or M2")
    if level == "M2" and not d.has_second_layer:
        raise PreconditionError("M2 needs a second-layer decomposition (mu2)")
    P = (d.P1 if level == "M1" else d.P()).subs(_AT_ZERO)
    P = P.map(lambda e: e.expand_aux(d.aux) if d.aux else e)
    names = set(d.states)
    eqs = []
    for j in range(P.cols):
        col = P.col(j)
        den = _lcm([e.den for e in col])
        cleared = [e * den for e in col]
        monos: dict = {}
        for i, e in enumerate(cleared):
            for m, c in e.num.coefficients_in(names).items():
                monos.setdefault(m, [ZERO] * d.n)[i] = RationalExpr(c) / RationalExpr(e.den)
        eqs.extend(monos[m] for m in sorted(monos, key=str))
    if not eqs:
        basis = [SymMatrix.column([ONE if k == i else ZERO for k in range(d.n)]) for i in range(d.n)]
    else:
        basis = SymMatrix.from_rows(eqs).nullspace()
    out = []
    for b in basis:
        w = b.col(0)
        # integer-friendly scaling: clear denominators of the pivot entry
        lead = next(x for x in w if not x.is_zero)
        if lead.is_constant:
            w = [x / lead for x in w]
        out.append(w)
    return out


def _lcm(dens) -> RationalExpr:
    out = dens[0].integer_content()[1]
    for p in dens[1:]:
        _, _, rest = cofactors(out, p.integer_content()[1])
        out = out * rest
    return RationalExpr(out)


@dataclass
class ProjectionResult:
    point: np.ndarray
    candidates: list
    selected: int
    rule: str
    residual: float

    def to_json(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "candidates": [[float(v) for v in c] for c in self.candidates],
            "selected": self.selected,
            "rule": self.rule,
            "residual": self.residual,
        }


def _newton(F, J, x0, tol=1e-12, max_iter=50):
    x = np.array(x0, dtype=float)
    fx = np.asarray(F(x), dtype=float)
    nf = np.max(np.abs(fx)) if fx.size else 0.0
    for _ in range(max_iter):
        if nf <= tol:
            return x, nf
        try:
            step = np.linalg.lstsq(np.asarray(J(x), dtype=float), -fx, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None, nf
        t = 1.0
        while t > 1e-10:
            xn = x + t * step
            try:
                fn = np.asarray(F(xn), dtype=float)
            except (ZeroDivisionError, OverflowError, ValueError):
                fn = None
            if fn is not None and np.all(np.isfinite(fn)):
                nn = np.max(np.abs(fn))
                if nn < nf or nn <= tol:
                    break
            t *= 0.5
        else:
            return None, nf
        x, fx, nf = xn, fn, nn
    return (x, nf) if nf <= tol else (None, nf)


def project_initial_value(
    d: Decomposition,
    first_integrals: Sequence,
    y0: Sequence[float],
    level: str,
    values: Mapping[str, float],
    tol: float = 1e-12,
    max_iter: int = 50,
    seed: int = 0,
) -> ProjectionResult:
    """Intersect the critical manifold with the first-integral level sets through y0.

    Several Newton starts are made; among the roots found, those with
    nonnegative states and nonnegative atoms are preferred, then the one
    closest to y0.
    """
    if level not in ("M1", "M2"):
        raise ValueError("level must be M1 or M2")
    if level == "M2" and not d.has_second_layer:
        raise PreconditionError("M2 needs a second-layer decomposition (mu2)")
    mus = list(d.mu1) if level == "M1" else list(d.mu1 + d.mu2)
    need = d.n - len(mus)
    if len(first_integrals) < need:
        raise PreconditionError(f"{need} independent first integrals needed, {len(first_integrals)} given")
    y0 = np.asarray(y0, dtype=float)
    fixed = {EPS1: 0.0, EPS2: 0.0}
    fixed.update({k: float(v) for k, v in values.items()})
    states = list(d.states)
    W = np.array([[float(c.evaluate(fixed)) for c in w] for w in first_integrals[:need]]).reshape(need, d.n)
    levels = W @ y0
    mu_f = compile_vector(mus, states, d.aux, fixed)
    dm = jacobian(mus, states, d.aux)
    dm_f = compile_vector(dm.entries, states, d.aux, fixed)
    atom_names = [a for a in d.aux]
    atom_f = compile_vector([RationalExpr.symbol(a) for a in atom_names], states, d.aux, fixed) if atom_names else None

    def F(x):
        return np.concatenate([mu_f(x), W @ x - levels])

    def Jx(x):
        return np.vstack([np.array(dm_f(x)).reshape(len(mus), d.n), W])

    rng = np.random.default_rng(seed)
    starts = [y0.copy()]
    for i in range(d.n):
        z = y0.copy()
        z[i] = 0.0
        starts.append(z)
    starts += [0.5 * y0, 2.0 * y0]
    scale = max(1.0, float(np.max(np.abs(y0))))
    starts += [y0 + scale * rng.uniform(-0.5, 0.5, d.n) for _ in range(8)]
    roots: list = []
    best_res = np.inf
    for s0 in starts:
        x, res = _newton(F, Jx, s0, tol, max_iter)
        best_res = min(best_res, res)
        if x is None:
            continue
        if not any(np.max(np.abs(x - r)) <= 1e-9 * (1 + np.max(np.abs(r))) for r in roots):
            roots.append(x)
    if not roots:
        raise NewtonDivergenceError(f"Newton did not converge from any start (best residual {best_res:.3g})")

    def admissible(x):
        if np.any(x < -1e-12 * scale):
            return False
        if atom_f is not None and any(a < -1e-12 * scale for a, n in zip(atom_f(x), atom_names) if n in _nonneg(d)):
            return False
        return True

    pool = [i for i, r in enumerate(roots) if admissible(r)]
    rule = "nonnegative, nearest to y0"
    if not pool:
        pool = list(range(len(roots)))
        rule = "nearest to y0 (no nonnegative root found)"
    dist = [float(np.linalg.norm(roots[i] - y0)) for i in pool]
    order = sorted(range(len(pool)), key=lambda k: dist[k])
    if len(order) > 1 and abs(dist[order[1]] - dist[order[0]]) <= 1e-12 * (1 + dist[order[0]]):
        raise AmbiguousRootError(
            "two admissible roots are equally close to y0",
            candidates=[[float(v) for v in roots[pool[k]]] for k in order[:2]],
        )
    sel = pool[order[0]]
    x = roots[sel]
    return ProjectionResult(x, roots, sel, rule, float(np.max(np.abs(F(x)))))


def _nonneg(d: Decomposition) -> set:
    # atoms introduced for conserved quantities are concentrations
    return set(d.aux)


__all__ = [
    "ProjectionResult",
    "ReducedModel",
    "auxiliary_system",
    "complete_system",
    "intermediate_system",
    "kernel_basis",
    "linear_first_integrals",
    "project_initial_value",
    "q1",
    "q2",
    "q2_limit",
    "reduce_all",
]
