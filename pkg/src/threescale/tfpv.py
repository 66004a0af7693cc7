"""Tikhonov-Fenichel parameter-value checks and the nested-TFPV boundary scan."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .decomp import A1, Decomposition
from .errors import NotSignDefiniteError, PreconditionError
from .field import VectorField
from .scaling import EPS1, EPS2
from .stability import DEFAULT_MARGIN
from .symcore import ONE, ZERO, Polynomial, RationalExpr, SymMatrix, compile_vector, jacobian

_AT_ZERO = {EPS1: 0, EPS2: 0}


# -- characteristic polynomial -------------------------------------------------------
def char_poly(J: SymMatrix) -> list:
    """Coefficients of det(τI - J), highest degree first (Berkowitz, division free)."""
    if J.rows != J.cols:
        raise PreconditionError("characteristic polynomial of a non-square matrix")
    n = J.rows
    p = [ONE]
    for k in range(n):
        a = J[k, k]
        t = [ONE, -a]
        if k:
            M = J.submatrix(range(k), range(k))
            R = J.submatrix([k], range(k))
            v = J.submatrix(range(k), [k])
            for _ in range(k):
                t.append(-(R @ v)[0, 0])
                v = M @ v
        p = [sum((t[i - j] * p[j] for j in range(len(p)) if 0 <= i - j < len(t)), ZERO) for i in range(k + 2)]
    return p


def char_coeffs(J: SymMatrix) -> list:
    """σ0, ..., σ_{n-1} with det(τI - J) = τ^n + σ_{n-1} τ^{n-1} + ... + σ0."""
    return list(reversed(char_poly(J)[1:]))


# -- sign tests over nonnegative symbols ------------------------------------------
def _signs(p: Polynomial) -> set:
    return {1 if c > 0 else -1 for _, c in p.items()}


def definite_sign(e: RationalExpr) -> int:
    """+1/-1 if e has that sign wherever all its symbols are positive, 0 if unknown."""
    if e.is_zero:
        return 0
    sn, sd = _signs(e.num), _signs(e.den)
    if len(sn) == 1 and len(sd) == 1:
        return next(iter(sn)) * next(iter(sd))
    return 0


# -- TFPV check ---------------------------------------------------------------------
@dataclass
class TFPVReport:
    pi_hat: dict
    x0: dict
    s: int
    sigma: list
    sigma_zero: list
    hurwitz: list
    hurwitz_verdict: str
    first_integrals: list
    variety: list
    variety_dimension: int | None
    verdict: str
    notes: list = field(default_factory=list)

    @property
    def first_integral_count(self) -> int:
        return len(self.first_integrals)

    def to_json(self) -> dict:
        return {
            "pi_hat": {k: str(v) for k, v in self.pi_hat.items()},
            "x0": {k: str(v) for k, v in self.x0.items()},
            "s": self.s,
            "sigma": [str(v) for v in self.sigma],
            "sigma_zero": self.sigma_zero,
            "hurwitz": [str(v) for v in self.hurwitz],
            "hurwitz_verdict": self.hurwitz_verdict,
            "first_integrals": [[str(c) for c in w] for w in self.first_integrals],
            "variety": [str(v) for v in self.variety],
            "variety_dimension": self.variety_dimension,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def field_first_integrals(vf: VectorField) -> list:
    """Constant w with w·f(x) = 0 identically (f expanded over the states)."""
    rhs = vf.expanded_rhs()
    names = set(vf.states)
    if any(e.den.variables() & names for e in rhs):
        return []
    by_mono: dict = {}
    for i, e in enumerate(rhs):
        for m, c in e.num.coefficients_in(names).items():
            by_mono.setdefault(m, [ZERO] * vf.dim)[i] = RationalExpr(c) / RationalExpr(e.den)
    if not by_mono:
        return [[ONE if k == i else ZERO for k in range(vf.dim)] for i in range(vf.dim)]
    M = SymMatrix.from_rows([by_mono[m] for m in sorted(by_mono, key=str)])
    return [b.col(0) for b in M.nullspace()]


def _hurwitz_symbolic(coeffs: list) -> list:
    """Hurwitz determinants of a monic polynomial with symbolic coefficients (highest first)."""
    m = len(coeffs) - 1

    def c(k):
        return coeffs[k] if 0 <= k <= m else ZERO

    H = SymMatrix(m, m, [c(2 * (j + 1) - (i + 1)) for i in range(m) for j in range(m)])
    return [H.submatrix(range(k), range(k)).det() for k in range(1, m + 1)]


def check_tfpv(
    vf: VectorField,
    pi_hat: Mapping[str, object],
    x0: Mapping[str, object],
    s: int,
    sample: Mapping[str, float] | None = None,
) -> TFPVReport:
    """Test the restricted TFPV conditions at a stationary point x0 of vf at π̂.

    Sign questions for symbolic quantities are settled by sign-definiteness
    over nonnegative symbols, else by evaluation at ``sample``.
    """
    n = vf.dim
    if not 0 < s < n:
        raise PreconditionError(f"need 0 < s < n = {n}, got s = {s}")
    pi = {k: RationalExpr.coerce(v) for k, v in pi_hat.items()}
    at = vf.subs(pi)
    xb = {k: RationalExpr.coerce(v) for k, v in x0.items()}
    missing = [st for st in vf.states if st not in xb]
    if missing:
        raise PreconditionError(f"x0 lacks values for {', '.join(missing)}")
    rhs = [e.subs(xb) for e in at.expanded_rhs()]
    bad = [str(e) for e in rhs if not e.is_zero]
    if bad:
        raise PreconditionError(f"x0 is not stationary at pi_hat: f(x0) = {bad}")
    J = at.jacobian().map(lambda e: at.expand(e).subs(xb))
    sigma = char_coeffs(J)
    sigma_zero = [j for j in range(n) if sigma[j].is_zero]
    notes = []
    ok_sigma = all(j in sigma_zero for j in range(s))
    reduced = [ONE] + [sigma[j] for j in range(n - 1, s - 1, -1)]
    dets = _hurwitz_symbolic(reduced)
    verdicts = []
    for dv in dets:
        sg = definite_sign(dv)
        if sg == 0 and dv.is_constant:
            sg = 1 if dv.constant_value() > 0 else -1 if dv.constant_value() < 0 else 0
        if sg == 0 and sample is not None:
            val = float(dv.evaluate({k: float(v) for k, v in sample.items()}))
            sg = 1 if val > 0 else -1 if val < 0 else 0
            notes.append("Hurwitz sign taken at the sample point")
        verdicts.append(sg)
    hv = "stable" if all(v > 0 for v in verdicts) else ("undetermined" if 0 in verdicts and all(v >= 0 for v in verdicts) else "unstable")
    fis = field_first_integrals(at)
    vdim = n - J.rank()
    if ok_sigma and hv == "stable":
        if len(fis) >= s:
            verdict = "pass"
        else:
            verdict = "unverified"
            notes.append(f"{len(fis)} linear first integrals found, {s} needed; analytic ones not checked")
    else:
        verdict = "fail"
    return TFPVReport(pi, xb, s, sigma, sigma_zero, dets, hv, fis, list(at.rhs), vdim, verdict, notes)


# -- nested scan ---------------------------------------------------------------------
def _mono_symbols(m) -> frozenset:
    return frozenset(n for n, _ in m)


def minimal_hitting_sets(sets: Sequence[frozenset]) -> list:
    """All inclusion-minimal sets meeting every member of ``sets``."""
    sets = [s for s in sets]
    if not sets:
        return [frozenset()]
    if any(not s for s in sets):
        return []
    universe = sorted(set().union(*sets))
    found: list = []
    for k in range(1, len(universe) + 1):
        for combo in combinations(universe, k):
            c = frozenset(combo)
            if any(f <= c for f in found):
                continue
            if all(c & s for s in sets):
                found.append(c)
    return found


def _order(names, params) -> tuple:
    """Sort key for condition sets: size, then names."""
    return (len(names), sorted(names))


@dataclass
class Component:
    zeros: frozenset
    equations: list
    dimension: int | None
    dimensions_seen: list
    induced: list  # parameters forced to zero beyond the case conditions
    parameter_relations: bool  # stationary only under extra parameter relations
    attracting: bool | None
    point: dict | None = None

    def to_json(self) -> dict:
        return {
            "zeros": sorted(self.zeros),
            "equations": [str(e) for e in self.equations],
            "dimension": self.dimension,
            "induced_parameter_zeros": sorted(self.induced),
            "parameter_relations": self.parameter_relations,
            "attracting": self.attracting,
        }


@dataclass
class Branch:
    conditions: frozenset
    level1: frozenset
    classification: str
    components: list = field(default_factory=list)
    subsumed_by: frozenset | None = None

    def to_json(self) -> dict:
        return {
            "conditions": sorted(self.conditions),
            "classification": self.classification,
            "subsumed_by": sorted(self.subsumed_by) if self.subsumed_by is not None else None,
            "components": [c.to_json() for c in self.components],
        }


@dataclass
class CaseTree:
    determinant: RationalExpr
    root_condition: RationalExpr
    level1: list
    branches: list
    target_dimension: int
    params: tuple
    notes: list = field(default_factory=list)

    def cases(self, level1=None) -> list:
        return [b.conditions for b in self.branches if level1 is None or b.level1 == frozenset(level1)]

    def parameter_roots(self) -> list:
        """Inclusion-minimal parameter conditions over all stationary components."""
        roots = set()
        for b in self.branches:
            if b.classification == "subsumed":
                continue
            for c in b.components:
                roots.add(frozenset(z for z in c.zeros if z in self.params))
        roots = sorted(roots, key=lambda r: (len(r), sorted(r)))
        out: list = []
        for r in roots:
            if r and not any(o <= r for o in out):
                out.append(r)
        return out

    def render(self) -> str:
        lines = [f"det(Dmu*P) = {self.determinant}", f"necessary condition: {self.root_condition} = 0"]
        for l1 in self.level1:
            lines.append(f"  case {' = '.join(sorted(l1)) or '(none)'}{' = 0' if l1 else ''}")
            for b in self.branches:
                if b.level1 != l1:
                    continue
                extra = sorted(b.conditions - l1)
                tag = b.classification
                if b.subsumed_by is not None:
                    tag += f" by {{{', '.join(sorted(b.subsumed_by))}}}"
                lines.append(f"    {', '.join(extra) or '-'} = 0: {tag}")
                for c in b.components:
                    eqs = "; ".join(str(e) for e in c.equations) or "-"
                    rel = " (needs parameter relations)" if c.parameter_relations else ""
                    lines.append(f"      zeros {{{', '.join(sorted(c.zeros))}}}, dim {c.dimension}{rel}: {eqs}")
        for n in self.notes:
            lines.append(f"note: {n}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "determinant": str(self.determinant),
            "root_condition": str(self.root_condition),
            "target_dimension": self.target_dimension,
            "level1": [sorted(l1) for l1 in self.level1],
            "branches": [b.to_json() for b in self.branches],
            "parameter_roots": [sorted(r) for r in self.parameter_roots()],
            "notes": self.notes,
        }


class _Scanner:
    def __init__(self, d: Decomposition, nonneg, seed: int, margin: float):
        self.states = tuple(d.states)
        self.aux = {a: e.subs(_AT_ZERO) for a, e in d.aux.items()}
        self.field = [e.subs(_AT_ZERO) for e in d.P1.apply(d.mu1)]
        syms = set()
        for e in self.field + list(self.aux.values()):
            syms |= e.variables()
        self.params = tuple(sorted(syms - set(self.states) - set(self.aux)))
        self.nonneg = set(self.states) | set(self.params) | (set(self.aux) if nonneg is None else set(nonneg))
        self.seed = seed
        self.margin = margin

    # zero propagation through stationarity
    def _zero_sub(self, Z) -> dict:
        return {z: 0 for z in Z}

    def propagate(self, Z: frozenset) -> list:
        """Stationary components reachable from the zero set Z, as (zeros, equations)."""
        out: list = []
        seen: set = set()
        self._walk(frozenset(Z), out, seen)
        out.sort(key=lambda c: (len(c[0]), sorted(c[0])))
        minimal: list = []
        for z, eqs in out:
            if not any(m <= z for m, _ in minimal):
                minimal.append((z, eqs))
        return minimal

    def _equations(self, Z):
        sub = self._zero_sub(Z)
        eqs = [e.subs(sub) for e in self.field]
        for a in sorted(Z & set(self.aux)):
            eqs.append(self._expand(self.aux[a]).subs(sub))
        # atoms whose expansion vanishes are zero too
        forced = {a for a, ex in self.aux.items() if a not in Z and self._expand(ex).subs(sub).is_zero}
        return eqs, forced

    def _expand(self, e):
        return e.expand_aux(self.aux)

    def _walk(self, Z: frozenset, out: list, seen: set):
        if Z in seen:
            return
        seen.add(Z)
        eqs, forced = self._equations(Z)
        if forced:
            return self._walk(Z | forced, out, seen)
        kept = []
        choice = None
        for e in eqs:
            if e.is_zero:
                continue
            p = e.num
            syms_ok = all(v in self.nonneg for v in p.variables())
            if syms_ok and len(_signs(p)) == 1:
                monos = [_mono_symbols(m) for m, _ in p.items()]
                if any(not m for m in monos):
                    return  # a nonzero constant cannot vanish
                singles = {next(iter(m)) for m in monos if len(m) == 1}
                if singles:
                    return self._walk(Z | singles, out, seen)
                if choice is None:
                    choice = min(monos, key=lambda m: (len(m), sorted(m)))
                continue
            kept.append(e)
        if choice is not None:
            # states and atoms first so parameter-free components come early
            for sym in sorted(choice, key=lambda v: (v in self.params, v)):
                self._walk(Z | {sym}, out, seen)
            return
        uniq = []
        for e in kept:
            if not any((e - u).is_zero or (e + u).is_zero for u in uniq):
                uniq.append(e)
        out.append((Z, uniq))

    # numeric generic dimension
    def component(self, Z: frozenset, eqs: list, case: frozenset) -> Component:
        states = list(self.states)
        free_params = [p for p in self.params if p not in Z]
        sub = self._zero_sub(Z)
        aux_z = {a: e.subs(sub) for a, e in self.aux.items() if a not in Z}
        defining = [RationalExpr.symbol(s) for s in states if s in Z]
        defining += [self._expand(self.aux[a]).subs(sub) for a in sorted(Z & set(self.aux))]
        defining += [e.subs(sub) for e in eqs]
        psub = {z: 0 for z in Z if z in self.params}
        full = [e.subs(psub) for e in self.field]
        aux_p = {a: e.subs(psub) for a, e in self.aux.items()}
        unknowns = states + free_params
        dims, rels, attract, point = [], False, None, None
        for k in range(2):
            res = self._solve(defining, aux_z, unknowns, self.seed + 101 * k)
            if res is None:
                continue
            x, Jx, Jall = res
            rx = np.linalg.matrix_rank(Jx, tol=1e-8 * max(1.0, np.max(np.abs(Jx)) if Jx.size else 1.0)) if Jx.size else 0
            ra = np.linalg.matrix_rank(Jall, tol=1e-8 * max(1.0, np.max(np.abs(Jall)) if Jall.size else 1.0)) if Jall.size else 0
            dims.append(len(states) - int(rx))
            rels = rels or bool(ra > rx)
            if k == 0:
                point = dict(zip(unknowns, x.tolist()))
                attract = self._attracting(full, aux_p, point, dims[-1])
        dim = dims[0] if dims else None
        if len(set(dims)) > 1:
            dim = max(dims)
        induced = [z for z in Z - case if z in self.params]
        return Component(Z, eqs, dim, dims, induced, rels, attract, point)

    def _solve(self, eqs, aux, unknowns, seed):
        if not eqs:
            rng = np.random.default_rng(seed)
            x = rng.uniform(0.5, 2.0, len(unknowns))
            return x, np.zeros((0, len(self.states))), np.zeros((0, len(unknowns)))
        f = compile_vector(eqs, unknowns, aux)
        J = jacobian(eqs, unknowns, aux)
        jf = compile_vector(J.entries, unknowns, aux)
        m, n = len(eqs), len(unknowns)
        rng = np.random.default_rng(seed)
        best = None
        for _ in range(20):
            x = rng.uniform(0.5, 2.0, n)
            for _ in range(100):
                try:
                    F = np.array(f(x))
                    if np.max(np.abs(F)) < 1e-12:
                        break
                    Jm = np.array(jf(x)).reshape(m, n)
                    x = x - np.linalg.lstsq(Jm, F, rcond=None)[0]
                except (ZeroDivisionError, OverflowError, np.linalg.LinAlgError):
                    break
            try:
                F = np.array(f(x))
            except (ZeroDivisionError, OverflowError):
                continue
            if not np.all(np.isfinite(F)) or np.max(np.abs(F)) > 1e-9:
                continue
            vals = dict(zip(unknowns, x))
            pos = all(v >= -1e-9 for v in x) and all(
                float(self._expand(RationalExpr.symbol(a)).evaluate(vals)) >= -1e-9 for a in aux if a in self.nonneg
            )
            Jm = np.array(jf(x)).reshape(m, n)
            cand = (x, Jm[:, : len(self.states)], Jm)
            if pos:
                return cand
            if best is None:
                best = cand
        return best

    def _attracting(self, full, aux, point, dim) -> bool | None:
        if dim is None:
            return None
        states = list(self.states)
        fixed = {k: v for k, v in point.items() if k not in states}
        J = jacobian(full, states, aux)
        try:
            M = np.array(compile_vector(J.entries, states, aux, fixed)([point[s] for s in states])).reshape(len(states), len(states))
        except (ZeroDivisionError, KeyError):
            return None
        ev = np.linalg.eigvals(M)
        order = np.argsort(np.abs(ev))
        scale = max(1.0, float(np.max(np.abs(ev))))
        zero = ev[order[:dim]]
        rest = ev[order[dim:]]
        if np.any(np.abs(zero) > 1e-6 * scale):
            return False
        return bool(np.all(rest.real < -self.margin))


def nested_scan(
    d: Decomposition,
    nonneg: Sequence[str] | None = None,
    seed: int = 0,
    margin: float = DEFAULT_MARGIN,
) -> CaseTree:
    """Case analysis of det(Dμ·P) = 0 over nonnegative symbols.

    ``nonneg`` names the atoms known to be nonnegative (all atoms when None);
    states and parameters are always treated as nonnegative.
    """
    sc = _Scanner(d, nonneg, seed, margin)
    det = A1(d).det().subs(_AT_ZERO)
    n, n1 = d.n, d.n1
    target = n - n1 + 1
    if det.is_zero:
        raise PreconditionError("det(Dmu*P) vanishes identically; the factorization is degenerate")
    if det.den.variables():
        sd = _signs(det.den)
        if len(sd) != 1:
            raise NotSignDefiniteError(f"denominator of det(Dmu*P) is not sign definite: {det.den}")
    p = det.num
    outside = sorted(v for v in p.variables() if v not in sc.nonneg)
    if outside:
        raise NotSignDefiniteError(f"symbols not declared nonnegative: {', '.join(outside)}")
    if len(_signs(p)) != 1:
        raise NotSignDefiniteError(f"det(Dmu*P) has monomials of both signs: {det}")
    monos = [(m, c) for m, c in p.sorted_terms()]
    params = set(sc.params)
    pmonos = [(m, c) for m, c in monos if _mono_symbols(m) <= params]
    root = RationalExpr(Polynomial({m: c for m, c in pmonos})) if pmonos else ZERO
    if pmonos and any(not _mono_symbols(m) for m, _ in pmonos):
        return CaseTree(det, root, [], [], target, sc.params, ["det(Dmu*P) has a nonzero constant term; no nested values"])
    level1 = sorted(minimal_hitting_sets([_mono_symbols(m) for m, _ in pmonos]), key=lambda s: _order(s, params))
    branches: list = []
    for l1 in level1:
        rest = [_mono_symbols(m) for m, _ in monos if not (_mono_symbols(m) & l1)]
        hs = sorted(minimal_hitting_sets(rest), key=lambda s: _order(s, params))
        for h in hs:
            cond = l1 | h
            earlier = next((b.conditions for b in branches if b.conditions <= cond), None)
            if earlier is not None:
                branches.append(Branch(cond, l1, "subsumed", [], earlier))
                continue
            comps = [sc.component(z, eqs, cond) for z, eqs in sc.propagate(cond)]
            branches.append(Branch(cond, l1, _classify(comps, target), comps))
    notes = ["boundary points of the parameter region may or may not be TFPV themselves; not resolved here"]
    return CaseTree(det, root, level1, branches, target, sc.params, notes)


def _classify(comps: list, target: int) -> str:
    if any(c.dimension is not None and c.dimension >= target and c.attracting for c in comps):
        return "nested-TFPV candidate"
    if any(c.dimension is not None and c.dimension >= target for c in comps):
        return "non-attracting"
    return "dimension-deficient"


__all__ = [
    "Branch",
    "CaseTree",
    "Component",
    "TFPVReport",
    "char_coeffs",
    "char_poly",
    "check_tfpv",
    "definite_sign",
    "field_first_integrals",
    "minimal_hitting_sets",
    "nested_scan",
]
