"""Reaction networks, model files, mass-action kinetics and conservation laws.

Model file layout (``#`` starts a comment)::

    species: E, S, C1, C2, I, P
    parameters: k1, km1, k2, k3, km3, e0, i0
    reactions:
      E + S <-> C1 ; k1, km1
      C1 -> E + P ; k2
      E + I <-> C2 ; k3, km3
    conserved: E + C1 + C2 = e0 ; I + C2 = i0
    pivots: E, I

or, for an explicit polynomial field::

    ode:
      s' = km1*c1 - k1*s*e
    aux:
      e = e0 - c1 - c2 (nonneg)

Species concentrations are named by lowercasing the species name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

from .errors import ConservationError, NetworkError, ParseError, SingularMatrixError
from .field import VectorField
from .symcore import RESERVED, RationalExpr, SymMatrix, parse_expr

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_HEADER = re.compile(r"^([A-Za-z_]+)\s*:(.*)$")
SECTIONS = ("name", "species", "parameters", "reactions", "conserved", "pivots", "ode", "aux")


@dataclass(frozen=True)
class Reaction:
    reactants: tuple  # ((species, multiplicity), ...)
    products: tuple
    rate: str
    reverse: str | None = None

    def directed(self) -> list:
        out = [(self.reactants, self.products, self.rate)]
        if self.reverse:
            out.append((self.products, self.reactants, self.reverse))
        return out


@dataclass(frozen=True)
class ConservationLaw:
    coefficients: tuple  # ((species, Fraction), ...) in written order
    total: str | None = None

    def as_dict(self) -> dict:
        return dict(self.coefficients)

    @property
    def support(self) -> list:
        return [s for s, c in self.coefficients if c]

    def __str__(self):
        parts = []
        for s, c in self.coefficients:
            parts.append(s if c == 1 else f"{c}*{s}")
        lhs = " + ".join(parts)
        return f"{lhs} = {self.total}" if self.total else lhs


@dataclass(frozen=True)
class ReactionNetwork:
    species: tuple
    reactions: tuple
    parameters: tuple = ()
    conserved: tuple = ()
    pivots: tuple = ()

    def directed(self) -> list:
        return [d for r in self.reactions for d in r.directed()]

    def rate_symbols(self) -> list:
        return [k for _, _, k in self.directed()]

    def reactant_species(self) -> set:
        return {s for lhs, _, _ in self.directed() for s, _ in lhs}

    def modeled_species(self, drop_inert: bool = True) -> list:
        """Species that get an ODE; pure products feed back nowhere and are dropped."""
        if not drop_inert:
            return list(self.species)
        used = self.reactant_species()
        return [s for s in self.species if s in used]

    def stoichiometry(self, species: Sequence[str]) -> list:
        """Rows = species, columns = directed reactions, net product-minus-reactant counts."""
        cols = self.directed()
        rows = []
        for s in species:
            row = []
            for lhs, rhs, _ in cols:
                row.append(dict(rhs).get(s, 0) - dict(lhs).get(s, 0))
            rows.append(row)
        return rows


@dataclass
class Model:
    """Parsed model file."""

    network: ReactionNetwork | None = None
    ode: list = field(default_factory=list)  # [(state, RationalExpr)]
    aux: dict = field(default_factory=dict)
    nonneg: set = field(default_factory=set)
    parameters: tuple = ()
    name: str | None = None


def state_name(species: str) -> str:
    return species.lower()


# -- parsing ------------------------------------------------------------------
def _split_sections(text: str):
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indented = line[0] in " \t"
        m = _HEADER.match(line) if not indented else None
        if m and m.group(1).lower() in SECTIONS:
            key = m.group(1).lower()
            if key in sections:
                raise ParseError(f"section {key!r} given twice", lineno, 1)
            sections[key] = []
            current = key
            rest = m.group(2)
            if rest.strip():
                sections[key].append((lineno, m.start(2), rest))
            continue
        if m:
            raise ParseError(f"unknown section {m.group(1)!r}", lineno, 1)
        if current is None:
            raise ParseError("content outside of any section", lineno, 1)
        sections[current].append((lineno, 0, line))
    return sections


def _name_list(entries, what: str) -> list:
    out = []
    for lineno, col, text in entries:
        for part in text.split(","):
            name = part.strip()
            if not name:
                continue
            if not _IDENT.match(name):
                raise ParseError(f"invalid {what} name {name!r}", lineno, col + text.find(part) + 1)
            if name in out:
                raise NetworkError(f"{what} {name!r} declared twice (line {lineno})")
            out.append(name)
    return out


def _parse_complex(text: str, species: Sequence[str], lineno: int, col: int) -> tuple:
    text = text.strip()
    if not text or text == "0" or text == "∅":
        return ()
    out: dict = {}
    for part in text.split("+"):
        item = part.strip()
        m = re.match(r"^(\d+)?\s*\*?\s*([A-Za-z_][A-Za-z0-9_]*)$", item)
        if not m:
            raise ParseError(f"malformed complex term {item!r}", lineno, col + 1)
        mult = int(m.group(1)) if m.group(1) else 1
        sp = m.group(2)
        if sp not in species:
            raise NetworkError(f"unknown species {sp!r} in complex (line {lineno})")
        if mult == 0:
            continue
        out[sp] = out.get(sp, 0) + mult
    return tuple(out.items())


def _parse_reaction(lineno: int, col: int, text: str, species) -> Reaction:
    if ";" not in text:
        raise ParseError("reaction needs '; rate' after the scheme", lineno, col + len(text) + 1)
    scheme, rates = text.split(";", 1)
    rate_names = [r.strip() for r in rates.split(",")]
    for r in rate_names:
        if not _IDENT.match(r):
            raise ParseError(f"invalid rate constant {r!r}", lineno, col + len(scheme) + 2)
    for arrow, rev in (("<->", True), ("<=>", True), ("->", False), ("=>", False)):
        if arrow in scheme:
            lhs, rhs = scheme.split(arrow, 1)
            break
    else:
        raise ParseError("reaction needs '->' or '<->'", lineno, col + 1)
    if rev and len(rate_names) != 2:
        raise ParseError("reversible reaction needs two rate constants", lineno, col + len(scheme) + 2)
    if not rev and len(rate_names) != 1:
        raise ParseError("irreversible reaction needs one rate constant", lineno, col + len(scheme) + 2)
    return Reaction(
        _parse_complex(lhs, species, lineno, col),
        _parse_complex(rhs, species, lineno, col + len(lhs) + len(arrow)),
        rate_names[0],
        rate_names[1] if rev else None,
    )


def _parse_law(lineno: int, col: int, text: str, species) -> ConservationLaw:
    if "=" not in text:
        raise ParseError("conservation law needs '= total'", lineno, col + 1)
    lhs, total = text.split("=", 1)
    total = total.strip()
    if not _IDENT.match(total):
        raise ParseError(f"invalid total symbol {total!r}", lineno, col + len(lhs) + 2)
    coeffs = []
    for part in lhs.split("+"):
        item = part.strip()
        m = re.match(r"^(\d+(?:/\d+)?)?\s*\*?\s*([A-Za-z_][A-Za-z0-9_]*)$", item)
        if not m:
            raise ParseError(f"malformed law term {item!r}", lineno, col + 1)
        sp = m.group(2)
        if sp not in species:
            raise NetworkError(f"unknown species {sp!r} in conservation law (line {lineno})")
        coeffs.append((sp, Fraction(m.group(1)) if m.group(1) else Fraction(1)))
    return ConservationLaw(tuple(coeffs), total)


def parse_model(text: str) -> Model:
    """Parse a model file into a :class:`Model`."""
    sec = _split_sections(text)
    model = Model()
    if "name" in sec:
        model.name = " ".join(t.strip() for _, _, t in sec["name"])
    params = _name_list(sec.get("parameters", []), "parameter")
    model.parameters = tuple(params)
    for p in params:
        if p in RESERVED:
            raise NetworkError(f"{p!r} is reserved for small parameters")
    if "reactions" in sec or "species" in sec:
        if "ode" in sec:
            raise NetworkError("a model has either reactions or an ode section, not both")
        model.network = _parse_network_sections(sec, params)
    elif "ode" in sec:
        for lineno, col, text in sec["ode"]:
            m = re.match(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*'\s*=(.*)$", text)
            if not m:
                raise ParseError("ode lines look like  x' = expression", lineno, col + 1)
            if any(s == m.group(1) for s, _ in model.ode):
                raise NetworkError(f"state {m.group(1)!r} has two equations")
            model.ode.append((m.group(1), parse_expr(m.group(2), lineno, col + m.start(2))))
    else:
        raise NetworkError("model needs a reactions or an ode section")
    for lineno, col, text in sec.get("aux", []):
        m = re.match(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=(.*?)(\(\s*nonneg\s*\))?\s*$", text)
        if not m:
            raise ParseError("aux lines look like  e = expression (nonneg)", lineno, col + 1)
        name = m.group(1)
        if name in model.aux:
            raise NetworkError(f"auxiliary atom {name!r} defined twice")
        model.aux[name] = parse_expr(m.group(2), lineno, col + m.start(2))
        if m.group(3):
            model.nonneg.add(name)
    return model


def _parse_network_sections(sec, params) -> ReactionNetwork:
    if "species" not in sec:
        raise NetworkError("reaction models need a species line")
    species = _name_list(sec["species"], "species")
    seen: dict = {}
    for s in species:
        low = state_name(s)
        if low in seen:
            raise NetworkError(f"species {seen[low]!r} and {s!r} share the concentration name {low!r}")
        seen[low] = s
        if low in params:
            raise NetworkError(f"concentration name {low!r} clashes with a parameter")
    reactions = []
    for lineno, col, text in sec.get("reactions", []):
        reactions.append(_parse_reaction(lineno, col, text, species))
    rates = [k for r in reactions for _, _, k in r.directed()]
    dup = sorted({k for k in rates if rates.count(k) > 1})
    if dup:
        raise NetworkError(f"rate constant used by more than one reaction: {', '.join(dup)}")
    laws = []
    for lineno, col, text in sec.get("conserved", []):
        for part in text.split(";"):
            if part.strip():
                laws.append(_parse_law(lineno, col, part, species))
    pivots = _name_list(sec.get("pivots", []), "pivot")
    for p in pivots:
        if p not in species:
            raise NetworkError(f"pivot {p!r} is not a species")
    if params:
        known = set(params)
        for k in rates + [l.total for l in laws]:
            if k not in known:
                raise NetworkError(f"symbol {k!r} is not declared in parameters")
    return ReactionNetwork(tuple(species), tuple(reactions), tuple(params), tuple(laws), tuple(pivots))


def parse_network(text: str) -> ReactionNetwork:
    model = parse_model(text)
    if model.network is None:
        raise NetworkError("text defines no reaction network")
    return model.network


def _render_complex(c) -> str:
    if not c:
        return ""
    return " + ".join(s if m == 1 else f"{m} {s}" for s, m in c)


def render(net: ReactionNetwork) -> str:
    """Model-file text for ``net``; parses back to an equal network."""
    lines = [f"species: {', '.join(net.species)}"]
    if net.parameters:
        lines.append(f"parameters: {', '.join(net.parameters)}")
    lines.append("reactions:")
    for r in net.reactions:
        lhs, rhs = _render_complex(r.reactants), _render_complex(r.products)
        if r.reverse:
            lines.append(f"  {lhs} <-> {rhs} ; {r.rate}, {r.reverse}")
        else:
            lines.append(f"  {lhs} -> {rhs} ; {r.rate}")
    if net.conserved:
        lines.append("conserved: " + " ; ".join(str(l) for l in net.conserved))
    if net.pivots:
        lines.append(f"pivots: {', '.join(net.pivots)}")
    return "\n".join(lines) + "\n"


# -- kinetics -------------------------------------------------------------------
def mass_action_odes(net: ReactionNetwork, drop_inert: bool = True) -> VectorField:
    """Mass-action field over the modeled species (concentrations lowercased)."""
    species = net.modeled_species(drop_inert)
    idx = {s: i for i, s in enumerate(species)}
    rhs = [RationalExpr() for _ in species]
    for lhs, prod, k in net.directed():
        rate = RationalExpr.symbol(k)
        for s, m in lhs:
            rate = rate * RationalExpr.symbol(state_name(s)) ** m
        net_change: dict = {}
        for s, m in prod:
            net_change[s] = net_change.get(s, 0) + m
        for s, m in lhs:
            net_change[s] = net_change.get(s, 0) - m
        for s, d in net_change.items():
            if d and s in idx:
                rhs[idx[s]] = rhs[idx[s]] + rate * d
    params = list(net.parameters) or []
    for k in net.rate_symbols():
        if k not in params:
            params.append(k)
    for law in net.conserved:
        if law.total and law.total not in params:
            params.append(law.total)
    return VectorField(tuple(state_name(s) for s in species), tuple(rhs), tuple(params))


def _integer_vector(vec) -> list:
    from math import gcd, lcm

    den = 1
    for v in vec:
        den = lcm(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, v)
    g = g or 1
    ints = [v // g for v in ints]
    first = next((v for v in ints if v), 0)
    if first < 0:
        ints = [-v for v in ints]
    return ints


def _left_kernel(rows: list) -> list:
    """Rational basis of {y : y^T N = 0} for the given N rows."""
    if not rows:
        return []
    ncols = len(rows[0])
    if ncols == 0:
        return [[Fraction(int(i == j)) for j in range(len(rows))] for i in range(len(rows))]
    nt = SymMatrix(ncols, len(rows), [rows[i][j] for j in range(ncols) for i in range(len(rows))])
    return [[e.constant_value() for e in v.col(0)] for v in nt.nullspace()]


def conservation_laws(net: ReactionNetwork, drop_inert: bool = True, max_search: int = 12) -> list:
    """Basis of linear conservation laws, nonnegative representatives first."""
    species = net.modeled_species(drop_inert)
    rows = net.stoichiometry(species)
    basis = _left_kernel(rows)
    dim = len(basis)
    if dim == 0:
        return []
    chosen: list = []
    if len(species) <= max_search:
        supports: list = []
        for size in range(1, len(species) + 1):
            for sub in combinations(range(len(species)), size):
                if any(set(s) <= set(sub) for s in supports):
                    continue
                ker = _left_kernel([rows[i] for i in sub])
                if len(ker) != 1:
                    continue
                v = ker[0]
                if all(x > 0 for x in v) or all(x < 0 for x in v):
                    full = [Fraction(0)] * len(species)
                    for i, x in zip(sub, v):
                        full[i] = abs(x)
                    supports.append(sub)
                    if _rank(chosen + [full]) > len(chosen):
                        chosen.append(full)
                if len(chosen) == dim:
                    break
            if len(chosen) == dim:
                break
    for v in basis:
        if len(chosen) == dim:
            break
        if _rank(chosen + [v]) > len(chosen):
            chosen.append(v)
    chosen.sort(key=lambda v: [i for i, x in enumerate(v) if x][0])
    out = []
    for v in chosen:
        ints = _integer_vector(v)
        out.append(ConservationLaw(tuple((species[i], Fraction(c)) for i, c in enumerate(ints) if c)))
    return out


def _rank(vectors: list) -> int:
    if not vectors:
        return 0
    return SymMatrix.from_rows(vectors).rank()


def choose_pivot(law: ConservationLaw, taken=(), override=()) -> str:
    """Largest coefficient wins; ties go to the order the law is written in."""
    for p in override:
        if p in law.support and p not in taken:
            return p
    best = None
    for s, c in law.coefficients:
        if not c or s in taken:
            continue
        if best is None or abs(c) > abs(best[1]):
            best = (s, c)
    if best is None:
        raise ConservationError(f"no free pivot species in law {law}")
    return best[0]


def eliminate_conserved(
    vf: VectorField,
    laws: Sequence[ConservationLaw],
    totals: Mapping | None = None,
    pivots: Sequence[str] = (),
) -> VectorField:
    """Replace one species per law by total minus the rest.

    The eliminated concentration becomes an auxiliary atom (nonnegative) whose
    expansion is recorded in the returned field's ``aux`` map.
    """
    if not laws:
        return vf
    totals = dict(totals or {})
    names = {s: (s if s in vf.states else state_name(s)) for law in laws for s, _ in law.coefficients}
    for s, n in names.items():
        if n not in vf.states:
            raise ConservationError(f"species {s!r} has no state in the field")
    k = len(laws)
    mat = [[Fraction(0)] * vf.dim for _ in range(k)]
    for r, law in enumerate(laws):
        for s, c in law.coefficients:
            mat[r][vf.states.index(names[s])] += c
    if _rank(mat) < k:
        raise ConservationError("conservation laws are linearly dependent")
    # every law must annihilate the field
    for r, law in enumerate(laws):
        acc = RationalExpr()
        for j, c in enumerate(mat[r]):
            if c:
                acc = acc + vf.rhs[j] * c
        if not vf.expand(acc).is_zero:
            raise ConservationError(f"{law} is not conserved by the field")
    for p in pivots:
        if all(p not in law.support for law in laws):
            raise ConservationError(f"pivot {p!r} is not in the support of any law")
    chosen: list = []
    for law in laws:
        override = [p for p in pivots if p in law.support]
        chosen.append(choose_pivot(law, taken=chosen, override=override))
    pcols = [vf.states.index(names[p]) for p in chosen]
    rest = [j for j in range(vf.dim) if j not in pcols]
    lp = SymMatrix(k, k, [mat[r][c] for r in range(k) for c in pcols])
    try:
        lp_inv = lp.inverse()
    except SingularMatrixError:
        raise ConservationError("pivot species do not give a solvable elimination") from None
    tot = []
    for r, law in enumerate(laws):
        t = law.total or totals.get(r) or totals.get(law)
        if not t:
            raise ConservationError(f"no total symbol for {law}")
        tot.append(RationalExpr.symbol(t))
    rhs_vec = []
    for r in range(k):
        e = tot[r]
        for j in rest:
            if mat[r][j]:
                e = e - RationalExpr.symbol(vf.states[j]) * mat[r][j]
        rhs_vec.append(e)
    expansions = lp_inv.apply(rhs_vec)
    aux = dict(vf.aux)
    for c, ex in zip(pcols, expansions):
        aux[vf.states[c]] = ex
    params = list(vf.params)
    for t in tot:
        name = next(iter(t.variables()))
        if name not in params:
            params.append(name)
    return VectorField(
        tuple(vf.states[j] for j in rest),
        tuple(vf.rhs[j] for j in rest),
        tuple(params),
        aux,
        vf.nonneg | {vf.states[c] for c in pcols},
    )


def build_field(model: Model, drop_inert: bool = True) -> VectorField:
    """Vector field described by a parsed model file."""
    if model.network is not None:
        net = model.network
        vf = mass_action_odes(net, drop_inert)
        if net.conserved:
            vf = eliminate_conserved(vf, net.conserved, pivots=net.pivots)
        if model.aux:
            vf = VectorField(vf.states, vf.rhs, vf.params, {**vf.aux, **model.aux}, vf.nonneg | model.nonneg)
        return vf
    states = [s for s, _ in model.ode]
    rhs = [e for _, e in model.ode]
    used: list = []
    for e in rhs + list(model.aux.values()):
        for v in sorted(e.variables()):
            if v not in used:
                used.append(v)
    bad = [v for v in used if v in RESERVED]
    if bad:
        raise NetworkError("eps1/eps2 belong in the scaling file, not the model")
    if model.parameters:
        extra = [v for v in used if v not in states and v not in model.aux and v not in model.parameters]
        if extra:
            raise NetworkError(f"undeclared symbols: {', '.join(extra)}")
        params = list(model.parameters)
    else:
        params = [v for v in used if v not in states and v not in model.aux]
    return VectorField(tuple(states), tuple(rhs), tuple(params), model.aux, model.nonneg)


def load_model(path) -> VectorField:
    with open(path, encoding="utf-8") as fh:
        return build_field(parse_model(fh.read()))


__all__ = [
    "ConservationLaw",
    "Model",
    "Reaction",
    "ReactionNetwork",
    "build_field",
    "choose_pivot",
    "conservation_laws",
    "eliminate_conserved",
    "load_model",
    "mass_action_odes",
    "parse_model",
    "parse_network",
    "render",
    "state_name",
]
