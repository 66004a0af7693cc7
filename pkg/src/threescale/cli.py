"""Command-line front end: parse, reduce, check-ha, tfpv-scan, validate."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .decomp import decompose, load_mu, suggest_mu
from .errors import AmbiguousRootError, ConfigError, NewtonDivergenceError, PreconditionError, ThreeScaleError
from .network import conservation_laws, load_model, parse_model
from .numeric import eps_sweep
from .reduce import (
    auxiliary_system,
    complete_system,
    intermediate_system,
    linear_first_integrals,
    project_initial_value,
)
from .scaling import apply_surface, load_scaling, parse_scaling
from .stability import check_ha
from .symcore import ONE, ZERO
from .tfpv import nested_scan

SCHEMA = 1
LEVELS = ("aux", "intermediate", "complete")


@dataclass
class RunConfig:
    command: str
    model: str
    scaling: str | None = None
    mu: str | None = None
    level: str | None = None
    eps: list = field(default_factory=list)
    points: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    y0: list | None = None
    t_end: float = 2.0
    seed: int = 0
    format: str = "text"
    strict: bool = False

    def __post_init__(self):
        for p in (self.model, self.scaling, self.mu):
            if p is not None and not os.path.isfile(p):
                raise ConfigError(f"no such file: {p}")
        for e in self.eps:
            if e <= 0:
                raise ConfigError("eps values must be positive")


# -- argument parsing ------------------------------------------------------------------
def _eps_list(text: str) -> list:
    try:
        return [Fraction(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot read eps list {text!r}") from None


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot read numbers from {text!r}") from None


def _points(text: str) -> list:
    return [_floats(chunk) for chunk in text.split(";") if chunk.strip()]


def _values(text: str) -> dict:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ConfigError(f"parameter values look like k1=1.5, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"not a number: {v!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="threescale", description="Three-timescale reduction of polynomial ODE systems.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scaling=True, mu=True):
        p.add_argument("--model", required=True, help="model file (reaction network or explicit ODE)")
        if scaling:
            p.add_argument("--scaling", required=p.prog.split()[-1] != "parse", help="parameter curve file")
        if mu:
            p.add_argument("--mu", help="manifold functions file (mu1: ...; mu2: ...)")
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")
        p.add_argument("--seed", type=int, default=0, help="seed for sampled values and points")
        p.add_argument("--strict", action="store_true", help="reject surfaces with higher-order remainders")
        p.add_argument("--values", default="", help="numeric parameter values, e.g. k1=1,km1=2")

    p = sub.add_parser("parse", help="show the vector field and the three-timescale split")
    common(p, mu=False)
    p = sub.add_parser("reduce", help="print reduced systems")
    common(p)
    p.add_argument("--level", choices=LEVELS)
    p = sub.add_parser("check-ha", help="check hyperbolic attractivity at sample points")
    common(p)
    p.add_argument("--points", default="", help="states in model order; points separated by ';'")
    p = sub.add_parser("tfpv-scan", help="nested TFPV case analysis at the surface base point")
    common(p)
    p = sub.add_parser("validate", help="compare full and reduced solutions over an eps sweep")
    common(p)
    p.add_argument("--level", choices=("intermediate", "complete"))
    p.add_argument("--eps", default="0.1,0.05,0.025")
    p.add_argument("--y0", default="", help="initial state in model order")
    p.add_argument("--t-end", type=float, default=2.0, help="window length in the reduced time scale")
    return ap


def config_from_args(ns) -> RunConfig:
    return RunConfig(
        command=ns.command,
        model=ns.model,
        scaling=getattr(ns, "scaling", None),
        mu=getattr(ns, "mu", None),
        level=getattr(ns, "level", None),
        eps=_eps_list(ns.eps) if getattr(ns, "eps", None) else [],
        points=_points(ns.points) if getattr(ns, "points", "") else [],
        values=_values(ns.values),
        y0=_floats(ns.y0) if getattr(ns, "y0", "") else None,
        t_end=getattr(ns, "t_end", 2.0),
        seed=ns.seed,
        format=ns.format,
        strict=ns.strict,
    )


# -- pipeline pieces ---------------------------------------------------------------------
def _system(cfg: RunConfig):
    vf = load_model(cfg.model)
    surf = load_scaling(cfg.scaling) if cfg.scaling else parse_scaling("")
    return apply_surface(vf, surf, strict=cfg.strict)


def _decomposition(cfg: RunConfig, ts):
    if cfg.mu:
        mu1, mu2 = load_mu(cfg.mu)
        return decompose(ts, mu1, mu2)
    with open(cfg.model, encoding="utf-8") as fh:
        model = parse_model(fh.read())
    cands = suggest_mu(ts, model.network)
    if not cands:
        raise PreconditionError("no mu1 candidate found; supply --mu")
    return decompose(ts, cands[0])


def _param_values(cfg: RunConfig, ts) -> dict:
    rng = np.random.default_rng(cfg.seed)
    vals = {}
    for p in ts.field.params:
        drawn = round(float(rng.uniform(0.5, 2.0)), 3)
        vals[p] = cfg.values.get(p, drawn)
    unknown = sorted(set(cfg.values) - set(vals))
    if unknown:
        raise ConfigError(f"values given for unknown parameters: {', '.join(unknown)}")
    return vals


def _dump(doc) -> str:
    return json.dumps({"schema": SCHEMA, **doc}, indent=2)


def cmd_parse(cfg: RunConfig) -> str:
    vf = load_model(cfg.model)
    with open(cfg.model, encoding="utf-8") as fh:
        model = parse_model(fh.read())
    laws = [str(law) for law in conservation_laws(model.network)] if model.network is not None else []
    doc = {
        "command": "parse",
        "states": list(vf.states),
        "parameters": list(vf.params),
        "aux": {a: str(vf.aux[a]) for a in vf.aux},
        "rhs": [str(e) for e in vf.rhs],
        "conservation_laws": laws,
    }
    ts = None
    if cfg.scaling:
        ts = _system(cfg)
        doc["split"] = {
            "g00": [str(e) for e in ts.g00],
            "g10": [str(e) for e in ts.g10],
            "g11": [str(e) for e in ts.g11],
            "remainder": [str(e) for e in ts.remainder],
        }
    if cfg.format == "json":
        return _dump(doc)
    lines = [f"states: {', '.join(vf.states)}", f"parameters: {', '.join(vf.params)}"]
    for a in vf.aux:
        lines.append(f"  where {a} = {vf.aux[a]}")
    for law in laws:
        lines.append(f"conserved: {law}")
    for s, e in zip(vf.states, vf.rhs):
        lines.append(f"d{s}/dt = {e}")
    if ts is not None:
        for key in ("g00", "g10", "g11", "remainder"):
            lines.append(f"{key}:")
            for s, e in zip(ts.states, doc["split"][key]):
                lines.append(f"  {s}: {e}")
    return "\n".join(lines)


def cmd_reduce(cfg: RunConfig) -> str:
    ts = _system(cfg)
    d = _decomposition(cfg, ts)
    wanted = [cfg.level] if cfg.level else ["aux", "intermediate"] + (["complete"] if d.has_second_layer else [])
    models = []
    for lvl in wanted:
        if lvl == "aux":
            models.append(auxiliary_system(ts, d))
        elif lvl == "intermediate":
            models.append(intermediate_system(ts, d))
        else:
            models.append(complete_system(ts, d))
    if cfg.format == "json":
        return _dump({"command": "reduce", "models": [m.to_json() for m in models]})
    return "\n\n".join(m.render() for m in models)


def _sample_points(cfg, ts, d, vals) -> list:
    """Up to three nonnegative points on M2 (or M1 without a second layer).

    Points on M2 also lie on M1, so they exercise both layers. Missing first
    integrals are replaced by pinning randomly chosen coordinates; any manifold
    point will do for an (HA) check.
    """
    man = "M2" if d.has_second_layer else "M1"
    fis = linear_first_integrals(d, man)
    need = d.n - d.n1 - (d.n2 if man == "M2" else 0)
    rng = np.random.default_rng(cfg.seed)
    pts = []
    for _ in range(50):
        y = rng.uniform(0.05, 1.0, d.n) * rng.uniform(0.1, 1.0)
        pins = [[ONE if k == i else ZERO for k in range(d.n)] for i in rng.permutation(d.n)]
        try:
            res = project_initial_value(d, (fis + pins)[:need], y, man, vals, seed=cfg.seed)
        except (NewtonDivergenceError, AmbiguousRootError):
            continue
        if res.rule.startswith("nonnegative"):
            pts.append(res.point.tolist())
        if len(pts) == 3:
            break
    if not pts:
        raise PreconditionError(f"no nonnegative sample point found on {man}; pass --points")
    return pts


def cmd_check(cfg: RunConfig) -> str:
    ts = _system(cfg)
    d = _decomposition(cfg, ts)
    vals = _param_values(cfg, ts)
    points = cfg.points or _sample_points(cfg, ts, d, vals)
    for p in points:
        if len(p) != d.n:
            raise ConfigError(f"sample point {p} has {len(p)} coordinates, expected {d.n}")
    reports = check_ha(ts, d, points, vals)
    if cfg.format == "json":
        return _dump({"command": "check-ha", "values": vals, "reports": [r.to_json() for r in reports]})
    lines = [f"values: {', '.join(f'{k}={v}' for k, v in vals.items())}", f"{'role':<10} {'eps':>8}  {'max Re':>12}  verdict  point"]
    for r in reports:
        eps = "" if r.eps is None else f"{r.eps:g}"
        mx = max(r.eigen_real_parts) if r.eigen_real_parts else float("nan")
        pt = ", ".join(f"{v:.6g}" for v in r.point)
        lines.append(f"{r.role:<10} {eps:>8}  {mx:>12.6g}  {r.verdict:<8} ({pt})")
    lines.append(f"scope: {reports[0].scope}" if reports else "no points")
    return "\n".join(lines)


def cmd_scan(cfg: RunConfig) -> str:
    ts = _system(cfg)
    d = _decomposition(cfg, ts)
    tree = nested_scan(d, seed=cfg.seed)
    if cfg.format == "json":
        return _dump({"command": "tfpv-scan", "tree": tree.to_json()})
    return tree.render()


def cmd_validate(cfg: RunConfig) -> str:
    ts = _system(cfg)
    d = _decomposition(cfg, ts)
    level = cfg.level or ("complete" if d.has_second_layer else "intermediate")
    vals = _param_values(cfg, ts)
    y0 = cfg.y0
    if y0 is None:
        y0 = np.random.default_rng(cfg.seed).uniform(0.1, 1.0, d.n).round(3).tolist()
    if len(y0) != d.n:
        raise ConfigError(f"y0 has {len(y0)} coordinates, expected {d.n}")
    rep = eps_sweep(ts, d, y0, cfg.eps, level, vals, t_end=cfg.t_end)
    if cfg.format == "csv":
        return rep.to_csv().rstrip("\n")
    if cfg.format == "json":
        return _dump({"command": "validate", "values": vals, "y0": y0, "report": rep.to_json()})
    lines = [f"level: {level}", f"values: {', '.join(f'{k}={v}' for k, v in vals.items())}", f"y0: {y0}"]
    for e in rep.entries:
        lines.append(f"eps1={e.eps1:g} eps2={e.eps2:g}  sup distance {e.sup_dist:.6g}")
    if rep.slope is not None:
        lines.append(f"fitted order {rep.slope:.4f}  monotone {rep.monotone}  pass {rep.passed}")
    return "\n".join(lines)


COMMANDS = {
    "parse": cmd_parse,
    "reduce": cmd_reduce,
    "check-ha": cmd_check,
    "tfpv-scan": cmd_scan,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    fmt = ns.format
    try:
        cfg = config_from_args(ns)
        print(COMMANDS[cfg.command](cfg))
        return 0
    except ThreeScaleError as err:
        if fmt == "json":
            print(_dump(err.to_json()))
        else:
            print(f"error [{err.slug}, code {err.code}]: {err}", file=sys.stderr)
        return err.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
