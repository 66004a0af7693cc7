"""Adaptive Runge-Kutta integration, trajectory comparison and ε-sweeps."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyOverlapError, OffManifoldError, PreconditionError, StepSizeUnderflowError
from .field import VectorField
from .reduce import ReducedModel, complete_system, intermediate_system, linear_first_integrals, project_initial_value
from .scaling import EPS1, EPS2, ThreeScaleSystem, assemble
from .symcore import compile_vector, jacobian

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

DRIFT_TOL = 1e-8


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    timescale: str = "t"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or len(self.times) != len(self.states):
            raise ValueError("times and states must have matching lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def rescaled(self, factor: float, timescale: str) -> "Trajectory":
        return Trajectory(self.times * factor, self.states, timescale, dict(self.meta))

    def at(self, t: np.ndarray) -> np.ndarray:
        return np.column_stack([np.interp(t, self.times, self.states[:, j]) for j in range(self.states.shape[1])])


class _Compiled:
    """Numeric right-hand side plus optional manifold for re-projection."""

    def __init__(self, states, rhs, aux, values, manifold=()):
        self.states = list(states)
        self.f = compile_vector(rhs, self.states, aux, values)
        self.g = None
        if manifold:
            self.g = compile_vector(manifold, self.states, aux, values)
            jm = jacobian(manifold, self.states, aux)
            self.jg = compile_vector(jm.entries, self.states, aux, values)
            self.m = len(manifold)

    def __call__(self, y):
        return np.array(self.f(y))

    def drift(self, y) -> float:
        return float(np.max(np.abs(self.g(y)))) if self.g is not None else 0.0

    def project(self, y):
        for _ in range(20):
            r = np.array(self.g(y))
            if np.max(np.abs(r)) <= 1e-13 * (1 + np.max(np.abs(y))):
                break
            J = np.array(self.jg(y)).reshape(self.m, len(y))
            y = y - np.linalg.lstsq(J, r, rcond=None)[0]
        return y


def _compile(model, values) -> tuple:
    vals = {k: float(v) for k, v in (values or {}).items()}
    if isinstance(model, ReducedModel):
        vals.setdefault(EPS1, 0.0)
        vals.setdefault(EPS2, 0.0)
        return _Compiled(model.states, model.field, model.aux, vals, model.manifold), model.timescale
    if isinstance(model, VectorField):
        return _Compiled(model.states, model.rhs, model.aux, vals), "t"
    raise TypeError("integrate expects a VectorField or a ReducedModel")


def integrate(
    model,
    y0: Sequence[float],
    t_end: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    values: Mapping[str, float] | None = None,
    max_steps: int = 2_000_000,
    h0: float | None = None,
    max_step: float | None = None,
) -> Trajectory:
    """Dormand-Prince 5(4) with adaptive steps; reduced models are kept on their manifold.

    ``max_step`` bounds the step so that linear interpolation between samples
    stays accurate.
    """
    fun, tag = _compile(model, values)
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise PreconditionError("initial value must be finite")
    if fun.g is not None:
        d0 = fun.drift(y)
        if d0 > DRIFT_TOL * (1 + np.max(np.abs(y))):
            raise OffManifoldError(f"initial value is off the manifold (residual {d0:.3g})")
    t = 0.0
    ts, ys = [t], [y.copy()]
    k1 = fun(y)
    if h0 is None:
        scale = abs_tol + rel_tol * np.abs(y)
        d0 = np.linalg.norm(y / scale) / np.sqrt(len(y))
        d1 = np.linalg.norm(k1 / scale) / np.sqrt(len(y))
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        h = min(h, t_end)
    else:
        h = h0
    hmax = max_step if max_step is not None else np.inf
    steps = 0
    reprojections = 0
    while t < t_end:
        if steps >= max_steps:
            raise StepSizeUnderflowError(
                f"more than {max_steps} steps before t = {t_end}; the system is too stiff for an explicit "
                "method, try a smaller end time or larger eps"
            )
        h = min(h, hmax, t_end - t)
        if h <= 1e-14 * max(1.0, abs(t)):
            raise StepSizeUnderflowError(
                f"step size underflow at t = {t:.6g}; try a smaller end time or larger eps"
            )
        K = [k1]
        for i in range(1, 7):
            yi = y + h * sum(a * K[j] for j, a in enumerate(_A[i]) if a)
            K.append(fun(yi))
        y5 = y + h * sum(b * K[j] for j, b in enumerate(_B5) if b)
        err = h * sum(e * K[j] for j, e in enumerate(_E) if e)
        sc = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y5))
        en = float(np.max(np.abs(err) / sc))
        if not np.isfinite(en):
            h *= 0.1
            continue
        if en <= 1.0:
            t += h
            y = y5
            k1 = K[6]
            steps += 1
            if fun.g is not None and fun.drift(y) > DRIFT_TOL:
                y = fun.project(y)
                k1 = fun(y)
                reprojections += 1
            ts.append(t)
            ys.append(y.copy())
        fac = 0.9 * en ** (-0.2) if en > 0 else 5.0
        h *= min(5.0, max(0.2, fac))
    meta = {"rel_tol": rel_tol, "abs_tol": abs_tol, "steps": steps, "reprojections": reprojections}
    return Trajectory(np.array(ts), np.array(ys), tag, meta)


# -- comparison ------------------------------------------------------------------
_FACTOR = {"t": lambda e1, e2: 1.0, "eps1_t": lambda e1, e2: e1, "eps1eps2_t": lambda e1, e2: e1 * e2}


@dataclass
class ComparisonEntry:
    eps1: float
    eps2: float
    sup_dist: float
    window: tuple


def compare(full: Trajectory, reduced: Trajectory, transient_skip: float = 0.2) -> ComparisonEntry:
    """Sup-norm distance on the overlap window after skipping a leading fraction.

    ``full`` is rescaled to the reduced model's time scale using the ε values
    stored in its metadata (absent values mean no rescaling).
    """
    e1 = float(full.meta.get("eps1", 1.0))
    e2 = float(full.meta.get("eps2", 1.0))
    if full.timescale != reduced.timescale:
        factor = _FACTOR[reduced.timescale](e1, e2) / _FACTOR[full.timescale](e1, e2)
        full = full.rescaled(factor, reduced.timescale)
    lo = max(full.times[0], reduced.times[0])
    hi = min(full.times[-1], reduced.times[-1])
    if not hi > lo:
        raise EmptyOverlapError("trajectories do not overlap in time")
    lo = lo + transient_skip * (hi - lo)
    grid = np.union1d(full.times, reduced.times)
    grid = grid[(grid >= lo) & (grid <= hi)]
    if grid.size == 0:
        raise EmptyOverlapError("no samples in the comparison window")
    dist = float(np.max(np.abs(full.at(grid) - reduced.at(grid))))
    return ComparisonEntry(e1, e2, dist, (float(lo), float(hi)))


@dataclass
class ConvergenceReport:
    level: str
    entries: list
    slope: float | None
    slope_band: float = 0.35

    @property
    def monotone(self) -> bool:
        d = [e.sup_dist for e in self.entries]
        return all(b < a for a, b in zip(d, d[1:]))

    @property
    def ratios(self) -> list:
        """Successive distance ratios d_k / d_{k+1} (about 2 per halving at order one)."""
        d = [e.sup_dist for e in self.entries]
        return [a / b if b > 0 else float("inf") for a, b in zip(d, d[1:])]

    @property
    def passed(self) -> bool | None:
        if self.slope is None:
            return None
        return self.monotone and abs(self.slope - 1.0) <= self.slope_band

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps1", "eps2", "sup_dist", "window", "slope"])
        for e in self.entries:
            w.writerow([repr(e.eps1), repr(e.eps2), f"{e.sup_dist:.12g}", f"{e.window[0]:.6g}:{e.window[1]:.6g}", ""])
        w.writerow(["", "", "", "", "" if self.slope is None else f"{self.slope:.6g}"])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "entries": [
                {"eps1": e.eps1, "eps2": e.eps2, "sup_dist": e.sup_dist, "window": list(e.window)} for e in self.entries
            ],
            "slope": self.slope,
            "monotone": self.monotone,
            "ratios": self.ratios,
            "passed": self.passed,
        }


def fit_slope(eps_sums: Sequence[float], dists: Sequence[float]) -> float | None:
    if len(eps_sums) < 2:
        return None
    return float(np.polyfit(np.log(eps_sums), np.log(dists), 1)[0])


def eps_sweep(
    ts: ThreeScaleSystem,
    d,
    y0: Sequence[float],
    eps_list: Sequence,
    level: str,
    values: Mapping[str, float],
    t_end: float = 1.0,
    transient_skip: float = 0.2,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-11,
) -> ConvergenceReport:
    """Compare full and reduced solutions for each (ε1, ε2) and fit the order.

    ``t_end`` is measured in the reduced model's time scale.
    """
    if level not in ("intermediate", "complete"):
        raise PreconditionError("level must be intermediate or complete")
    reduced = intermediate_system(ts, d) if level == "intermediate" else complete_system(ts, d)
    man = "M1" if level == "intermediate" else "M2"
    fis = linear_first_integrals(d, man)
    vals = {k: float(v) for k, v in values.items()}
    start = project_initial_value(d, fis, y0, man, vals).point
    red = integrate(reduced, start, t_end, rel_tol, abs_tol, vals, max_step=t_end / 4000)
    entries = []
    for item in eps_list:
        e1, e2 = (item, item) if np.isscalar(item) else item
        vf = assemble(ts, e1, e2)
        factor = _FACTOR[reduced.timescale](float(e1), float(e2))
        full = integrate(vf, y0, t_end / factor, rel_tol, abs_tol, vals)
        full.meta.update({"eps1": float(e1), "eps2": float(e2)})
        entries.append(compare(full, red, transient_skip))
    slope = fit_slope([e.eps1 + e.eps2 for e in entries], [e.sup_dist for e in entries])
    return ConvergenceReport(level, entries, slope)


__all__ = [
    "ComparisonEntry",
    "ConvergenceReport",
    "Trajectory",
    "compare",
    "eps_sweep",
    "fit_slope",
    "integrate",
]
