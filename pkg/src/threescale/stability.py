"""Hyperbolic attractivity checks, Hurwitz determinants and block-matrix lemmas."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import OffManifoldError, PreconditionError, SingularMatrixError
from .symcore import RationalExpr, SymMatrix

DEFAULT_MARGIN = 1e-9
SCOPE = "certified at the listed sample points only"


def verdict_of(max_real: float, margin: float = DEFAULT_MARGIN) -> str:
    if max_real < -margin:
        return "stable"
    if abs(max_real) <= margin:
        return "marginal"
    return "unstable"


@dataclass
class StabilityReport:
    point: list
    role: str  # A1, B1_schur, block_eps, jacobian
    eigen_real_parts: list
    verdict: str
    hurwitz: list = field(default_factory=list)
    eps: float | None = None
    margin: float = DEFAULT_MARGIN
    scope: str = SCOPE

    def to_json(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "role": self.role,
            "eps": self.eps,
            "eigen_real_parts": [float(v) for v in self.eigen_real_parts],
            "hurwitz": [float(v) for v in self.hurwitz],
            "verdict": self.verdict,
            "margin": self.margin,
            "scope": self.scope,
        }


# -- Hurwitz ----------------------------------------------------------------------
@dataclass
class HurwitzResult:
    determinants: list
    verdict: str


def _exact(c) -> Fraction:
    if isinstance(c, RationalExpr):
        return c.constant_value()
    return Fraction(c)


def _frac_det(rows: list) -> Fraction:
    a = [list(r) for r in rows]
    n = len(a)
    det = Fraction(1)
    for k in range(n):
        p = next((i for i in range(k, n) if a[i][k] != 0), None)
        if p is None:
            return Fraction(0)
        if p != k:
            a[k], a[p] = a[p], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            if a[i][k]:
                f = a[i][k] / a[k][k]
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return det


def hurwitz_matrix(coeffs: Sequence) -> list:
    """Hurwitz matrix of a0 τ^m + a1 τ^(m-1) + ... + am (coefficients highest first)."""
    a = [_exact(c) for c in coeffs]
    m = len(a) - 1

    def coef(k):
        return a[k] if 0 <= k <= m else Fraction(0)

    return [[coef(2 * (j + 1) - (i + 1)) for j in range(m)] for i in range(m)]


def hurwitz(coeffs: Sequence, s: int = 0) -> HurwitzResult:
    """Hurwitz determinants of χ(τ)/τ^s for a monic χ given highest coefficient first.

    The caller has checked that the trailing ``s`` coefficients vanish; they are
    dropped. Float inputs are converted exactly, so the determinants carry no
    rounding error.
    """
    a = [_exact(c) for c in coeffs]
    if not a or a[0] == 0:
        raise PreconditionError("leading coefficient must be nonzero")
    if s:
        a = a[: len(a) - s]
    if a[0] != 1:
        a = [c / a[0] for c in a]
    H = hurwitz_matrix(a)
    dets = [_frac_det([row[:k] for row in H[:k]]) for k in range(1, len(H) + 1)]
    return HurwitzResult(dets, "stable" if all(d > 0 for d in dets) else "unstable")


# -- Appendix lemmas -------------------------------------------------------------------
@dataclass
class BlockLemmaReport:
    schur_max_real: float
    schur_verdict: str
    rows: list  # (eps, block max real, block verdict, agree, excluded)

    @property
    def agreement(self) -> float:
        used = [r for r in self.rows if not r[4]]
        return 1.0 if not used else sum(r[3] for r in used) / len(used)


def verify_block_lemma(A, B, C, D, eps_list, margin: float = 0.1) -> BlockLemmaReport:
    """Compare spectra of [[A, B], [εC, εD]] with the Schur complement -C A^-1 B + D."""
    A, B, C, D = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, C, D))
    if np.max(np.linalg.eigvals(A).real) >= 0:
        raise PreconditionError("A must have all eigenvalues in the open left half plane")
    try:
        S = D - C @ np.linalg.solve(A, B)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("A is singular") from None
    s_max = float(np.max(np.linalg.eigvals(S).real))
    s_ver = "stable" if s_max < 0 else "unstable"
    excluded = abs(s_max) <= margin
    rows = []
    for eps in eps_list:
        M = np.block([[A, B], [eps * C, eps * D]])
        m_max = float(np.max(np.linalg.eigvals(M).real))
        m_ver = "stable" if m_max < 0 else "unstable"
        rows.append((eps, m_max, m_ver, m_ver == s_ver, excluded))
    return BlockLemmaReport(s_max, s_ver, rows)


def projector(B1, B2):
    """Projection onto span(B2) along span(B1): Q = (0 | B2) (B1 | B2)^-1."""
    if isinstance(B1, SymMatrix):
        n = B1.rows
        if B2.cols == 0:
            return SymMatrix.zeros(n, n)
        Cm = B1.hstack(B2)
        if Cm.rows != Cm.cols:
            raise PreconditionError("(B1 | B2) must be square")
        Cinv = Cm.inverse()
        return SymMatrix.zeros(n, B1.cols).hstack(B2) @ Cinv
    B1 = np.atleast_2d(np.asarray(B1, dtype=float))
    B2 = np.asarray(B2, dtype=float).reshape(B1.shape[0], -1)
    Cm = np.hstack([B1, B2])
    if Cm.shape[0] != Cm.shape[1]:
        raise PreconditionError("(B1 | B2) must be square")
    try:
        Cinv = np.linalg.inv(Cm)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("(B1 | B2) is singular") from None
    return np.hstack([np.zeros_like(B1), B2]) @ Cinv


# -- (HA) at sample points ------------------------------------------------------------
def _eval_matrix(M: SymMatrix, pt: Mapping) -> np.ndarray:
    return np.array([[float(M[i, j].evaluate(pt)) for j in range(M.cols)] for i in range(M.rows)])


def check_ha(
    ts,
    d,
    sample_points: Sequence[Sequence[float]],
    values: Mapping[str, float],
    margin: float = DEFAULT_MARGIN,
    probe_eps: Sequence[float] = (1e-2, 1e-3),
    tol: float = 1e-8,
) -> list:
    """Reports for A1 on M1 and, with a second layer, for the slow block on M2."""
    from .decomp import A1, A2

    a1 = A1(d)
    a2 = A2(d) if d.has_second_layer else None
    vals = {k: float(v) for k, v in values.items()}
    vals.setdefault("eps2", 0.0)
    reports = []
    for x in sample_points:
        x = [float(v) for v in x]
        pt = ts.field.point(x, vals)
        r1 = [float(m.evaluate(pt)) for m in d.mu1]
        scale = 1.0 + max(abs(v) for v in x)
        if max(abs(v) for v in r1) > tol * scale:
            raise OffManifoldError(f"point {x} is off the first manifold (residual {max(abs(v) for v in r1):.3g})")
        M = _eval_matrix(a1, pt)
        ev = np.linalg.eigvals(M).real
        reports.append(StabilityReport(x, "A1", sorted(ev.tolist()), verdict_of(float(max(ev)), margin), margin=margin))
        if a2 is None:
            continue
        r2 = [float(m.evaluate({**pt, "eps1": 0.0})) for m in d.mu2]
        if max(abs(v) for v in r2) > tol * scale:
            continue
        n1 = d.n1
        full = _eval_matrix(a2.subs({"eps1": 1}), pt)
        A, Bm = full[:n1, :n1], full[:n1, n1:]
        Cm, Dm = full[n1:, :n1], full[n1:, n1:]
        S = Dm - Cm @ np.linalg.solve(A, Bm)
        sev = np.linalg.eigvals(S).real
        reports.append(StabilityReport(x, "B1_schur", sorted(sev.tolist()), verdict_of(float(max(sev)), margin), margin=margin))
        for eps in probe_eps:
            Me = _eval_matrix(a2, {**pt, "eps1": float(eps)})
            eev = np.linalg.eigvals(Me).real
            # slow eigenvalues scale with eps; compare the margin on that scale
            reports.append(
                StabilityReport(x, "block_eps", sorted(eev.tolist()), verdict_of(float(max(eev)), margin * eps), eps=eps, margin=margin)
            )
    return reports
