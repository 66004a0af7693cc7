import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threescale.decomp import decompose
from threescale.errors import OffManifoldError, PreconditionError, SingularMatrixError
from threescale.field import VectorField
from threescale.reduce import linear_first_integrals, project_initial_value
from threescale.scaling import apply_surface, parse_scaling
from threescale.stability import check_ha, hurwitz, projector, verdict_of, verify_block_lemma
from threescale.symcore import SymMatrix
from threescale.symcore import parse_expr as X


def test_hurwitz_examples():
    r = hurwitz([1, 3, 2])
    assert r.determinants == [3, 6] and r.verdict == "stable"
    r = hurwitz([1, -1, 2])
    assert r.determinants[0] == -1 and r.verdict == "unstable"


def test_hurwitz_drops_zero_roots():
    # tau^2 (tau + 1)(tau + 2) with s = 2
    assert hurwitz([1, 3, 2, 0, 0], s=2).verdict == "stable"


def test_hurwitz_leading_zero():
    with pytest.raises(PreconditionError):
        hurwitz([0, 1, 2])


def test_hurwitz_preassigned_spectrum():
    rng = np.random.default_rng(11)
    roots = np.array([-0.5, -1.0, -2.0 + 1.0j, -2.0 - 1.0j])
    M = np.diag([-0.5, -1.0, 0, 0]).astype(float)
    M[2:, 2:] = [[-2.0, 1.0], [-1.0, -2.0]]
    S = rng.normal(size=(4, 4))
    A = S @ M @ np.linalg.inv(S)
    coeffs = np.real(np.poly(A))
    assert np.allclose(np.sort_complex(np.roots(coeffs)), np.sort_complex(roots), atol=1e-8)
    assert hurwitz(coeffs.tolist()).verdict == "stable"


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=6))
def test_hurwitz_matches_roots(tail):
    coeffs = [1.0] + tail
    lam = np.roots(coeffs)
    mx = float(np.max(lam.real))
    if abs(mx) < 1e-6:
        return
    want = "stable" if mx < 0 else "unstable"
    assert hurwitz(coeffs).verdict == want


def test_verdict_margin():
    assert verdict_of(-1.0) == "stable"
    assert verdict_of(0.0) == "marginal"
    assert verdict_of(1e-3) == "unstable"


# -- block matrix lemma ------------------------------------------------------------
def test_block_lemma_trivial():
    rep = verify_block_lemma([[-1]], [[0]], [[0]], [[-1]], [1e-1, 1e-2, 1e-3])
    assert rep.schur_verdict == "stable"
    assert all(r[2] == "stable" for r in rep.rows)
    assert rep.agreement == 1.0


def test_block_lemma_unstable_schur():
    rep = verify_block_lemma([[-1]], [[1]], [[1]], [[0]], [1e-2, 1e-3])
    assert rep.schur_max_real == pytest.approx(1.0)
    for eps, m_max, verdict, agree, _ in rep.rows:
        # eigenvalues of [[-1, 1], [eps, 0]] in closed form
        lam = (-1 + np.sqrt(1 + 4 * eps)) / 2
        assert m_max == pytest.approx(lam)
        assert verdict == "unstable" and agree


def test_block_lemma_preconditions():
    with pytest.raises(PreconditionError):
        verify_block_lemma([[1]], [[0]], [[0]], [[-1]], [1e-3])


def test_block_lemma_randomized():
    rng = np.random.default_rng(5)
    rows = []
    for _ in range(100):
        n, m = rng.integers(1, 4, 2)
        A = rng.normal(size=(n, n)) - 3 * np.eye(n)
        if np.max(np.linalg.eigvals(A).real) >= 0:
            continue
        rep = verify_block_lemma(A, rng.normal(size=(n, m)), rng.normal(size=(m, n)), rng.normal(size=(m, m)), [1e-2, 1e-3])
        rows.extend(r for r in rep.rows if not r[4])
    assert rows and all(r[3] for r in rows)


# -- projector -------------------------------------------------------------------------
def test_projector_unit_split():
    Q = projector([[1], [0]], [[0], [1]])
    assert np.allclose(Q, np.diag([0, 1]))


def test_projector_random_float():
    rng = np.random.default_rng(2)
    for _ in range(20):
        C = rng.normal(size=(4, 4))
        B1, B2 = C[:, :1], C[:, 1:]
        Q = projector(B1, B2)
        assert np.allclose(Q @ Q, Q, atol=1e-10)
        assert np.allclose(Q @ B1, 0, atol=1e-10)
        assert np.allclose(Q @ B2, B2, atol=1e-10)


def test_projector_exact():
    B1 = SymMatrix.from_rows([["a"], ["1"], ["0"]])
    B2 = SymMatrix.from_rows([["1", "b"], ["0", "1"], ["c", "1"]])
    Q = projector(B1, B2)
    assert Q @ Q == Q
    assert (Q @ B1).is_zero
    assert Q @ B2 == B2


def test_projector_singular():
    with pytest.raises(SingularMatrixError):
        projector([[1], [0]], [[2], [0]])


# -- (HA) at sample points ------------------------------------------------------------
VALS = {"k1": 2.0, "km1": 1.5, "e0": 1.0, "i0": 0.8, "k2s": 1.0, "k3s": 1.3, "km3s": 0.7}


def test_check_ha_slowinhib(slowinhib):
    ts, d = slowinhib
    p = project_initial_value(d, linear_first_integrals(d, "M1"), [0.6, 0.1, 0.2], "M1", VALS).point
    reports = check_ha(ts, d, [p], VALS)
    a1 = [r for r in reports if r.role == "A1"][0]
    s, c1, c2 = p
    nu1 = VALS["k1"] * (VALS["e0"] - c1 - c2) + VALS["k1"] * s + VALS["km1"]
    assert a1.eigen_real_parts == [pytest.approx(-nu1)]
    assert a1.verdict == "stable"
    assert "sample points" in a1.scope


def test_check_ha_second_layer(slowinhib):
    ts, d = slowinhib
    p = project_initial_value(d, linear_first_integrals(d, "M2"), [0.6, 0.1, 0.2], "M2", VALS).point
    roles = [r.role for r in check_ha(ts, d, [p], VALS)]
    assert roles == ["A1", "B1_schur", "block_eps", "block_eps"]
    assert all(r.verdict == "stable" for r in check_ha(ts, d, [p], VALS))


def test_check_ha_unstable_scalar():
    vf = VectorField(("x", "y"), (X("x"), X("0")))
    ts = apply_surface(vf, parse_scaling(""))
    d = decompose(ts, [X("x")])
    assert check_ha(ts, d, [[0.0, 1.0]], {})[0].verdict == "unstable"


def test_check_ha_compkone(compkone):
    ts, d = compkone
    vals = {"km1": 1.0, "k2": 2.0, "e0": 1.0, "i0": 1.0, "k1s": 1.0, "k3s": 1.0, "km3s": 1.0}
    r = check_ha(ts, d, [[0.5, 0.0, 0.3]], vals)[0]
    assert r.eigen_real_parts == [pytest.approx(-3.0)]


def test_check_ha_off_manifold(slowinhib):
    ts, d = slowinhib
    with pytest.raises(OffManifoldError):
        check_ha(ts, d, [[1.0, 1.0, 0.0]], VALS)
