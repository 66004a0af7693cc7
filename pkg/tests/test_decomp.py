import pytest

from threescale.decomp import A1, A2, decompose, parse_mu, residual, suggest_mu
from threescale.errors import DecompositionError, DegenerateDecompositionError, ParseError, PreconditionError
from threescale.field import VectorField
from threescale.network import parse_model
from threescale.scaling import apply_surface, parse_scaling
from threescale.symcore import SymMatrix
from threescale.symcore import parse_expr as X

from .conftest import BUNDLED, decomposed, model_path, system


def col(*items):
    return SymMatrix.column([X(i) for i in items])


def test_slowinhib_factors(slowinhib):
    _, d = slowinhib
    assert d.P1 == col("1", "-1", "0")
    assert d.P2 == col("0", "0", "1")
    assert d.R is None


def test_compkone_factor(compkone):
    _, d = compkone
    assert d.P1 == col("km1", "-(km1 + k2)", "0")


def test_empty_mu_rejected():
    ts = system("compinhib.txt", "compinhib_slowinhib.scaling")
    with pytest.raises(PreconditionError):
        decompose(ts, [])


def test_not_expressible():
    ts = system("compinhib.txt", "compinhib_slowinhib.scaling")
    with pytest.raises(DecompositionError) as info:
        decompose(ts, [X("c2")])
    assert info.value.residual


def test_rank_deficiency():
    ts = system("compinhib.txt", "compinhib_k1zero.scaling")
    with pytest.raises(DegenerateDecompositionError):
        decompose(ts, [X("c1"), X("2*c1")])


@pytest.mark.parametrize("model,case", BUNDLED)
def test_residual_zero_and_A1_nonsingular(model, case):
    ts, d = decomposed(model, case)
    assert all(r.is_zero for r in residual(ts, d))
    assert not A1(d).det().is_zero


def test_A1_slowinhib(slowinhib):
    _, d = slowinhib
    nu1 = X("k1*e + k1*s + km1")
    assert A1(d).tolist() == [[-nu1]]


def test_A2_slowinhib(slowinhib):
    ts, d = slowinhib
    expected = SymMatrix.from_rows(
        [
            [X("-k1*(e0 - c1 - c2) - k1*s - km1"), X("eps1*k1*s")],
            [X("k3s*(i0 - c2)"), X("-eps1*(k3s*(e0 + i0 - c1 - 2*c2) + km3s)")],
        ]
    )
    got = A2(d).map(ts.field.expand)
    assert got == expected


def test_trivial_A1():
    vf = VectorField(("x", "y"), (X("-x"), X("0")))
    ts = apply_surface(vf, parse_scaling(""))
    d = decompose(ts, [X("x")])
    assert d.P1 == col("-1", "0")
    d2 = decompose(apply_surface(VectorField(("x", "y"), (X("x"), X("0"))), parse_scaling("")), [X("x")])
    assert A1(d2).tolist() == [[X("1")]]


def test_suggest_mu_compkone():
    ts = system("compinhib.txt", "compinhib_k1zero.scaling")
    cands = suggest_mu(ts)
    assert [X("c1")] in cands


def test_suggest_mu_slowinhib():
    ts = system("compinhib.txt", "compinhib_slowinhib.scaling")
    net = parse_model(open(model_path("compinhib.txt"), encoding="utf-8").read()).network
    cands = suggest_mu(ts, net)
    assert cands
    d = decompose(ts, cands[0])
    assert all(r.is_zero for r in residual(ts, d))
    # the binding/unbinding flux, up to a constant factor
    ratio = ts.field.expand(cands[0][0]) / X("km1*c1 - k1*s*(e0 - c1 - c2)")
    assert ratio.is_constant


def test_suggest_mu_zero_field():
    ts = apply_surface(VectorField(("x",), (X("0"),)), parse_scaling(""))
    assert suggest_mu(ts) == []


def test_parse_mu_errors():
    with pytest.raises(ParseError):
        parse_mu("mu2: c2\n")
    with pytest.raises(ParseError):
        parse_mu("mu1: c1\nmu1: c2\n")
    assert parse_mu("mu1: c1; c2\n")[0] == (X("c1"), X("c2"))
