from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from threescale.errors import DimensionError, EvaluationError, InvalidExpressionError, ParseError, SingularMatrixError
from threescale.symcore import (
    ONE,
    ZERO,
    RationalExpr,
    SymMatrix,
    canonicalize,
    det,
    differentiate,
    invert,
    jacobian,
    parse_expr,
    substitute,
)

X = parse_expr
VARS = ("x", "y", "z")

# -- strategies -------------------------------------------------------------------
coef = st.integers(-3, 3)
monomial = st.tuples(coef, st.integers(0, 2), st.integers(0, 2), st.integers(0, 1))


def _poly(terms):
    out = ZERO
    for c, a, b, d in terms:
        out = out + RationalExpr.const(c) * X("x") ** a * X("y") ** b * X("z") ** d
    return out


polys = st.lists(monomial, min_size=1, max_size=4).map(_poly)
nonzero_polys = polys.filter(lambda p: not p.is_zero)
exprs = st.builds(lambda n, d: n / d, polys, nonzero_polys)
points = st.fixed_dictionaries({v: st.fractions(-5, 5, max_denominator=7) for v in VARS})
fast = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])


# -- canonical form -------------------------------------------------------------
def test_common_factor():
    assert canonicalize(X("(2*s)/4")) == X("s/2")
    assert X("(2*s)/4") == X("s") / 2


def test_gcd_cancellation():
    assert X("(s^2 - c1^2)/(s - c1)") == X("s + c1")
    assert X("(s^2 - c1^2)/(s - c1)").is_polynomial


def test_sign_convention():
    e = X("(-s)/(-k1)")
    assert e == X("s/k1")
    lead = e.den.sorted_terms()[0][1]
    assert lead > 0


def test_zero_denominator_rejected():
    with pytest.raises(InvalidExpressionError):
        RationalExpr(X("s").num, ZERO.num)
    with pytest.raises(ParseError):
        X("s/0")
    with pytest.raises(InvalidExpressionError):
        X("s") / ZERO


@fast
@given(exprs)
def test_canonicalize_idempotent(e):
    c = canonicalize(e)
    assert canonicalize(c) == c
    assert (c.num, c.den) == (e.num, e.den)


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(exprs, exprs, exprs)
def test_congruence(a, c, k):
    # b and d are differently written representatives of a and c
    b = (a * k) / k if not k.is_zero else a
    d = (c + k) - k
    assert a == b and c == d
    assert a + c == b + d
    assert a * c == b * d


@fast
@given(exprs, exprs, st.sampled_from(VARS))
def test_leibniz(e1, e2, v):
    lhs = differentiate(e1 * e2, v)
    rhs = differentiate(e1, v) * e2 + e1 * differentiate(e2, v)
    assert lhs == rhs


@fast
@given(exprs, exprs, points)
def test_evaluation_commutes(a, b, pt):
    try:
        va, vb = a.evaluate(pt), b.evaluate(pt)
    except EvaluationError:
        return
    assert (a + b).evaluate(pt) == va + vb
    assert (a - b).evaluate(pt) == va - vb
    assert (a * b).evaluate(pt) == va * vb
    if vb != 0 and not b.is_zero:
        try:
            q = (a / b).evaluate(pt)
        except EvaluationError:
            return
        assert q == va / vb


# -- derivatives ------------------------------------------------------------------
def test_derivative_examples():
    assert differentiate(X("k1*s*(e0-c1-c2)"), "s") == X("k1*(e0-c1-c2)")
    assert differentiate(X("km1*c1 - k1*s*(e0-c1-c2)"), "c1") == X("km1 + k1*s")
    assert differentiate(X("1/s"), "s") == X("-1/s^2")


def test_derivative_through_atoms():
    aux = {"e": X("e0 - c1 - c2")}
    assert differentiate(X("km1*c1 - k1*s*e"), "c1", aux) == X("km1 + k1*s")


def test_jacobian_examples():
    J = jacobian([X("c1"), X("c2")], ["s", "c1", "c2"])
    assert J.tolist() == [[ZERO, ONE, ZERO], [ZERO, ZERO, ONE]]
    assert jacobian([X("s*c1")], ["s", "c1"]).tolist() == [[X("c1"), X("s")]]


def test_jacobian_of_mu_with_atoms():
    # e0 = 0 competitive inhibition; atoms e = -c1 - c2 and i = i0 - c2
    aux = {"e": X("-c1 - c2"), "i": X("i0 - c2")}
    mu = [X("km1*c1 - k1*s*e"), X("k3*e*i - km3*c2")]
    J = jacobian(mu, ["s", "c1", "c2"], aux)
    expect = [
        [X("-k1*e"), X("k1*s + km1"), X("k1*s")],
        [ZERO, X("-k3*i"), X("-(k3*i + k3*e + km3)")],
    ]
    assert J.tolist() == expect


# -- determinants and inverses ----------------------------------------------------
def test_det_example_4_5():
    M = SymMatrix.from_rows([[X("-(k1*e + k1*s + km1)"), X("k1*s")], [X("k3*i"), X("-(k3*i + k3*e + km3)")]])
    expect = X("k1*k3*i*e + k1*k3*e^2 + k1*km3*e + k1*k3*s*e + k1*km3*s + km1*k3*i + km1*k3*e + km1*km3")
    assert det(M) == expect


def test_det_identity_and_nonsquare():
    assert det(SymMatrix.identity(3)) == ONE
    with pytest.raises(DimensionError):
        det(SymMatrix.zeros(2, 3))


square3 = st.lists(st.lists(polys, min_size=3, max_size=3), min_size=3, max_size=3).map(SymMatrix.from_rows)


@settings(max_examples=20, deadline=None)
@given(square3, square3)
def test_det_multiplicative(M, N):
    assert det(M @ N) == det(M) * det(N)


@settings(max_examples=20, deadline=None)
@given(square3)
def test_inverse_roundtrip(M):
    try:
        Mi = invert(M)
    except SingularMatrixError:
        assert det(M).is_zero
        return
    assert Mi @ M == SymMatrix.identity(3)
    assert M @ Mi == SymMatrix.identity(3)


def test_inverse_examples():
    assert invert(SymMatrix.from_rows([[X("a"), ZERO], [ZERO, X("b")]])).tolist() == [[X("1/a"), ZERO], [ZERO, X("1/b")]]
    assert invert(SymMatrix.from_rows([[X("-nu1")]])).tolist() == [[X("-1/nu1")]]
    with pytest.raises(SingularMatrixError):
        invert(SymMatrix.from_rows([[X("a"), X("b")], [X("2*a"), X("2*b")]]))


# -- substitution -------------------------------------------------------------------
def test_substitute_examples():
    e = X("(km1 + k2)*c1")
    assert substitute(e, {"k2": X("eps1*eps2*k2s")}) == X("(km1 + eps1*eps2*k2s)*c1")
    assert substitute(e, {"c1": X("c1")}) == e
    assert substitute(X("a + eps2*b"), {"eps2": 0}) == X("a")


def test_substitute_simultaneous():
    assert substitute(X("x - y"), {"x": X("y"), "y": X("x")}) == X("y - x")


def test_substitute_rational_binding():
    assert substitute(X("x^2 + 1"), {"x": X("1/y")}) == X("(1 + y^2)/y^2")


def test_substitute_zero_denominator():
    with pytest.raises(EvaluationError):
        substitute(X("1/(x - y)"), {"x": X("y")})


# -- parser ---------------------------------------------------------------------------
def test_parser_precedence():
    assert X("2 + 3*4^2") == RationalExpr.const(50)
    assert X("-x^2") == -(X("x") ** 2)
    assert X("(1/2)*x") == X("x") / 2


def test_parser_error_location():
    with pytest.raises(ParseError) as info:
        X("x + * y")
    assert info.value.column is not None


def test_evaluate_exact_and_float():
    e = X("x/(y+1)")
    assert e.evaluate({"x": Fraction(1), "y": Fraction(2)}) == Fraction(1, 3)
    assert abs(e.evaluate({"x": 1.0, "y": 2.0}) - 1 / 3) < 1e-15
