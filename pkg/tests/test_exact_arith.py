from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrconformal.errors import Divergent, PoleAtPoint, PoleAtZeroParam, TowerMismatch
from qrconformal.exact_arith import (
    Level,
    RatFunc,
    falling_factorial,
    limit_at_infinity,
    parse_scalar,
    ratfunc_eval,
    ratfunc_normalize,
    ratfunc_shift,
    scalar_str,
    taylor_in_param,
)

X = RatFunc.xi()
XH = RatFunc.xi(Level.H)
H = RatFunc.param(Level.H)
XB = RatFunc.xi(Level.HBAR)
T = RatFunc.param(Level.HBAR)

small = st.integers(-5, 5)
coeffs = st.lists(small, min_size=1, max_size=4)


@st.composite
def ratfuncs(draw):
    num = draw(coeffs)
    den = draw(coeffs.filter(any))
    return RatFunc.from_coeffs(num, den)


def test_normalize_cancels_common_factor():
    assert ratfunc_normalize(X ** 2 - 1, X - 1) == X + 1
    num, den = ratfunc_normalize(X ** 2 - 1, X - 1).canonical()
    assert num == [1, 1] and den == [1]


def test_normalize_makes_denominator_monic():
    f = ratfunc_normalize(2 * X, RatFunc(4))
    assert f.canonical() == ([0, Fraction(1, 2)], [1])


def test_coprime_input_unchanged():
    num, den = (XH + 3 * H) ** 2, (XH + 2 * H) * (XH + 2 * H + 1)
    f = ratfunc_normalize(num, den)
    assert f.num_degree == 2 and f.den_degree == 2
    assert f * den == num


def test_zero_denominator_rejected():
    with pytest.raises(ZeroDivisionError):
        ratfunc_normalize(X, RatFunc(0))


def test_eval():
    f = (XH + 1) / (XH + 2 * H)
    assert f.subs_param(Fraction(3, 4))(0) == Fraction(2, 3)
    assert ratfunc_eval(RatFunc(Fraction(5, 3)), 17) == Fraction(5, 3)
    with pytest.raises(PoleAtPoint):
        ratfunc_eval(X / (X - 1), 1)


def test_shift_examples():
    f = 1 / (XH + 2 * H)
    assert ratfunc_shift(f, -1) == 1 / (XH - 1 + 2 * H)
    assert ratfunc_shift(X, 2) == X + 2
    g = (X ** 2 + 1) / X
    assert ratfunc_shift(g, 0) == g


def test_taylor_examples():
    assert taylor_in_param(1 / (XB + 2 * T), 1) == [1 / X, -2 / X ** 2]
    q = (2 * H - 1).substitute_weight(Fraction(1, 2))
    assert taylor_in_param(q, 1) == [RatFunc(0), RatFunc(2)]
    sq = (XB + Fraction(3, 2) + 3 * T) ** 2
    assert taylor_in_param(sq, 1) == [(X + Fraction(3, 2)) ** 2, 6 * (X + Fraction(3, 2))]


def test_taylor_pole_at_zero():
    with pytest.raises(PoleAtZeroParam):
        taylor_in_param(XB / T, 2)
    with pytest.raises(TowerMismatch):
        taylor_in_param(XH / H, 1)


def test_limit_examples():
    assert limit_at_infinity((4 * X + 2) / X) == 4
    assert limit_at_infinity((1 / (XH + 2 * H))) == RatFunc(0, Level.H)
    with pytest.raises(Divergent):
        limit_at_infinity(X ** 2)


def test_limit_keeps_parameter():
    f = ((2 + T) * XB + 1) / (XB + T)
    assert limit_at_infinity(f) == 2 + T


def test_tower_mismatch():
    with pytest.raises(TowerMismatch):
        XH + XB
    assert (X + H).level is Level.H


def test_parse_scalar():
    assert parse_scalar("3/4") == Fraction(3, 4)
    assert parse_scalar("-2") == -2
    assert scalar_str(Fraction(6, 8)) == "3/4"
    assert scalar_str(2) == "2/1"
    for bad in ("0.5", "1e3", "x"):
        with pytest.raises(ValueError):
            parse_scalar(bad)


def test_falling_factorial():
    assert falling_factorial(3) == X * (X - 1) * (X - 2)
    assert falling_factorial(0) == RatFunc(1)


def test_diff():
    assert (1 / X).diff() == -1 / X ** 2


@given(ratfuncs(), ratfuncs(), ratfuncs())
@settings(max_examples=40, deadline=None)
def test_field_axioms(f, g, k):
    assert (f + g) + k == f + (g + k)
    assert (f * g) * k == f * (g * k)
    assert f * (g + k) == f * g + f * k
    if g:
        assert (f / g) * g == f


@given(ratfuncs(), st.fractions(min_value=-10, max_value=10, max_denominator=7))
@settings(max_examples=40, deadline=None)
def test_shift_inverse(f, a):
    assert ratfunc_shift(ratfunc_shift(f, a), -a) == f


@given(ratfuncs())
@settings(max_examples=40, deadline=None)
def test_limit_matches_reciprocal_substitution(f):
    # oracle: f(1/t) at t = 0 after clearing powers of t
    num, den = f.canonical()
    dn, dd = len(num) - 1, len(den) - 1
    if dn > dd:
        with pytest.raises(Divergent):
            limit_at_infinity(f)
        return
    # t^dd f(1/t) = (sum num_k t^(dd-k)) / (sum den_k t^(dd-k)); value at t = 0
    top = num[dd] if dd < len(num) else Fraction(0)
    assert limit_at_infinity(f) == top / den[dd]


@given(st.lists(small, min_size=1, max_size=3), st.lists(small, min_size=1, max_size=3))
@settings(max_examples=30, deadline=None)
def test_taylor_partial_sums(a, b):
    # f = (a(xi) + hbar) / (b(xi) + 1 + hbar^2 * xi): compare partial sums at a small hbar0
    f = (RatFunc.from_coeffs(a, level=Level.HBAR) + T) / (
        RatFunc.from_coeffs(b, level=Level.HBAR) * RatFunc.from_coeffs(b, level=Level.HBAR) + 1 + T * T * XB
    )
    n = 3
    cs = taylor_in_param(f, n + 1)
    hb, point = Fraction(1, 1000), 2
    exact = f.subs_param(hb)(point)
    partial = sum(c(point) * hb ** k for k, c in enumerate(cs[: n + 1]))
    lead = cs[n + 1](point) * hb ** (n + 1)
    assert abs(exact - partial - lead) <= abs(hb) ** (n + 2) * 10 ** 6
