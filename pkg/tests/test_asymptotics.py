from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrconformal.asymptotics import (
    central_charge,
    central_coefficient,
    exact_defect,
    expand_defect,
    expand_operator,
    finite_difference_check,
    higher_order_expansion,
    numeric_kappa,
    order_swap_experiment,
    report_json,
    stagewise_pipeline,
    substitute_weight,
)
from qrconformal.errors import PoleAtZeroParam, PreconditionError
from qrconformal.exact_arith import Level, RatFunc, limit_at_infinity, taylor_in_param
from qrconformal.generators import GeneratorCatalog
from qrconformal.symbol_ore import GradedOperator

HALF = Fraction(1, 2)
X = RatFunc.xi()
XB = RatFunc.xi(Level.HBAR)
T = RatFunc.param(Level.HBAR)
cat = GeneratorCatalog(None)


def test_substitute_examples():
    s = substitute_weight(cat.L(-2), HALF)[-2]
    assert s == (XB + Fraction(3, 2) + 3 * T) / ((XB + 1 + 2 * T) * (XB + 2 + 2 * T))
    assert substitute_weight(cat.l(0), 1)[0] == XB + 1 + T
    qR = GradedOperator.homogeneous(0, 1 / (2 * RatFunc.param(Level.H) - 1))
    assert substitute_weight(qR, HALF)[0] == 1 / (2 * T)


def test_expand_l0():
    ser = expand_operator(cat.l(0), 2, HALF)
    assert ser[0][0] == X + HALF
    assert ser[1][0] == RatFunc(1)
    assert ser[2].is_zero


def test_expand_pole_at_zero():
    qR = GradedOperator.homogeneous(0, 1 / (2 * RatFunc.param(Level.H) - 1))
    with pytest.raises(PoleAtZeroParam):
        expand_operator(qR, 1, HALF)
    with pytest.raises(PreconditionError):
        expand_operator(cat.l(0), 1)


@pytest.mark.parametrize("h0", [HALF, 1])
def test_defect_order_zero_vanishes(h0):
    for i, j in [(2, -2), (3, -1), (4, -2)]:
        assert expand_defect(i, j, h0, reference="shifted").order0_empty
        assert expand_defect(i, j, h0).order0_empty


def test_order_zero_nonempty_at_generic_weight():
    assert not expand_defect(2, -2, Fraction(3, 4)).order0_empty


@pytest.mark.parametrize("h0", [HALF, 1])
def test_pipeline(h0):
    rep = stagewise_pipeline(h0)
    assert rep.passed, rep.stages
    assert rep.kappa == 4 and rep.central_charge == 8


@pytest.mark.parametrize("h0", [HALF, 1])
def test_central_coefficient_i2(h0):
    rep = central_coefficient(2, h0)
    assert rep.kappa == 4 and rep.hs_flag and rep.offdiagonal_vanish
    assert central_charge(2, h0) == 8 * T


@pytest.mark.parametrize("i", [2, 3, 4])
@pytest.mark.parametrize("h0", [HALF, 1])
def test_kappa_is_linear_in_i(i, h0):
    # the base-reference central term grows like 2i (ledgered against the cubic law)
    assert central_coefficient(i, h0).kappa == 2 * i
    assert central_coefficient(i, h0, "shifted").kappa == 0


@pytest.mark.parametrize("i,h0", [(2, 1), (3, HALF)])
def test_numeric_oracle_agrees_with_symbolic(i, h0):
    assert numeric_kappa(i, h0) == pytest.approx(float(central_coefficient(i, h0).kappa), abs=1e-4)


def test_central_term_rejects_small_index():
    with pytest.raises(PreconditionError):
        central_coefficient(1, HALF)
    with pytest.raises(PreconditionError):
        central_charge(1, HALF)


@pytest.mark.parametrize("h0", [HALF, 1])
def test_order_swap(h0):
    for i in (2, 3, 4):
        assert order_swap_experiment(i, h0) == RatFunc(0, Level.HBAR)
        assert order_swap_experiment(i, h0, "base") == 2 * i * T


def test_references_differ_by_identity():
    for h0 in (HALF, 1):
        diff = exact_defect(3, -3, h0, "base") - exact_defect(3, -3, h0, "shifted")
        assert diff == GradedOperator.homogeneous(0, 6 * T)


def test_higher_order():
    ser = higher_order_expansion(2, -2, HALF, 3)
    assert len(ser.coefficients) == 4
    with pytest.raises(PreconditionError):
        higher_order_expansion(2, -2, HALF, 5)


@given(st.integers(2, 4), st.integers(-4, -1), st.integers(-4, -1))
@settings(max_examples=10, deadline=None)
def test_expansion_is_linear(i, j, k):
    a = expand_defect(i, j, HALF)
    b = expand_defect(i, k, HALF)
    total = (exact_defect(i, j, HALF) + exact_defect(i, k, HALF))
    assert (a + b).coefficients == expand_operator(total, 1, HALF).coefficients


def test_truncated_sum_approximates_exact():
    ser = expand_defect(2, -2, HALF, order=2)
    x = exact_defect(2, -2, HALF)
    hb = Fraction(1, 1000)
    n = 7
    approx = ser.truncated_sum(hb)[0](n)
    exact = x[0].subs_param(hb)(n)
    assert abs(approx - exact) < hb ** 3 * 100


@pytest.mark.parametrize("hbar0", ["1/1000", "1/10000"])
@pytest.mark.parametrize("h0", [HALF, 1])
def test_finite_difference(hbar0, h0):
    tol = 1e-2 if hbar0 == "1/1000" else 1e-3
    for ref in ("base", "shifted"):
        assert finite_difference_check(2, h0, hbar0, 50, ref)["relative_error"] < tol


def test_linear_coefficient_limit():
    g1 = taylor_in_param(exact_defect(2, -2, 1)[0], 1)[1]
    assert limit_at_infinity(g1) == 4


def test_report_json_deterministic():
    a = report_json(2, -2, HALF)
    assert a == report_json(2, -2, "1/2")
    assert '"kappa": "4/1"' in a


def test_g1_closed_form_at_half():
    g = 2 * (X - HALF) ** 2 * (1 / (X - 1) + 1 / X) - 2 * (X + Fraction(3, 2)) ** 2 * (1 / (X + 1) + 1 / (X + 2)) + 12
    assert central_coefficient(2, HALF).g1 == g
    assert central_coefficient(2, HALF, "shifted").g1 == g - 4
