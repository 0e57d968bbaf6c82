import json
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrconformal.errors import CancellationWarning, ModuleUndefined, TowerMismatch
from qrconformal.exact_arith import Level, RatFunc, falling_factorial
from qrconformal.generators import GeneratorCatalog, monomials_L
from qrconformal.symbol_ore import (
    GradedOperator,
    MonomialForm,
    apply_to_basis,
    eval_symbol_at,
    from_monomials,
    grade_of,
    is_homogeneous,
    op_add,
    op_commutator,
    op_mul,
    operator_from_json,
    operator_to_json,
    to_monomials,
    validate_membership,
)

XH = RatFunc.xi(Level.H)
H = RatFunc.param(Level.H)
X = RatFunc.xi()
one_h = RatFunc(1, Level.H)
cat = GeneratorCatalog(None)


def test_from_monomials_examples():
    assert from_monomials(MonomialForm.of((0, RatFunc(1), 1))) == GradedOperator.homogeneous(1, X)
    F = from_monomials(MonomialForm.of((1, 1 / (XH + 2 * H), 0)))
    assert F == GradedOperator.homogeneous(-1, 1 / (XH + 2 * H))
    zd2 = from_monomials(MonomialForm.of((1, RatFunc(1), 2)))
    assert zd2 == GradedOperator.homogeneous(1, X * (X - 1))


def test_l1_two_monomial_forms_agree():
    a = from_monomials(MonomialForm.of((1, one_h, 2), (0, 2 * H, 1)))
    b = from_monomials(MonomialForm.of((0, XH + 2 * H, 1)))
    assert a == b == cat.l(1)
    assert a[1] == XH * (XH + 2 * H - 1)


def test_op_add():
    x = cat.L(2)
    assert op_add(x, GradedOperator.zero(Level.H)) == x
    assert op_add(x, -x).is_zero
    zd2 = from_monomials(MonomialForm.of((1, one_h, 2)))
    twohd = from_monomials(MonomialForm.of((0, 2 * H, 1)))
    assert op_add(zd2, twohd) == cat.l(1)


def test_op_mul_examples():
    D, F = cat.D, cat.F
    assert op_mul(D, F) == GradedOperator.homogeneous(0, (XH + 1) / (XH + 2 * H))
    assert op_mul(F, D) == GradedOperator.homogeneous(0, XH / (XH + 2 * H - 1))
    LL = op_mul(cat.L(2), cat.L(-2))
    assert LL == GradedOperator.homogeneous(
        0, (XH + 3 * H) ** 2 * (XH + 1) * (XH + 2) / ((XH + 2 * H) * (XH + 2 * H + 1))
    )


def test_op_commutator_examples():
    assert op_commutator(cat.D, cat.F)[0] == (2 * H - 1) / ((XH + 2 * H) * (XH + 2 * H - 1))
    assert op_commutator(cat.l(1), cat.l(-1)) == 2 * cat.l(0)
    want = (XH + 3 * H) ** 2 * (XH + 1) * (XH + 2) / ((XH + 2 * H) * (XH + 2 * H + 1)) - (
        XH + 3 * H - 2
    ) ** 2 * XH * (XH - 1) / ((XH + 2 * H - 1) * (XH + 2 * H - 2))
    assert op_commutator(cat.L(2), cat.L(-2)) == GradedOperator.homogeneous(0, want)


def test_tower_mismatch():
    with pytest.raises(TowerMismatch):
        cat.D + GradedOperator.homogeneous(0, RatFunc.param(Level.HBAR))


def test_membership_concrete():
    F = from_monomials(MonomialForm.of((1, 1 / (XH + 2 * H), 0)))
    assert validate_membership(F, Fraction(3, 4)).valid
    rep = validate_membership(F, 0)
    assert not rep.valid and rep.offending == [(-1, 0)]


def test_membership_symbolic_lists_excluded_weights():
    rep = validate_membership(cat.L(-2))
    assert rep.valid
    assert not rep.unresolved_factors
    # (xi + 2h)(xi + 2h + 1) vanishes at n >= 0 exactly for h in {0, -1/2, -1, ...}
    assert [(e.start, e.step) for e in rep.excluded_h] == [(0, Fraction(-1, 2))]
    for bad in (0, Fraction(-1, 2), -3):
        assert any(e.contains(Fraction(bad)) for e in rep.excluded_h)
        assert not validate_membership(cat.L(-2), bad).valid
    assert validate_membership(cat.L(-2), Fraction(1, 2)).valid


def test_eval_symbol_examples():
    assert eval_symbol_at(cat.D, 1, 0, Fraction(1, 3)) == 0
    assert eval_symbol_at(cat.L(-2), -2, 0, Fraction(3, 4)) == Fraction(3, 5)
    with pytest.raises(ModuleUndefined):
        eval_symbol_at(cat.F, -1, 0, 0)


def test_cancellation_warning_on_composite():
    prod = op_mul(cat.L(-2), cat.L(2))
    # the true action kills z^0 (falling factorial), the reduced symbol does not
    assert monomials_L(2, Fraction(1, 2)).act(0) == {}
    with pytest.warns(CancellationWarning):
        v = eval_symbol_at(prod, 0, 0, Fraction(1, 2))
    assert v == Fraction(1, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("error", CancellationWarning)
        assert eval_symbol_at(prod, 0, 0, Fraction(3, 4)) == 0


def test_grades():
    assert grade_of(cat.l(0)) == {0}
    assert grade_of(cat.L(5)) == {5}
    assert grade_of(cat.D + cat.F) == {1, -1}
    assert is_homogeneous(cat.L(-3), -3)
    assert not is_homogeneous(cat.D + cat.F, 1)


def test_json_roundtrip():
    for x in (cat.L(-2), cat.D + cat.F, GeneratorCatalog(Fraction(3, 4)).L(3)):
        blob = json.dumps(operator_to_json(x), sort_keys=True)
        assert operator_from_json(blob) == x
    data = operator_to_json(GeneratorCatalog(Fraction(1, 2)).L(-1))
    assert data["components"][0] == {"degree": -1, "num": ["1/1"], "den": ["1/1"]}


homog = st.sampled_from([("L", k) for k in range(-3, 4)] + [("J", k) for k in (-2, -1, 1, 2)] + [("l", k) for k in (-1, 0, 1)])


@given(homog, homog, homog)
@settings(max_examples=25, deadline=None)
def test_associativity(a, b, c):
    x, y, z = (cat.family(*t) for t in (a, b, c))
    assert (x * y) * z == x * (y * z)


@given(homog, homog, homog)
@settings(max_examples=25, deadline=None)
def test_jacobi_and_antisymmetry(a, b, c):
    x, y, z = (cat.family(*t) for t in (a, b, c))
    assert op_commutator(x, y) == -op_commutator(y, x)
    total = op_commutator(x, op_commutator(y, z)) + op_commutator(y, op_commutator(z, x)) + op_commutator(
        z, op_commutator(x, y)
    )
    assert total.is_zero


@given(homog, st.sampled_from([Fraction(3, 4), Fraction(5, 4), Fraction(1, 3), 2]))
@settings(max_examples=25, deadline=None)
def test_symbol_action_matches_monomials(a, h):
    x = GeneratorCatalog(h).family(*a)
    if not validate_membership(x).valid:
        return
    mf = to_monomials(x)
    for n in range(12):
        assert apply_to_basis(x, n) == mf.act(n)


@pytest.mark.parametrize("name", [("L", 2), ("L", -3), ("J", 2), ("l", 1), ("J", -1)])
def test_grading_is_ad_l0(name):
    x = cat.family(*name)
    y = x + cat.D
    expected = GradedOperator.zero(Level.H)
    for d, s in y.components.items():
        expected = expected + d * GradedOperator.homogeneous(d, s)
    assert op_commutator(y, cat.l(0)) == expected


@pytest.mark.parametrize("a,b", [(0, 0), (1, 0), (0, 2), (3, 1), (1, 3), (2, 2), (4, 2)])
def test_reordering_oracle(a, b):
    dz = op_mul(from_monomials(MonomialForm.of((0, RatFunc(1), b))), from_monomials(MonomialForm.of((a, RatFunc(1), 0))))
    if b <= a:
        ref = MonomialForm.of((a - b, falling_factorial(b, shift=a), 0))
    else:
        ref = MonomialForm.of((0, falling_factorial(a, shift=b), b - a))
    assert from_monomials(ref) == dz
    for n in range(31):
        assert apply_to_basis(dz, n) == ref.act(n)
