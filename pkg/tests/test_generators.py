from fractions import Fraction

import pytest

from qrconformal.errors import PreconditionError
from qrconformal.exact_arith import Level, RatFunc, limit_at_infinity
from qrconformal.generators import (
    GeneratorCatalog,
    build_L,
    build_sl2,
    defect,
    iterated_defect,
    q_R,
    uniqueness_nullspace,
    verify_berezin,
    verify_DF_relations,
    verify_fD_commutation,
    verify_fF_commutation,
    verify_sl2_table,
    verify_tensor_relation,
    verify_witt_halfplane,
    witt_nested_coefficient,
)
from qrconformal.symbol_ore import GradedOperator, apply_to_basis, op_commutator

XH = RatFunc.xi(Level.H)
H = RatFunc.param(Level.H)
cat = GeneratorCatalog(None)


def test_sl2_symbols():
    lm, l0, lp = build_sl2()
    assert lm == GradedOperator.homogeneous(-1, RatFunc(1, Level.H))
    assert l0[0] == XH + H
    assert lp[1] == XH * (XH + 2 * H - 1)


def test_sl2_examples():
    l0 = GeneratorCatalog(1).l(0)
    assert apply_to_basis(l0, 2) == {2: 3}
    assert apply_to_basis(GeneratorCatalog(Fraction(3, 4)).l(1), 0) == {}
    assert op_commutator(cat.l(0), cat.l(1)) == -cat.l(1)


def test_sl2_table_symbolic():
    reps = verify_sl2_table()
    assert len(reps) == 9 and all(r.passed for r in reps)


def test_L_matches_sl2_and_formulas():
    for i in (-1, 0, 1):
        assert cat.L(i) == cat.l(i)
    assert cat.L(2)[2] == XH * (XH - 1) * (XH - 2 + 3 * H)
    assert cat.L(-2)[-2] == (XH + 3 * H) / ((XH + 2 * H) * (XH + 2 * H + 1))


def test_J_family():
    assert cat.J(0) == cat.one
    assert cat.J(3) == cat.D ** 3
    assert cat.J(-2) == cat.F * cat.F


def test_DF_corrected_relations_hold():
    assert all(r.passed for r in verify_DF_relations())
    assert all(r.passed for r in verify_DF_relations(Fraction(3, 4)))


def test_DF_printed_relations_fail():
    reps = {r.name: r.passed for r in verify_DF_relations(printed=True)}
    assert reps["[D,l_-1] = 1"] and reps["[D,l_1] = D^2"] and reps["[l_0,F] = F"]
    assert not reps["[l_-1,F] = 1"]
    assert not reps["[l_1,F] = F^2"]


def test_berezin():
    assert all(r.passed for r in verify_berezin())
    assert all(r.passed for r in verify_berezin(Fraction(3, 4)))
    DF = GeneratorCatalog(Fraction(3, 4))
    x = RatFunc.xi()
    assert op_commutator(DF.D, DF.F)[0] == Fraction(1, 2) / ((x + Fraction(3, 2)) * (x + Fraction(1, 2)))


def test_berezin_skipped_at_half():
    reps = verify_berezin(Fraction(1, 2))
    assert reps[0].passed
    assert reps[1].skipped and "q_R" in reps[1].skipped
    with pytest.raises(PreconditionError):
        q_R(Fraction(1, 2))


@pytest.mark.parametrize("family", ["L", "J"])
def test_tensor_relations(family):
    for i in (-1, 0, 1):
        for n in range(-8, 9):
            assert verify_tensor_relation(i, n, family).passed


def test_tensor_examples():
    assert op_commutator(cat.l(1), cat.L(-2)) == 3 * cat.L(-1)
    assert op_commutator(cat.l(0), cat.D) == -cat.D
    assert op_commutator(cat.l(-1), cat.L(0)) == -cat.L(-1)


def test_witt_halfplanes():
    for n in range(-1, 6):
        for m in range(-1, 6):
            assert verify_witt_halfplane(n, m).passed
    for n in range(-5, 2):
        for m in range(-5, 2):
            assert verify_witt_halfplane(n, m).passed
    assert op_commutator(cat.L(-4), cat.L(-2)) == -2 * cat.L(-6)
    with pytest.raises(PreconditionError):
        verify_witt_halfplane(2, -2)


def test_mixed_sign_defects_are_homogeneous():
    for i, j in [(2, -2), (3, -2), (2, -4), (4, -3)]:
        d = defect(i, j)
        assert d.degrees() == {i + j}


@pytest.mark.parametrize("n", range(-1, 5))
def test_fD_corrected(n):
    for f in ([0, 1], [0, 0, 1], [2, -1, 0, 5], [0, 0, 0, 0, 0, 0, 1]):
        assert verify_fD_commutation(n, f).passed


def test_fD_examples():
    D = cat.D
    assert op_commutator(cat.L(0), D) == -D
    assert op_commutator(cat.L(1), D * D) == -2 * D ** 3
    assert op_commutator(cat.L(-1), D) == -cat.one


def test_fD_printed_sign_fails_for_odd_power():
    assert not verify_fD_commutation(1, [0, 0, 1], printed=True).passed
    assert not verify_fD_commutation(-1, [0, 1], printed=True).passed
    assert verify_fD_commutation(0, [0, 0, 1], printed=True).passed


@pytest.mark.parametrize("n", range(-1, 5))
def test_fF(n):
    for f in ([0, 1], [1, 0, 3], [0, 0, 0, 2]):
        assert verify_fF_commutation(n, f).passed


def test_fF_printed_derivative_fails():
    assert not verify_fF_commutation(0, [0, 0, 1], printed=True).passed


def test_iterated_defect():
    assert iterated_defect([2, -2]) == op_commutator(cat.L(2), cat.L(-2)) - 4 * cat.L(0)
    assert iterated_defect([1, -1]).is_zero
    r = iterated_defect([2, -2, 1], Fraction(3, 4))
    assert r.degrees() == {1}
    assert limit_at_infinity(r[1]) == 0
    assert witt_nested_coefficient([2, -2, 1]) == (-4, 1)


def test_defect_factor_vanishes_at_special_weights():
    for i, j in [(2, -2), (3, -2), (4, -3)]:
        d = defect(i, j)
        for h in (0, Fraction(1, 2), 1):
            assert d.subs_param(h).is_zero


def test_uniqueness_nullspace():
    sols = uniqueness_nullspace(3)
    assert sols
    x = RatFunc.xi()
    for num, den in sols:
        assert RatFunc.from_coeffs(num, den) == x


def test_build_L_concrete_matches_symbolic():
    for k in (-3, 2):
        assert build_L(k, Fraction(3, 4)) == build_L(k).subs_param(Fraction(3, 4))
