"""The sl(2) generators, the D/F pair and the L_k, J_k families in symbol form.

A *weight* is either a ``Fraction`` (concrete h) or ``None`` (symbolic h).
Generator symbols:

    l_-1 = z                    s = 1            (degree -1)
    l_0  = xi + h               s = xi + h       (degree 0)
    l_1  = z d^2 + 2h d         s = xi(xi+2h-1)  (degree 1)
    D    = d                    s = xi
    F    = z / (xi + 2h)        s = 1/(xi+2h)
    L_k  = (xi + (k+1)h) d^k    (k >= 0)
    L_-k = z^k (xi+(k+1)h) / ((xi+2h)...(xi+2h+k-1))   (k >= 1)
    J_k  = D^k,  J_-k = F^k
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .errors import ModuleUndefined, PreconditionError
from .exact_arith import Level, RatFunc, ScalarLike, from_qq, parse_scalar, to_qq
from .symbol_ore import (
    GradedOperator,
    Monomial,
    MonomialForm,
    from_monomials,
    op_commutator,
    validate_membership,
)

Weight = "Fraction | None"


def weight_level(weight) -> Level:
    return Level.H if weight is None else Level.Q


def h_value(weight) -> RatFunc:
    """The weight as a constant rational function (symbolic ``h`` when None)."""
    if weight is None:
        return RatFunc.param(Level.H)
    return RatFunc.const(weight)


def _norm_weight(weight):
    return None if weight is None else parse_scalar(weight)


def _require_member(x: GradedOperator | MonomialForm, weight, name: str) -> None:
    if weight is None:
        return
    rep = validate_membership(x, weight)
    if not rep.valid:
        d, n = rep.offending[0]
        raise ModuleUndefined(n, f"{name} has a pole in degree {d} at h = {weight}")


# ---------------------------------------------------------------------------
# monomial forms of the generators (used for exact matrix evaluation)


def monomials_L(k: int, weight) -> MonomialForm:
    h = h_value(_norm_weight(weight))
    lvl = h.level
    x = RatFunc.xi(lvl)
    if k >= 0:
        return MonomialForm.of((0, x + (k + 1) * h, k))
    m = -k
    den = RatFunc.const(1, lvl)
    for t in range(m):
        den = den * (x + 2 * h + t)
    return MonomialForm.of((m, (x + (m + 1) * h) / den, 0))


def monomials_J(k: int, weight) -> MonomialForm:
    h = h_value(_norm_weight(weight))
    lvl = h.level
    if k >= 0:
        return MonomialForm.of((0, RatFunc.const(1, lvl), k))
    x = RatFunc.xi(lvl)
    den = RatFunc.const(1, lvl)
    for t in range(-k):
        den = den * (x + 2 * h + t)
    return MonomialForm.of((-k, 1 / den, 0))


def monomials_sl2(i: int, weight) -> MonomialForm:
    h = h_value(_norm_weight(weight))
    lvl = h.level
    x = RatFunc.xi(lvl)
    if i == -1:
        return MonomialForm.of((1, RatFunc.const(1, lvl), 0))
    if i == 0:
        return MonomialForm.of((0, x + h, 0))
    if i == 1:
        # z d^2 + 2h d
        return MonomialForm.of((1, RatFunc.const(1, lvl), 2), (0, 2 * h, 1))
    raise ValueError(f"sl2 index must be -1, 0 or 1, got {i}")


# ---------------------------------------------------------------------------
# builders


@lru_cache(maxsize=None)
def _build_sl2(weight):
    return tuple(from_monomials(monomials_sl2(i, weight)) for i in (-1, 0, 1))


def build_sl2(weight=None) -> tuple[GradedOperator, GradedOperator, GradedOperator]:
    """``(l_-1, l_0, l_1)``."""
    return _build_sl2(_norm_weight(weight))


@lru_cache(maxsize=None)
def _build_J(k: int, weight):
    m = monomials_J(k, weight)
    _require_member(m, weight, f"J_{k}")
    return from_monomials(m)


def build_J(k: int, weight=None) -> GradedOperator:
    return _build_J(k, _norm_weight(weight))


def build_DF(weight=None) -> tuple[GradedOperator, GradedOperator]:
    """``(D, F)``; raises ``ModuleUndefined`` at weights where F has integer poles."""
    return build_J(1, weight), build_J(-1, weight)


@lru_cache(maxsize=None)
def _build_L(k: int, weight):
    m = monomials_L(k, weight)
    _require_member(m, weight, f"L_{k}")
    return from_monomials(m)


def build_L(k: int, weight=None) -> GradedOperator:
    return _build_L(k, _norm_weight(weight))


def identity(weight=None) -> GradedOperator:
    return GradedOperator.identity(weight_level(_norm_weight(weight)))


def q_R(weight=None) -> RatFunc:
    """``1/(2h - 1)``; undefined at h = 1/2."""
    h = h_value(_norm_weight(weight))
    if h == Fraction(1, 2):
        raise PreconditionError("q_R = 1/(2h-1) is undefined at h = 1/2")
    return 1 / (2 * h - 1)


@dataclass
class GeneratorCatalog:
    """Cached generators for one weight (``None`` = symbolic h)."""

    weight: Fraction | None = None

    def __post_init__(self):
        self.weight = _norm_weight(self.weight)

    @property
    def level(self) -> Level:
        return weight_level(self.weight)

    def l(self, i: int) -> GradedOperator:
        return build_sl2(self.weight)[i + 1]

    def L(self, k: int) -> GradedOperator:
        return build_L(k, self.weight)

    def J(self, k: int) -> GradedOperator:
        return build_J(k, self.weight)

    @property
    def D(self) -> GradedOperator:
        return build_J(1, self.weight)

    @property
    def F(self) -> GradedOperator:
        return build_J(-1, self.weight)

    @property
    def one(self) -> GradedOperator:
        return identity(self.weight)

    def family(self, name: str, k: int) -> GradedOperator:
        return {"L": self.L, "J": self.J, "l": self.l}[name](k)


# ---------------------------------------------------------------------------
# identity reports


@dataclass
class IdentityReport:
    name: str
    residual: GradedOperator
    skipped: str | None = None

    @property
    def passed(self) -> bool:
        return self.skipped is None and self.residual.is_zero

    def to_json(self) -> dict:
        out = {"name": self.name, "passed": self.passed}
        if self.skipped:
            out["skipped"] = self.skipped
        else:
            out["residual"] = self.residual.to_json()
        return out


def _report(name: str, lhs: GradedOperator, rhs) -> IdentityReport:
    return IdentityReport(name, lhs - rhs)


def verify_sl2_table(weight=None) -> list[IdentityReport]:
    """All nine brackets ``[l_i, l_j] = (i - j) l_{i+j}``."""
    cat = GeneratorCatalog(weight)
    out = []
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            rhs = (i - j) * cat.l(i + j) if abs(i + j) <= 1 else GradedOperator.zero(cat.level)
            out.append(_report(f"[l_{i},l_{j}] = {i - j} l_{i + j}", op_commutator(cat.l(i), cat.l(j)), rhs))
    return out


def verify_DF_relations(weight=None, printed: bool = False) -> list[IdentityReport]:
    """The six commutators of D and F with sl(2).

    D: ``[D,l_-1] = 1, [D,l_0] = D, [D,l_1] = D^2``.
    F: ``[l_1,F] = 1, [l_0,F] = F, [l_-1,F] = F^2`` (grading forces the roles of
    l_1 and l_-1; ``printed=True`` checks the swapped form instead, which fails).
    """
    cat = GeneratorCatalog(weight)
    D, F, one = cat.D, cat.F, cat.one
    out = [
        _report("[D,l_-1] = 1", op_commutator(D, cat.l(-1)), one),
        _report("[D,l_0] = D", op_commutator(D, cat.l(0)), D),
        _report("[D,l_1] = D^2", op_commutator(D, cat.l(1)), D * D),
    ]
    if printed:
        out += [
            _report("[l_-1,F] = 1", op_commutator(cat.l(-1), F), one),
            _report("[l_0,F] = F", op_commutator(cat.l(0), F), F),
            _report("[l_1,F] = F^2", op_commutator(cat.l(1), F), F * F),
        ]
    else:
        out += [
            _report("[l_1,F] = 1", op_commutator(cat.l(1), F), one),
            _report("[l_0,F] = F", op_commutator(cat.l(0), F), F),
            _report("[l_-1,F] = F^2", op_commutator(cat.l(-1), F), F * F),
        ]
    return out


def verify_berezin(weight=None) -> list[IdentityReport]:
    """``[FD, DF] = 0`` and ``[D, F] = q_R (1 - DF)(1 - FD)``."""
    weight = _norm_weight(weight)
    cat = GeneratorCatalog(weight)
    D, F, one = cat.D, cat.F, cat.one
    out = [_report("[FD,DF] = 0", op_commutator(F * D, D * F), GradedOperator.zero(cat.level))]
    if weight == Fraction(1, 2):
        out.append(IdentityReport("[D,F] = q_R(1-DF)(1-FD)", GradedOperator.zero(), "q_R undefined at h = 1/2"))
    else:
        rhs = q_R(weight) * ((one - D * F) * (one - F * D))
        out.append(_report("[D,F] = q_R(1-DF)(1-FD)", op_commutator(D, F), rhs))
    return out


def verify_tensor_relation(i: int, n: int, family: str = "L", weight=None) -> IdentityReport:
    """``[l_i, V_n] = ((s-1) i - n) V_{n+i}`` with spin s = 2 (L) or s = 1 (J)."""
    if i not in (-1, 0, 1):
        raise PreconditionError("i must be -1, 0 or 1")
    s = {"L": 2, "J": 1}[family]
    cat = GeneratorCatalog(weight)
    lhs = op_commutator(cat.l(i), cat.family(family, n))
    rhs = ((s - 1) * i - n) * cat.family(family, n + i)
    return _report(f"[l_{i},{family}_{n}] = {(s - 1) * i - n} {family}_{n + i}", lhs, rhs)


def verify_witt_halfplane(n: int, m: int, weight=None) -> IdentityReport:
    """``[L_n, L_m] = (n - m) L_{n+m}`` for n, m >= -1 or n, m <= 1."""
    if not ((n >= -1 and m >= -1) or (n <= 1 and m <= 1)):
        raise PreconditionError(f"({n}, {m}) is not in a half-plane")
    cat = GeneratorCatalog(weight)
    return _report(f"[L_{n},L_{m}] = {n - m} L_{n + m}", op_commutator(cat.L(n), cat.L(m)), (n - m) * cat.L(n + m))


def _poly_of(op: GradedOperator, coeffs: Sequence, one: GradedOperator) -> GradedOperator:
    acc = GradedOperator.zero(one.level)
    power = one
    for c in coeffs:
        c = parse_scalar(c)
        if c:
            acc = acc + c * power
        power = power * op
    return acc


def _derivative(coeffs: Sequence) -> list[Fraction]:
    return [k * parse_scalar(c) for k, c in enumerate(coeffs)][1:]


def verify_fD_commutation(n: int, f: Sequence, weight=None, printed: bool = False) -> IdentityReport:
    """``[L_n, f(D)] = -D^(n+1) f'(D)`` for n >= -1.

    ``f`` is given by ascending coefficients.  ``printed=True`` checks the
    variant with ``(-D)^(n+1)``, which only agrees for even n + 1.
    """
    if n < -1:
        raise PreconditionError("n must be >= -1")
    cat = GeneratorCatalog(weight)
    D, one = cat.D, cat.one
    lhs = op_commutator(cat.L(n), _poly_of(D, f, one))
    sign = (-1) ** (n + 1) if printed else -1
    rhs = sign * (D ** (n + 1)) * _poly_of(D, _derivative(f), one)
    return _report(f"[L_{n},f(D)] = {'(-D)' if printed else '-D'}^{n + 1} f'(D)", lhs, rhs)


def verify_fF_commutation(n: int, f: Sequence, weight=None, printed: bool = False) -> IdentityReport:
    """``[L_-n, f(F)] = F^(n+1) f'(F)`` for n >= -1 (``printed`` uses f'(D))."""
    if n < -1:
        raise PreconditionError("n must be >= -1")
    cat = GeneratorCatalog(weight)
    F, one = cat.F, cat.one
    lhs = op_commutator(cat.L(-n), _poly_of(F, f, one))
    inner = _poly_of(cat.D if printed else F, _derivative(f), one)
    rhs = (F ** (n + 1)) * inner
    return _report(f"[L_{-n},f(F)] = F^{n + 1} f'({'D' if printed else 'F'})", lhs, rhs)


def witt_nested_coefficient(indices: Sequence[int]) -> tuple[int, int]:
    """Left-nested Witt bracket ``[[e_k0, e_k1], ...]`` as ``(coefficient, index)``."""
    coeff, idx = 1, indices[0]
    for k in indices[1:]:
        coeff *= idx - k
        idx += k
    return coeff, idx


def iterated_defect(indices: Sequence[int], weight=None) -> GradedOperator:
    """Nested commutator of L's minus L applied to the same nested Witt bracket."""
    if len(indices) < 2:
        raise PreconditionError("need at least two indices")
    cat = GeneratorCatalog(weight)
    acc = cat.L(indices[0])
    for k in indices[1:]:
        acc = op_commutator(acc, cat.L(k))
    coeff, idx = witt_nested_coefficient(indices)
    return acc - coeff * cat.L(idx)


def defect(i: int, j: int, weight=None) -> GradedOperator:
    """``[L_i, L_j] - (i - j) L_{i+j}``."""
    return iterated_defect([i, j], weight)


def uniqueness_nullspace(max_degree: int = 3) -> list[tuple[list[Fraction], list[Fraction]]]:
    """Solutions ``p/q`` (deg <= max_degree) of ``s(n) = n`` for n = 0..2*max_degree+1.

    A degree-(+1) symbol with ``[X, l_-1] = 1`` and ``X z^0 = 0`` satisfies
    ``s(xi+1) - s(xi) = 1`` and ``s(0) = 0``, hence ``s(n) = n`` on the basis;
    two such fractions agreeing at 2*max_degree+1 points coincide.  The
    returned nullspace basis vectors all represent ``s = xi``.
    """
    k = max_degree + 1
    rows = []
    for n in range(2 * max_degree + 2):
        # p(n) - n q(n) = 0 with unknowns (p_0..p_d, q_0..q_d)
        rows.append([to_qq(Fraction(n) ** e) for e in range(k)] + [to_qq(-Fraction(n) ** (e + 1)) for e in range(k)])
    null = DomainMatrix(rows, (len(rows), 2 * k), QQ).nullspace().to_Matrix().tolist()
    out = []
    for vec in null:
        vals = [from_qq(QQ.convert(v)) for v in vec]
        out.append((vals[:k], vals[k:]))
    return out
