"""Graded symbols for the extended Weyl algebra acting on C[z].

An operator is stored as a finite map ``degree -> symbol`` where the symbol
``s_d(xi)`` is a rational function and the operator acts by

    z^n  |->  sum_d s_d(n) z^(n-d).

``z`` has degree -1 and ``d/dz`` degree +1. The symbol map is the canonical
form: two operators are equal iff their symbol maps are equal.

Reduced symbols of a *product* can hide removable singularities (0/0 at a
basis index, where the true composition is 0).  Every product records the
unreduced numerator/denominator pairs it was formed from, so evaluation can
detect and flag those points.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import CancellationWarning, ModuleUndefined, PoleAtPoint, TowerMismatch
from .exact_arith import (
    Level,
    RatFunc,
    ScalarLike,
    _H,
    _R,
    _XI,
    from_qq,
    rational_roots,
    to_qq,
    falling_factorial,
    join_levels,
    parse_scalar,
    scalar_str,
    xi_linear_factors,
)

# (numerator, denominator) of an unreduced product symbol, as raw polynomials
_Risk = tuple


class GradedOperator:
    """Immutable element of the extended Weyl algebra in symbol form."""

    __slots__ = ("_comp", "level", "_risks")

    def __init__(
        self,
        components: Mapping[int, RatFunc] | None = None,
        level: Level | None = None,
        risks: Mapping[int, Iterable[_Risk]] | None = None,
    ):
        comp = {}
        lvl = Level.Q if level is None else level
        for d, s in (components or {}).items():
            s = s if isinstance(s, RatFunc) else RatFunc.const(s)
            lvl = join_levels(lvl, s.level)
            if s:
                comp[int(d)] = s
        self._comp = {d: RatFunc(s, lvl) for d, s in sorted(comp.items())}
        self.level = lvl
        self._risks = {
            d: frozenset(r) for d, r in (risks or {}).items() if r and d in self._comp
        }

    # -- constructors -------------------------------------------------------

    @classmethod
    def identity(cls, level: Level = Level.Q) -> "GradedOperator":
        return cls({0: RatFunc.const(1, level)}, level)

    @classmethod
    def zero(cls, level: Level = Level.Q) -> "GradedOperator":
        return cls({}, level)

    @classmethod
    def homogeneous(cls, degree: int, symbol: RatFunc) -> "GradedOperator":
        return cls({degree: symbol}, symbol.level)

    # -- access -------------------------------------------------------------

    @property
    def components(self) -> dict[int, RatFunc]:
        return dict(self._comp)

    def __getitem__(self, d: int) -> RatFunc:
        return self._comp.get(d, RatFunc(0, self.level))

    def degrees(self) -> set[int]:
        return set(self._comp)

    @property
    def bandwidth(self) -> int:
        return max((abs(d) for d in self._comp), default=0)

    @property
    def is_zero(self) -> bool:
        return not self._comp

    @property
    def is_composite(self) -> bool:
        return bool(self._risks)

    def __bool__(self):
        return bool(self._comp)

    def __eq__(self, other):
        if isinstance(other, GradedOperator):
            return self._comp == other._comp
        if isinstance(other, (int, Fraction)):
            return self == other * GradedOperator.identity(self.level)
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self._comp.items()))

    def __repr__(self):
        body = ", ".join(f"{d}: {s}" for d, s in self._comp.items())
        return f"GradedOperator({{{body}}}, {self.level.name})"

    # -- algebra ------------------------------------------------------------

    def _merge_risks(self, *others: "GradedOperator") -> dict:
        out: dict[int, set] = {}
        for op in (self,) + others:
            for d, r in op._risks.items():
                out.setdefault(d, set()).update(r)
        return out

    def __add__(self, other):
        if not isinstance(other, GradedOperator):
            if isinstance(other, (int, Fraction, RatFunc)):
                other = GradedOperator.identity(self.level) * other
            else:
                return NotImplemented
        level = join_levels(self.level, other.level)
        comp = dict(self._comp)
        for d, s in other._comp.items():
            comp[d] = comp[d] + s if d in comp else s
        return GradedOperator(comp, level, self._merge_risks(other))

    __radd__ = __add__

    def __neg__(self):
        return GradedOperator({d: -s for d, s in self._comp.items()}, self.level, self._risks)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, RatFunc)):
            other = GradedOperator.identity(self.level) * other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GradedOperator):
            return op_mul(self, other)
        if isinstance(other, (int, Fraction)) or (isinstance(other, RatFunc) and other.is_constant):
            level = join_levels(self.level, other.level if isinstance(other, RatFunc) else Level.Q)
            return GradedOperator({d: s * other for d, s in self._comp.items()}, level, self._risks)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, RatFunc)):
            return self * other
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative operator powers are not defined")
        acc = GradedOperator.identity(self.level)
        for _ in range(k):
            acc = acc * self
        return acc

    # -- parameter handling --------------------------------------------------

    def subs_param(self, value: ScalarLike) -> "GradedOperator":
        """Specialize the weight (level H) or hbar (level HBAR) to a rational."""
        if self.level is Level.Q:
            return self
        gen = self.level.param_gen
        v = _const_poly(value)
        comp = {d: s.subs_param(value) for d, s in self._comp.items()}
        risks = {d: {(n.compose(gen, v), m.compose(gen, v)) for n, m in r} for d, r in self._risks.items()}
        return GradedOperator(comp, Level.Q, risks)

    def substitute_weight(self, h0: ScalarLike) -> "GradedOperator":
        """Replace ``h`` by ``h0 + hbar`` in every symbol."""
        return GradedOperator({d: s.substitute_weight(h0) for d, s in self._comp.items()}, Level.HBAR)

    def map_symbols(self, fn, level: Level | None = None) -> "GradedOperator":
        return GradedOperator({d: fn(s) for d, s in self._comp.items()}, level or self.level)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return operator_to_json(self)


def _const_poly(value):
    return _R(to_qq(value))


def op_add(x: GradedOperator, y: GradedOperator) -> GradedOperator:
    return x + y


def op_mul(x: GradedOperator, y: GradedOperator) -> GradedOperator:
    """Composition ``x*y`` (apply ``y`` first).

    Component pair ``(d, s_x), (e, s_y)`` contributes ``s_x(xi - e) * s_y(xi)``
    in degree ``d + e``.
    """
    level = join_levels(x.level, y.level)
    comp: dict[int, RatFunc] = {}
    risks: dict[int, set] = {}
    for e, sy in y._comp.items():
        for d, sx in x._comp.items():
            sxs = sx.shift(-e)
            term = sxs * sy
            deg = d + e
            comp[deg] = comp[deg] + term if deg in comp else term
            num = sxs._f.numer * sy._f.numer
            den = sxs._f.denom * sy._f.denom
            if den.degree(_XI) > 0:
                risks.setdefault(deg, set()).add((num, den))
            for n, m in x._risks.get(d, ()):
                arg = _XI - e
                risks.setdefault(deg, set()).add((n.compose(_XI, arg), m.compose(_XI, arg)))
            for r in y._risks.get(e, ()):
                risks.setdefault(deg, set()).add(r)
    return GradedOperator(comp, level, risks)


def op_commutator(x: GradedOperator, y: GradedOperator) -> GradedOperator:
    return x * y - y * x


def grade_of(x: GradedOperator) -> set[int]:
    return x.degrees()


def is_homogeneous(x: GradedOperator, d: int) -> bool:
    return x.degrees() <= {d}


# ---------------------------------------------------------------------------
# monomial form


@dataclass(frozen=True)
class Monomial:
    """``z^a f(xi) d^b`` with ``a, b >= 0``."""

    a: int
    f: RatFunc
    b: int

    @property
    def degree(self) -> int:
        return self.b - self.a

    def symbol(self) -> RatFunc:
        level = self.f.level
        return falling_factorial(self.b, level) * self.f.shift(-self.b)

    def act(self, n: int, h: ScalarLike | None = None) -> Fraction:
        """Coefficient of ``z^(n - degree)`` in the image of ``z^n``.

        The falling factorial is applied first, so a vanishing factor gives an
        exact zero even where ``f`` has a pole.
        """
        if n < self.b:
            return Fraction(0)
        ff = Fraction(1)
        for t in range(self.b):
            ff *= n - t
        f = self.f if h is None else self.f.subs_param(h)
        try:
            return ff * f(n - self.b)
        except PoleAtPoint:
            raise ModuleUndefined(n, f"pole of {f} at xi = {n - self.b}") from None


@dataclass(frozen=True)
class MonomialForm:
    terms: tuple[Monomial, ...] = field(default_factory=tuple)

    @classmethod
    def of(cls, *triples) -> "MonomialForm":
        return cls(tuple(t if isinstance(t, Monomial) else Monomial(*t) for t in triples))

    @property
    def level(self) -> Level:
        lvl = Level.Q
        for t in self.terms:
            lvl = join_levels(lvl, t.f.level)
        return lvl

    def act(self, n: int, h: ScalarLike | None = None) -> dict[int, Fraction]:
        """Image of ``z^n`` as ``{exponent: coefficient}``."""
        out: dict[int, Fraction] = {}
        for t in self.terms:
            v = t.act(n, h)
            if v:
                k = n - t.degree
                out[k] = out.get(k, Fraction(0)) + v
        return {k: v for k, v in out.items() if v}


def from_monomials(m: MonomialForm) -> GradedOperator:
    """Collect ``z^a f(xi) d^b`` terms into graded symbols.

    Uses ``z^a f(xi) d^b : z^n -> n(n-1)...(n-b+1) f(n-b) z^(n-b+a)``.
    """
    comp: dict[int, RatFunc] = {}
    level = m.level
    for t in m.terms:
        s = t.symbol()
        comp[t.degree] = comp[t.degree] + s if t.degree in comp else s
    return GradedOperator(comp, level)


def to_monomials(x: GradedOperator) -> MonomialForm:
    """Canonical monomial form: one term per degree, ``f d^d`` or ``z^|d| f``."""
    terms = []
    for d, s in x.components.items():
        if d >= 0:
            ff = falling_factorial(d, x.level, shift=d)
            terms.append(Monomial(0, s.shift(d) / ff, d))
        else:
            terms.append(Monomial(-d, s, 0))
    return MonomialForm(tuple(terms))


# ---------------------------------------------------------------------------
# membership


@dataclass(frozen=True)
class ExcludedWeights:
    """The weights ``start + k*step`` (k = 0, 1, 2, ...); ``step == 0`` is one point."""

    start: Fraction
    step: Fraction

    def contains(self, h: Fraction) -> bool:
        if self.step == 0:
            return h == self.start
        k = (h - self.start) / self.step
        return k.denominator == 1 and k >= 0

    def to_json(self) -> dict:
        return {"start": scalar_str(self.start), "step": scalar_str(self.step)}


@dataclass
class MembershipReport:
    valid: bool
    offending: list[tuple[int, int]] = field(default_factory=list)
    excluded_h: list[ExcludedWeights] = field(default_factory=list)
    unresolved_factors: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "offending": [list(p) for p in self.offending],
            "excluded_h": [e.to_json() for e in self.excluded_h],
            "unresolved_factors": list(self.unresolved_factors),
        }


def _den_sources(x) -> list[tuple[int, int, RatFunc]]:
    """(degree, index offset, denominator) triples that the action evaluates."""
    if isinstance(x, MonomialForm):
        return [(t.degree, t.b, t.f.den) for t in x.terms if not t.f.is_polynomial]
    return [(d, 0, s.den) for d, s in x.components.items() if not s.is_polynomial]


def _nonneg_integer_roots(p: RatFunc) -> list[int]:
    return [int(r) for r in rational_roots(p) if r.denominator == 1 and r >= 0]


def validate_membership(x, h: ScalarLike | None = None) -> MembershipReport:
    """Check that no denominator vanishes at a basis index the action reaches.

    With a concrete ``h`` (or a level-Q operator) the offending
    ``(degree, basis index)`` pairs are listed.  With symbolic ``h`` the
    report lists the excluded weights instead.
    """
    sources = _den_sources(x)
    level = x.level
    if level is Level.Q or h is not None:
        bad = set()
        for d, off, den in sources:
            den_q = den.subs_param(h) if (h is not None and den.level is not Level.Q) else den
            for r in _nonneg_integer_roots(den_q):
                bad.add((d, r + off))
        return MembershipReport(not bad, sorted(bad))
    if level is Level.HBAR:
        raise TowerMismatch("membership is checked in h, not hbar")
    excluded: list[ExcludedWeights] = []
    unresolved: list[str] = []
    always_bad = set()
    for d, off, den in sources:
        for q, _ in xi_linear_factors(den, "num"):
            p = q._f.numer
            deg_xi, deg_h = p.degree(_XI), p.degree(_H)
            if deg_xi <= 1 and deg_h <= 1:
                a = _coeff2(p, 1, 0)
                b = _coeff2(p, 0, 1)
                c = _coeff2(p, 0, 0)
                if _coeff2(p, 1, 1):
                    unresolved.append(str(q))
                elif b == 0:
                    if a != 0:
                        root = -c / a
                        if root.denominator == 1 and root >= 0:
                            always_bad.add((d, int(root) + off))
                elif a == 0:
                    excluded.append(ExcludedWeights(-c / b, Fraction(0)))
                else:
                    # a*m + b*h + c = 0 for m = 0, 1, 2, ...
                    excluded.append(ExcludedWeights(-c / b, -a / b))
            else:
                unresolved.append(str(q))
    excluded = _merge_progressions(excluded)
    return MembershipReport(not always_bad, sorted(always_bad), excluded, sorted(set(unresolved)))


def _coeff2(p, i: int, j: int) -> Fraction:
    c = p.coeff_wrt(_XI, i).coeff_wrt(_H, j)
    return from_qq(c.LC) if c else Fraction(0)


def _merge_progressions(items: list[ExcludedWeights]) -> list[ExcludedWeights]:
    def covers(o: ExcludedWeights, e: ExcludedWeights) -> bool:
        if not o.contains(e.start):
            return False
        if e.step == 0:
            return True
        if o.step == 0:
            return False
        ratio = e.step / o.step
        return ratio.denominator == 1 and ratio > 0

    uniq = sorted(set(items), key=lambda e: (e.step == 0, -e.start, e.step))
    return [e for i, e in enumerate(uniq) if not any(covers(o, e) for o in uniq[:i])]


# ---------------------------------------------------------------------------
# evaluation


def eval_symbol_at(x: GradedOperator, d: int, n: int, h: ScalarLike | None = None) -> Fraction:
    """``s_d(n)`` for the reduced symbol, flagging removable singularities.

    Raises ``ModuleUndefined`` when a genuine pole survives.  Emits
    ``CancellationWarning`` when the value crosses a 0/0 that the true
    composition would resolve differently.
    """
    op = x.subs_param(h) if (h is not None and x.level is not Level.Q) else x
    if op.level is not Level.Q:
        raise TowerMismatch("evaluation needs a concrete weight")
    pt = _const_poly(n)
    for num, den in op._risks.get(d, ()):
        if not den.compose(_XI, pt) and not num.compose(_XI, pt):
            warnings.warn(
                CancellationWarning(
                    f"reduced composite symbol in degree {d} crosses a removable singularity at n = {n}"
                ),
                stacklevel=2,
            )
            break
    try:
        return op[d](n)
    except PoleAtPoint:
        raise ModuleUndefined(n, f"degree {d} symbol has a pole") from None


def apply_to_basis(x: GradedOperator, n: int, h: ScalarLike | None = None) -> dict[int, Fraction]:
    """Image of ``z^n`` under ``x`` computed from its symbols."""
    out = {}
    for d in x.degrees():
        if n - d < 0:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CancellationWarning)
            v = eval_symbol_at(x, d, n, h)
        if v:
            out[n - d] = v
    return out


# ---------------------------------------------------------------------------
# JSON


def _coeff_json(c):
    if isinstance(c, Fraction):
        return scalar_str(c)
    num, den = c.param_coeffs()
    return {"num": [scalar_str(v) for v in num], "den": [scalar_str(v) for v in den]}


def _coeff_from_json(obj, level: Level):
    if isinstance(obj, str):
        return parse_scalar(obj)
    t = RatFunc.param(level)

    def horner(cs):
        acc = RatFunc.const(0, level)
        for c in reversed(cs):
            acc = acc * t + parse_scalar(c)
        return acc

    return horner(obj["num"]) / horner(obj["den"])


def operator_to_json(x: GradedOperator) -> dict:
    comps = []
    for d, s in x.components.items():
        num, den = s.canonical()
        comps.append({"degree": d, "num": [_coeff_json(c) for c in num], "den": [_coeff_json(c) for c in den]})
    return {"level": x.level.name, "components": comps}


def operator_from_json(obj: Mapping | str) -> GradedOperator:
    if isinstance(obj, str):
        obj = json.loads(obj)
    level = Level[obj["level"]]
    comp = {}
    for c in obj["components"]:
        num = [_coeff_from_json(v, level) for v in c["num"]]
        den = [_coeff_from_json(v, level) for v in c["den"]]
        comp[int(c["degree"])] = RatFunc.from_coeffs(num, den, level)
    return GradedOperator(comp, level)
