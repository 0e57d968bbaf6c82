"""Exact scalars and rational functions in xi over a small parameter tower.

Every symbol in the package is a rational function of ``xi`` (the Euler
operator z d/dz) whose coefficients live in one of three fields:

* ``Level.Q``     -- rational numbers (a concrete weight h),
* ``Level.H``     -- rational functions of the weight ``h``,
* ``Level.HBAR``  -- rational functions of the deformation parameter ``hbar``.

Values of level ``Q`` may be combined with either parameter level (Q is a
subfield of both); combining ``H`` with ``HBAR`` raises ``TowerMismatch``.

The reduction/gcd work is delegated to sympy's sparse rational function
field; everything the rest of the package needs on top of it (evaluation,
shifts, limits at infinity, expansion in the parameter, canonical monic
form) lives here.
"""

from __future__ import annotations

import enum
import re
from fractions import Fraction
from typing import Iterable, Sequence, Union

from sympy import QQ
from sympy.polys.fields import field

from .errors import Divergent, PoleAtPoint, PoleAtZeroParam, TowerMismatch

_K, _, _, _ = field("xi,h,hbar", QQ)
_R = _K.ring
_XI, _H, _HBAR = _R.gens

Scalar = Fraction
ScalarLike = Union[int, Fraction]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


class Level(enum.Enum):
    Q = "Q"
    H = "Q(h)"
    HBAR = "Q(hbar)"

    @property
    def param_gen(self):
        return {Level.H: _H, Level.HBAR: _HBAR}.get(self)

    @property
    def param_name(self):
        return {Level.H: "h", Level.HBAR: "hbar"}.get(self)


def join_levels(a: Level, b: Level) -> Level:
    if a is b:
        return a
    if a is Level.Q:
        return b
    if b is Level.Q:
        return a
    raise TowerMismatch(f"cannot combine {a.value} with {b.value}")


def parse_scalar(text: str | ScalarLike) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` into an exact rational; decimals are rejected."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    m = _RATIONAL_RE.match(str(text))
    if not m:
        raise ValueError(f"not an exact rational string: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise ZeroDivisionError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def scalar_str(x: ScalarLike) -> str:
    """Canonical ``"p/q"`` spelling used by every serialized report."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def to_qq(x: ScalarLike):
    x = Fraction(x)
    return QQ(x.numerator, x.denominator)


def from_qq(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _level_of(f) -> Level:
    def uses(gen):
        return f.numer.degree(gen) > 0 or f.denom.degree(gen) > 0

    has_h, has_hbar = uses(_H), uses(_HBAR)
    if has_h and has_hbar:
        raise TowerMismatch("expression depends on both h and hbar")
    if has_h:
        return Level.H
    if has_hbar:
        return Level.HBAR
    return Level.Q


def _raw(x):
    """Field element for a RatFunc or a plain scalar."""
    if isinstance(x, RatFunc):
        return x._f
    if isinstance(x, (int, Fraction)):
        return _K(to_qq(x))
    raise TypeError(f"unsupported operand {type(x).__name__}")


def _level(x) -> Level:
    return x.level if isinstance(x, RatFunc) else Level.Q


class RatFunc:
    """Reduced rational function of ``xi`` over the field named by ``level``.

    Instances are immutable. Equality is exact (canonical reduced form).
    """

    __slots__ = ("_f", "level")

    def __init__(self, value=0, level: Level = Level.Q):
        if isinstance(value, RatFunc):
            f = value._f
        elif isinstance(value, (int, Fraction)):
            f = _K(to_qq(value))
        else:
            f = _K(value)
        found = _level_of(f)
        if found is not Level.Q and found is not level:
            raise TowerMismatch(f"value lives in {found.value}, declared {level.value}")
        self._f = f
        self.level = level

    # -- constructors -------------------------------------------------------

    @classmethod
    def xi(cls, level: Level = Level.Q) -> "RatFunc":
        return cls(_K(_XI), level)

    @classmethod
    def param(cls, level: Level) -> "RatFunc":
        if level.param_gen is None:
            raise TowerMismatch("level Q has no parameter")
        return cls(_K(level.param_gen), level)

    @classmethod
    def const(cls, c: ScalarLike, level: Level = Level.Q) -> "RatFunc":
        return cls(_K(to_qq(c)), level)

    @classmethod
    def from_coeffs(
        cls,
        num: Sequence,
        den: Sequence = (1,),
        level: Level = Level.Q,
    ) -> "RatFunc":
        """Build ``sum num[k] xi^k / sum den[k] xi^k`` (ascending coefficients)."""
        x = cls.xi(level)

        def horner(cs):
            acc = cls.const(0, level)
            for c in reversed(list(cs)):
                acc = acc * x + c
            return acc

        return ratfunc_normalize(horner(num), horner(den))

    # -- arithmetic ---------------------------------------------------------

    def _wrap(self, f, other_level: Level = Level.Q) -> "RatFunc":
        return RatFunc(f, join_levels(self.level, other_level))

    def __add__(self, other):
        try:
            return self._wrap(self._f + _raw(other), _level(other))
        except TypeError:
            return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        try:
            return self._wrap(self._f - _raw(other), _level(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        try:
            return self._wrap(_raw(other) - self._f, _level(other))
        except TypeError:
            return NotImplemented

    def __mul__(self, other):
        try:
            return self._wrap(self._f * _raw(other), _level(other))
        except TypeError:
            return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            o = _raw(other)
        except TypeError:
            return NotImplemented
        if not o:
            raise ZeroDivisionError("division by the zero rational function")
        return self._wrap(self._f / o, _level(other))

    def __rtruediv__(self, other):
        if not self._f:
            raise ZeroDivisionError("division by the zero rational function")
        try:
            return self._wrap(_raw(other) / self._f, _level(other))
        except TypeError:
            return NotImplemented

    def __neg__(self):
        return RatFunc(-self._f, self.level)

    def __pow__(self, k: int):
        if k < 0 and not self._f:
            raise ZeroDivisionError("negative power of zero")
        return RatFunc(self._f**k, self.level)

    def __eq__(self, other):
        try:
            return self._f == _raw(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(self._f)

    def __bool__(self):
        return bool(self._f)

    def __repr__(self):
        return f"RatFunc({self._f}, {self.level.name})"

    def __str__(self):
        return str(self._f)

    # -- structure ----------------------------------------------------------

    @property
    def num(self) -> "RatFunc":
        return RatFunc(_K(self._f.numer), self.level)

    @property
    def den(self) -> "RatFunc":
        return RatFunc(_K(self._f.denom), self.level)

    @property
    def num_degree(self) -> int:
        """Degree in xi of the numerator (-1 for the zero function)."""
        return _xi_degree(self._f.numer)

    @property
    def den_degree(self) -> int:
        return _xi_degree(self._f.denom)

    @property
    def is_polynomial(self) -> bool:
        return self._f.denom.degree(_XI) <= 0

    @property
    def is_constant(self) -> bool:
        return self.num_degree <= 0 and self.den_degree == 0

    def scalar(self) -> Fraction:
        """The value of a constant level-Q function as an exact rational."""
        if not (self.is_constant and self.level is Level.Q):
            raise ValueError(f"{self} is not a rational constant")
        if not self._f:
            return Fraction(0)
        return from_qq(self._f.numer.LC) / from_qq(self._f.denom.LC)

    def canonical(self):
        """Ascending xi-coefficients of numerator and monic denominator.

        Coefficients are ``Fraction`` at level Q and constant ``RatFunc``
        (functions of the parameter only) otherwise.
        """
        num, den = self._f.numer, self._f.denom
        d = den.degree(_XI)
        lead = _K(den.coeff_wrt(_XI, d))
        num_c = [_K(num.coeff_wrt(_XI, k)) / lead for k in range(max(num.degree(_XI), 0) + 1)]
        den_c = [_K(den.coeff_wrt(_XI, k)) / lead for k in range(d + 1)]
        return [self._coeff_out(c) for c in num_c], [self._coeff_out(c) for c in den_c]

    def param_coeffs(self) -> tuple[list[Fraction], list[Fraction]]:
        """Ascending parameter coefficients of an xi-free function, denominator monic."""
        if not self.is_constant:
            raise ValueError(f"{self} depends on xi")
        gen = self.level.param_gen
        if gen is None:
            return [self.scalar()], [Fraction(1)]
        num, den = self._f.numer, self._f.denom
        d = den.degree(gen)
        lead = from_qq(den.coeff_wrt(gen, d).LC)
        nc = [num.coeff_wrt(gen, k) for k in range(max(num.degree(gen), 0) + 1)]
        dc = [den.coeff_wrt(gen, k) for k in range(d + 1)]
        return ([_ground(c) / lead for c in nc], [_ground(c) / lead for c in dc])

    def _coeff_out(self, c):
        if self.level is Level.Q:
            return from_qq(c.numer.LC) / from_qq(c.denom.LC) if c else Fraction(0)
        return RatFunc(c, self.level)

    # -- operations used across the package ----------------------------------

    def __call__(self, point):
        return ratfunc_eval(self, point)

    def shift(self, c) -> "RatFunc":
        return ratfunc_shift(self, c)

    def subs_param(self, value: ScalarLike) -> "RatFunc":
        """Set the parameter (h or hbar) to a rational value; result is level Q."""
        gen = self.level.param_gen
        if gen is None:
            return self
        v = _R(to_qq(value))
        num = self._f.numer.compose(gen, v)
        den = self._f.denom.compose(gen, v)
        if not den:
            raise PoleAtPoint(Fraction(value))
        return RatFunc(_K(num) / _K(den), Level.Q)

    def substitute_weight(self, h0: ScalarLike) -> "RatFunc":
        """Replace ``h`` by ``h0 + hbar``: level H (or Q) becomes level HBAR."""
        if self.level is Level.HBAR:
            raise TowerMismatch("already expressed in hbar")
        shifted = _R(to_qq(h0)) + _HBAR
        num = self._f.numer.compose(_H, shifted)
        den = self._f.denom.compose(_H, shifted)
        return RatFunc(_K(num) / _K(den), Level.HBAR)

    def limit_at_infinity(self):
        return limit_at_infinity(self)

    def taylor_in_param(self, order: int) -> list["RatFunc"]:
        return taylor_in_param(self, order)

    def diff(self) -> "RatFunc":
        """Derivative in xi."""
        n, d = self._f.numer, self._f.denom
        return RatFunc(_K(n.diff(_XI) * d - n * d.diff(_XI)) / _K(d * d), self.level)


def _ground(p) -> Fraction:
    return from_qq(p.LC) if p else Fraction(0)


def _xi_degree(p) -> int:
    if not p:
        return -1
    return max(p.degree(_XI), 0)


def ratfunc_normalize(num: RatFunc, den: RatFunc) -> RatFunc:
    """Reduced quotient ``num/den``; both arguments are expected to be polynomials."""
    if not den:
        raise ZeroDivisionError("zero denominator")
    return num / den


def ratfunc_eval(f: RatFunc, point):
    """Exact value of ``f`` at ``xi = point``.

    Level-Q functions give a ``Fraction``; parameter levels give a constant
    ``RatFunc`` in the parameter.
    """
    p = to_qq(point)
    num = f._f.numer.compose(_XI, _R(p))
    den = f._f.denom.compose(_XI, _R(p))
    if not den:
        raise PoleAtPoint(Fraction(point))
    value = RatFunc(_K(num) / _K(den), f.level)
    return value.scalar() if f.level is Level.Q else value


def ratfunc_shift(f: RatFunc, c) -> RatFunc:
    """``f(xi + c)``; ``c`` is a rational or a polynomial in the parameter."""
    if isinstance(c, RatFunc):
        if not c.is_constant or not c._f.denom.is_ground:
            raise TypeError("shift must be a parameter polynomial")
        level = join_levels(f.level, c.level)
        cpoly = c._f.numer.quo_ground(c._f.denom.LC)
    else:
        level = f.level
        cpoly = _R(to_qq(c))
    arg = _XI + cpoly
    num = f._f.numer.compose(_XI, arg)
    den = f._f.denom.compose(_XI, arg)
    return RatFunc(_K(num) / _K(den), level)


def limit_at_infinity(f: RatFunc):
    """Limit of ``f`` as xi -> infinity (zero when the denominator dominates)."""
    dn, dd = f.num_degree, f.den_degree
    if dn > dd:
        raise Divergent(f"numerator degree {dn} exceeds denominator degree {dd}")
    if dn < dd:
        value = RatFunc(0, f.level)
    else:
        value = RatFunc(_K(f._f.numer.coeff_wrt(_XI, dn)) / _K(f._f.denom.coeff_wrt(_XI, dd)), f.level)
    return value.scalar() if f.level is Level.Q else value


def taylor_in_param(f: RatFunc, order: int) -> list[RatFunc]:
    """Coefficients ``c_0 .. c_order`` (level Q) of the hbar-expansion of ``f``.

    ``f`` is read as a rational function of hbar over Q(xi); the expansion is
    the exact power-series quotient of numerator by denominator.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if f.level is Level.Q:
        return [f] + [RatFunc(0)] * order
    if f.level is not Level.HBAR:
        raise TowerMismatch("expansion is defined in hbar only; substitute the weight first")
    num, den = f._f.numer, f._f.denom
    b = [_K(den.coeff_wrt(_HBAR, k)) for k in range(order + 1)]
    if not b[0]:
        raise PoleAtZeroParam(f"denominator of {f} vanishes at hbar = 0")
    coeffs = []
    for k in range(order + 1):
        acc = _K(num.coeff_wrt(_HBAR, k))
        for j in range(1, k + 1):
            if b[j]:
                acc -= b[j] * coeffs[k - j]
        coeffs.append(acc / b[0])
    return [RatFunc(c, Level.Q) for c in coeffs]


def xi_linear_factors(f: RatFunc, which: str = "den") -> list[tuple[RatFunc, int]]:
    """Irreducible factors (with multiplicity) of the numerator or denominator."""
    p = f._f.denom if which == "den" else f._f.numer
    _, facs = p.factor_list()
    return [(RatFunc(_K(q), f.level), m) for q, m in facs]


def rational_roots(f: RatFunc) -> list[Fraction]:
    """Rational roots in xi of a level-Q polynomial (sorted, without repeats)."""
    if f.level is not Level.Q or not f.is_polynomial:
        raise ValueError("rational_roots needs a level-Q polynomial")
    roots = set()
    for q, _ in xi_linear_factors(f, "num"):
        if q.num_degree == 1:
            p = q._f.numer
            roots.add(-_ground(p.coeff_wrt(_XI, 0)) / _ground(p.coeff_wrt(_XI, 1)))
    return sorted(roots)


def pole_points(f: RatFunc) -> list[Fraction]:
    """Rational poles of a level-Q rational function."""
    return rational_roots(f.den)


def nonnegative_integer_poles(f: RatFunc) -> list[int]:
    return [int(r) for r in pole_points(f) if r.denominator == 1 and r >= 0]


def falling_factorial(b: int, level: Level = Level.Q, shift: ScalarLike = 0) -> RatFunc:
    """``(xi+shift)(xi+shift-1)...(xi+shift-b+1)``; empty product is 1."""
    x = RatFunc.xi(level) + shift
    acc = RatFunc.const(1, level)
    for t in range(b):
        acc = acc * (x - t)
    return acc


def horner_eval(coeffs: Iterable[Fraction], t: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(list(coeffs)):
        acc = acc * t + c
    return acc
