"""Witt and Virasoro structure constants, trigonometric vector fields and the Gelfand-Fuchs cocycle.

Vector fields ``v(t) d/dt`` on the circle are stored by their Fourier
coefficients over the Gaussian rationals, ``v = sum_m a_m exp(imt)``.  In
that form the bracket and the cocycle integral are exact:

    [v1, v2] = v1 v2' - v1' v2
    c(v1, v2) = integral over [0, 2pi] of (v1' v2'' - v2' v1'')

``gelfand_fuchs`` returns the coefficient of pi.  The complex basis is
``e_n = i exp(int) d/dt`` with ``[e_j, e_k] = (j - k) e_{j+k}``.  (The
Laurent fields ``z^(k+1) d/dz`` with ``z = exp(it)`` are ``-e_k``, so their
brackets carry the opposite sign.)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from sympy.polys.domains import QQ, QQ_I

from .errors import PreconditionError
from .exact_arith import from_qq, scalar_str, to_qq

GaussQ = type(QQ_I(0, 0))


def gauss(re=0, im=0) -> GaussQ:
    return QQ_I(to_qq(Fraction(re)), to_qq(Fraction(im)))


def gauss_parts(z: GaussQ) -> tuple[Fraction, Fraction]:
    return from_qq(z.x), from_qq(z.y)


def gauss_str(z: GaussQ) -> str:
    re, im = gauss_parts(z)
    return f"{scalar_str(re)}+{scalar_str(im)}i" if im >= 0 else f"{scalar_str(re)}-{scalar_str(-im)}i"


I_UNIT = gauss(0, 1)


def _clean(d: Mapping) -> dict:
    return {k: v for k, v in sorted(d.items()) if v}


# ---------------------------------------------------------------------------
# abstract Witt / Virasoro


@dataclass(frozen=True)
class WittElement:
    coeffs: tuple  # sorted ((k, Fraction), ...)

    @classmethod
    def of(cls, data: Mapping[int, object] | None = None) -> "WittElement":
        return cls(tuple(_clean({k: Fraction(v) for k, v in (data or {}).items()}).items()))

    @classmethod
    def e(cls, k: int, c=1) -> "WittElement":
        return cls.of({k: c})

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.coeffs)

    def __add__(self, other: "WittElement") -> "WittElement":
        d = self.as_dict()
        for k, v in other.coeffs:
            d[k] = d.get(k, 0) + v
        return WittElement.of(d)

    def __rmul__(self, c) -> "WittElement":
        return WittElement.of({k: Fraction(c) * v for k, v in self.coeffs})

    def __neg__(self):
        return (-1) * self

    def __sub__(self, other):
        return self + (-other)

    def __bool__(self):
        return bool(self.coeffs)

    def __str__(self):
        return " + ".join(f"{v}*e{k}" for k, v in self.coeffs) or "0"


def witt_bracket(x: WittElement, y: WittElement) -> WittElement:
    out: dict[int, Fraction] = {}
    for j, a in x.coeffs:
        for k, b in y.coeffs:
            out[j + k] = out.get(j + k, 0) + (j - k) * a * b
    return WittElement.of(out)


def virasoro_cocycle(j: int, k: int) -> Fraction:
    """``(j^3 - j)/12`` on pairs with ``j + k = 0``."""
    return Fraction(j ** 3 - j, 12) if j + k == 0 else Fraction(0)


@dataclass(frozen=True)
class VirasoroElement:
    witt: WittElement
    central: Fraction = Fraction(0)

    @classmethod
    def e(cls, k: int, c=1) -> "VirasoroElement":
        return cls(WittElement.e(k, c))

    def __add__(self, other: "VirasoroElement") -> "VirasoroElement":
        return VirasoroElement(self.witt + other.witt, self.central + other.central)

    def __rmul__(self, c) -> "VirasoroElement":
        return VirasoroElement(c * self.witt, Fraction(c) * self.central)

    def __bool__(self):
        return bool(self.witt) or bool(self.central)


def virasoro_bracket(x: VirasoroElement, y: VirasoroElement) -> VirasoroElement:
    """The central element is central; its coefficient collects ``(j^3-j)/12`` over pairs ``(j, -j)``."""
    central = sum(
        (a * b * virasoro_cocycle(j, k) for j, a in x.witt.coeffs for k, b in y.witt.coeffs),
        Fraction(0),
    )
    return VirasoroElement(witt_bracket(x.witt, y.witt), central)


def jacobi_residual(bracket: Callable, x, y, z):
    return bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y))


# ---------------------------------------------------------------------------
# trigonometric vector fields


@dataclass(frozen=True)
class TrigField:
    fourier: tuple  # sorted ((m, GaussQ), ...)

    @classmethod
    def of(cls, data: Mapping[int, GaussQ] | None = None) -> "TrigField":
        return cls(tuple(_clean(dict(data or {})).items()))

    def as_dict(self) -> dict[int, GaussQ]:
        return dict(self.fourier)

    @property
    def is_real(self) -> bool:
        d = self.as_dict()
        return all(d.get(-m, QQ_I.zero) == QQ_I(a.x, -a.y) for m, a in d.items())

    def derivative(self) -> "TrigField":
        return TrigField.of({m: a * QQ_I(0, m) for m, a in self.fourier})

    def __add__(self, other: "TrigField") -> "TrigField":
        d = self.as_dict()
        for m, a in other.fourier:
            d[m] = d.get(m, QQ_I.zero) + a
        return TrigField.of(d)

    def scale(self, c: GaussQ) -> "TrigField":
        return TrigField.of({m: c * a for m, a in self.fourier})

    def __rmul__(self, c) -> "TrigField":
        c = c if isinstance(c, GaussQ) else gauss(c)
        return self.scale(c)

    def __neg__(self):
        return self.scale(gauss(-1))

    def __sub__(self, other):
        return self + (-other)

    def __bool__(self):
        return bool(self.fourier)

    def to_json(self) -> dict:
        return {str(m): gauss_str(a) for m, a in self.fourier}


def trig_bracket(v1: TrigField, v2: TrigField) -> TrigField:
    """``v1 v2' - v1' v2`` via Fourier products: ``a_p b_q -> i (q - p)`` at ``p + q``."""
    out: dict[int, GaussQ] = {}
    for p, a in v1.fourier:
        for q, b in v2.fourier:
            out[p + q] = out.get(p + q, QQ_I.zero) + QQ_I(0, q - p) * a * b
    return TrigField.of(out)


def gelfand_fuchs(v1: TrigField, v2: TrigField) -> GaussQ:
    """Coefficient of pi in ``integral (v1' v2'' - v2' v1'') dt``.

    Only ``exp(ipt) exp(-ipt)`` pairs survive; each contributes
    ``2 pi (-2i p^3) a_p b_-p``.
    """
    b = v2.as_dict()
    total = QQ_I.zero
    for p, a in v1.fourier:
        if -p in b:
            total += QQ_I(0, -4 * p ** 3) * a * b[-p]
    return total


def cocycle_identity_check(v1: TrigField, v2: TrigField, v3: TrigField) -> GaussQ:
    """``c([v1,v2],v3) + c([v2,v3],v1) + c([v3,v1],v2)``; zero for a 2-cocycle."""
    return (gelfand_fuchs(trig_bracket(v1, v2), v3) + gelfand_fuchs(trig_bracket(v2, v3), v1)
            + gelfand_fuchs(trig_bracket(v3, v1), v2))


# real and complex bases

def s(n: int) -> TrigField:
    """``sin(nt) d/dt``."""
    return TrigField.of({n: gauss(0, Fraction(-1, 2)), -n: gauss(0, Fraction(1, 2))}) if n else TrigField.of()


def c(n: int) -> TrigField:
    """``cos(nt) d/dt`` (``c(0)`` is ``h``)."""
    if n == 0:
        return h_field()
    return TrigField.of({n: gauss(Fraction(1, 2)), -n: gauss(Fraction(1, 2))})


def h_field() -> TrigField:
    """``d/dt``."""
    return TrigField.of({0: gauss(1)})


def e(n: int) -> TrigField:
    """``i exp(int) d/dt``."""
    return TrigField.of({n: I_UNIT})


def complexify(x: WittElement) -> TrigField:
    """Send ``sum a_k e_k`` to its trigonometric field."""
    return TrigField.of({k: I_UNIT * gauss(a) for k, a in x.coeffs})


def decompose_real(v: TrigField) -> dict[tuple[str, int], Fraction]:
    """Coefficients on ``h``, ``c_m``, ``s_m`` (m >= 1) of a real field."""
    if not v.is_real:
        raise PreconditionError("field is not real")
    d = v.as_dict()
    out: dict[tuple[str, int], Fraction] = {}
    zero = QQ_I.zero
    if 0 in d:
        out[("h", 0)] = gauss_parts(d[0])[0]
    for m in sorted({abs(k) for k in d if k}):
        ap, am = d.get(m, zero), d.get(-m, zero)
        cm = gauss_parts(ap + am)[0]
        sm = gauss_parts(I_UNIT * (ap - am))[0]
        if cm:
            out[("c", m)] = cm
        if sm:
            out[("s", m)] = sm
    return out


# ---------------------------------------------------------------------------
# normalization of a cocycle to the Virasoro form


@dataclass
class Normalization:
    alpha: GaussQ
    beta: GaussQ
    scale: GaussQ
    mu: GaussQ
    reproduced: dict[int, GaussQ] = field(default_factory=dict)

    @property
    def coboundary_value(self) -> GaussQ:
        """``phi(e_0)`` of the functional whose coboundary ``-phi([x, y])`` supplies the linear term."""
        return -self.mu

    @property
    def ok(self) -> bool:
        return all(v == gauss(virasoro_cocycle(j, -j)) for j, v in self.reproduced.items())

    def to_json(self) -> dict:
        return {
            "alpha": gauss_str(self.alpha), "beta": gauss_str(self.beta),
            "scale": gauss_str(self.scale), "mu": gauss_str(self.mu),
            "reproduced": {str(j): gauss_str(v) for j, v in self.reproduced.items()},
            "ok": self.ok,
        }


def _as_gauss(x) -> GaussQ:
    return x if isinstance(x, GaussQ) else gauss(x)


def normalize_to_virasoro(c_raw: Callable[[int, int], object], check_range: int = 6) -> Normalization:
    """Constants ``(scale, mu)`` with ``scale * c_raw(e_j, e_k) + mu * (j - k) [j + k = 0] = (j^3 - j)/12 [j + k = 0]``.

    ``c_raw`` must vanish off ``j + k = 0`` and equal ``alpha j^3 + beta j`` on
    it with ``alpha != 0``; both are checked for ``|j|, |k| <= check_range``.
    """
    c1, c2 = _as_gauss(c_raw(1, -1)), _as_gauss(c_raw(2, -2))
    alpha = (c2 - c1 * gauss(2)) / gauss(6)
    beta = c1 - alpha
    if not alpha:
        raise PreconditionError("cocycle has no cubic part: trivial class")
    for j, k in itertools.product(range(-check_range, check_range + 1), repeat=2):
        want = alpha * gauss(j ** 3) + beta * gauss(j) if j + k == 0 else QQ_I.zero
        if _as_gauss(c_raw(j, k)) != want:
            raise PreconditionError(f"cocycle is not of the form alpha j^3 + beta j at ({j}, {k})")
    scale = gauss(Fraction(1, 12)) / alpha
    mu = -(scale * beta + gauss(Fraction(1, 12))) / gauss(2)
    reproduced = {
        j: scale * _as_gauss(c_raw(j, -j)) + mu * gauss(2 * j) for j in range(1, check_range + 1)
    }
    return Normalization(alpha, beta, scale, mu, reproduced)


def gelfand_fuchs_on_basis(j: int, k: int) -> GaussQ:
    return gelfand_fuchs(e(j), e(k))


# ---------------------------------------------------------------------------
# the printed real-basis table


RealCombo = dict  # (kind, index) -> Fraction


def _add(out: RealCombo, key, v) -> None:
    if key[0] == "s" and key[1] == 0:
        return
    out[key] = out.get(key, Fraction(0)) + Fraction(v)


def _sgn(x: int) -> int:
    return (x > 0) - (x < 0)


def printed_table(kind: str, n: int, m: int, c0: str = "zero") -> RealCombo:
    """Right-hand side of a printed table line.

    ``c0`` fixes how ``c_|n-m|`` at ``n = m`` is read: ``"zero"`` drops it,
    ``"h"`` reads ``c_0 = cos(0) d/dt = h``.
    """
    out: RealCombo = {}
    half = Fraction(1, 2)
    if kind == "ss":
        _add(out, ("s", n + m), half * (m - n))
        _add(out, ("s", abs(n - m)), half * _sgn(n - m) * (n + m))
    elif kind == "cc":
        _add(out, ("s", n + m), half * (n - m))
        _add(out, ("s", abs(n - m)), half * _sgn(n - m) * (n + m))
    elif kind == "sc":
        _add(out, ("c", n + m), half * (m - n))
        key = ("c", abs(n - m))
        if key[1] == 0:
            if c0 == "h":
                _add(out, ("h", 0), -half * (m + n))
        else:
            _add(out, key, -half * (m + n))
        if n == m:
            _add(out, ("h", 0), -n)
    elif kind == "hs":
        _add(out, ("c", n), n)
    elif kind == "hc":
        _add(out, ("s", n), -n)
    else:
        raise ValueError(f"unknown table line {kind!r}")
    return {k: v for k, v in sorted(out.items()) if v}


_PAIRS = {"ss": (s, s), "cc": (c, c), "sc": (s, c)}


def oracle_table(kind: str, n: int, m: int = 0) -> RealCombo:
    """The same bracket computed from Fourier products."""
    if kind in _PAIRS:
        f, g = _PAIRS[kind]
        return decompose_real(trig_bracket(f(n), g(m)))
    if kind == "hs":
        return decompose_real(trig_bracket(h_field(), s(n)))
    if kind == "hc":
        return decompose_real(trig_bracket(h_field(), c(n)))
    raise ValueError(f"unknown table line {kind!r}")


def _combo_json(x: RealCombo) -> dict:
    return {f"{k}{i}" if k != "h" else "h": scalar_str(v) for (k, i), v in sorted(x.items())}


@dataclass
class TableReport:
    max_index: int
    mismatches: dict[str, list[dict]]  # convention -> entries
    checked: int

    def agrees(self, convention: str) -> bool:
        return not self.mismatches[convention]

    def lines_with_mismatch(self, convention: str) -> list[str]:
        return sorted({m["line"] for m in self.mismatches[convention]})

    def to_json(self) -> dict:
        return {
            "max_index": self.max_index,
            "checked": self.checked,
            "conventions": {
                conv: {"agrees": not items, "lines_with_mismatch": self.lines_with_mismatch(conv), "mismatches": items}
                for conv, items in sorted(self.mismatches.items())
            },
        }


def table_discrepancy_report(max_index: int = 4) -> TableReport:
    """Compare every printed line with the Fourier oracle for ``1 <= n, m <= max_index``."""
    mismatches: dict[str, list[dict]] = {"zero": [], "h": []}
    checked = 0
    cases: list[tuple[str, int, int]] = []
    for kind in ("ss", "cc", "sc"):
        cases += [(kind, n, m) for n in range(1, max_index + 1) for m in range(1, max_index + 1)]
    cases += [(kind, n, 0) for kind in ("hs", "hc") for n in range(1, max_index + 1)]
    for kind, n, m in cases:
        truth = oracle_table(kind, n, m)
        checked += 1
        for conv in mismatches:
            printed = printed_table(kind, n, m, conv)
            if printed != truth:
                mismatches[conv].append(
                    {"line": kind, "n": n, "m": m, "printed": _combo_json(printed), "oracle": _combo_json(truth)}
                )
    return TableReport(max_index, mismatches, checked)


def basis_triples(max_index: int) -> Iterable[tuple[int, int, int]]:
    r = range(-max_index, max_index + 1)
    return itertools.product(r, r, r)
