"""Expansion of bracket defects in a small shift of the weight.

With ``h = h0 + hbar`` every symbol becomes a rational function of hbar
over Q(xi).  Expanding in hbar gives coefficient operators over Q(xi); the
constant part of the order-one diagonal coefficient at xi -> infinity is
the asymptotic central term.

Two references for the Witt part are supported:

``"base"``
    ``[L_i(h), L_j(h)] - (i-j) L_{i+j}(h0)``.  The target bracket is fixed at
    the base weight while the commutator moves with hbar.
``"shifted"``
    ``[L_i(h), L_j(h)] - (i-j) L_{i+j}(h)``, the exact defect at weight h.

They differ by ``(i-j) hbar`` times the identity in degree zero, which is a
coboundary: the shifted reference gives constant part 0 and the base
reference gives ``2 i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

from .errors import PreconditionError
from .exact_arith import Level, RatFunc, limit_at_infinity, parse_scalar, pole_points, scalar_str, taylor_in_param
from .expr import L as Lgen, Comm
from .generators import GeneratorCatalog, defect
from .symbol_ore import GradedOperator, op_commutator, operator_to_json
from .verma import apply_expr

Reference = Literal["base", "shifted"]
MAX_HIGHER_ORDER = 4


def substitute_weight(x: GradedOperator, h0) -> GradedOperator:
    """``h -> h0 + hbar`` in every symbol (Q-level operators are promoted)."""
    if x.level is Level.Q:
        return GradedOperator(x.components, Level.HBAR)
    return x.substitute_weight(parse_scalar(h0))


@dataclass
class ExpansionSeries:
    h0: Fraction
    order: int
    coefficients: list[GradedOperator]
    pole_log: list[dict[int, list[Fraction]]]
    label: str = ""

    def __getitem__(self, k: int) -> GradedOperator:
        return self.coefficients[k]

    @property
    def order0_empty(self) -> bool:
        return self.coefficients[0].is_zero

    def truncated_sum(self, hbar0) -> GradedOperator:
        """``sum_k hbar0^k c_k`` as an operator over Q(xi)."""
        t = parse_scalar(hbar0)
        acc = GradedOperator.zero()
        for k, c in enumerate(self.coefficients):
            acc = acc + (t ** k) * c
        return acc

    def __add__(self, other: "ExpansionSeries") -> "ExpansionSeries":
        if self.h0 != other.h0 or self.order != other.order:
            raise PreconditionError("series differ in base weight or order")
        coeffs = [a + b for a, b in zip(self.coefficients, other.coefficients)]
        return ExpansionSeries(self.h0, self.order, coeffs, [_poles(c) for c in coeffs])

    def to_json(self) -> dict:
        return {
            "h0": scalar_str(self.h0),
            "order": self.order,
            "coefficients": [operator_to_json(c) for c in self.coefficients],
            "poles": [{str(d): [scalar_str(p) for p in ps] for d, ps in log.items()} for log in self.pole_log],
        }


def _poles(x: GradedOperator) -> dict[int, list[Fraction]]:
    return {d: pole_points(s) for d, s in x.components.items() if pole_points(s)}


def expand_operator(x: GradedOperator, order: int, h0=None) -> ExpansionSeries:
    """Taylor coefficients in hbar of an operator over Q(hbar) (or Q(h) with ``h0``)."""
    if x.level is Level.H:
        if h0 is None:
            raise PreconditionError("a base weight is needed to expand an operator over Q(h)")
        x = substitute_weight(x, h0)
    coeffs = [dict() for _ in range(order + 1)]
    for d, s in x.components.items():
        for k, c in enumerate(taylor_in_param(s, order)):
            if c:
                coeffs[k][d] = c
    ops = [GradedOperator(c, Level.Q) for c in coeffs]
    return ExpansionSeries(parse_scalar(h0 or 0), order, ops, [_poles(c) for c in ops])


def exact_defect(i: int, j: int, h0, reference: Reference = "base") -> GradedOperator:
    """The unexpanded defect over Q(hbar) at ``h = h0 + hbar``."""
    h0 = parse_scalar(h0)
    if reference == "shifted":
        return substitute_weight(defect(i, j), h0)
    if reference != "base":
        raise PreconditionError(f"unknown reference {reference!r}")
    cat = GeneratorCatalog(None)
    bracket = substitute_weight(op_commutator(cat.L(i), cat.L(j)), h0)
    target = (i - j) * GeneratorCatalog(h0).L(i + j) if i != j else GradedOperator.zero()
    return bracket - substitute_weight(target, h0)


def expand_defect(i: int, j: int, h0, order: int = 1, reference: Reference = "base") -> ExpansionSeries:
    """Coefficients ``c_0 .. c_order`` of the defect in powers of hbar.

    Raises ``PoleAtZeroParam`` if some symbol is singular at hbar = 0 for
    generic xi.  ``c_0`` is empty exactly when the bracket relation holds at
    the base weight.
    """
    series = expand_operator(exact_defect(i, j, h0, reference), order, h0)
    series.label = f"defect({i},{j})"
    return series


def higher_order_expansion(i: int, j: int, h0, n: int, reference: Reference = "base") -> ExpansionSeries:
    if not 0 <= n <= MAX_HIGHER_ORDER:
        raise PreconditionError(f"order must lie in 0..{MAX_HIGHER_ORDER}")
    return expand_defect(i, j, h0, n, reference)


# ---------------------------------------------------------------------------
# central term


@dataclass
class CentralReport:
    i: int
    h0: Fraction
    reference: str
    g1: RatFunc
    kappa: Fraction
    hs_flag: bool
    offdiagonal_vanish: bool
    expected: Fraction

    @property
    def matches_expected(self) -> bool:
        return self.kappa == self.expected

    @property
    def central_charge(self) -> Fraction:
        """Coefficient ``c`` of the linear form ``c * hbar``."""
        return 12 * self.kappa / (self.i ** 3 - self.i)

    def to_json(self) -> dict:
        num, den = self.g1.canonical()
        return {
            "i": self.i,
            "h0": scalar_str(self.h0),
            "reference": self.reference,
            "g1": {"num": [scalar_str(c) for c in num], "den": [scalar_str(c) for c in den]},
            "kappa": scalar_str(self.kappa),
            "hs_flag": self.hs_flag,
            "offdiagonal_vanish": self.offdiagonal_vanish,
            "expected_kappa": scalar_str(self.expected),
            "matches_expected": self.matches_expected,
            "central_charge": charge_str(self.central_charge),
        }


def expected_kappa(i: int) -> Fraction:
    return Fraction(2, 3) * (i ** 3 - i)


def charge_str(c: Fraction) -> str:
    return f"{c}*hbar"


def central_coefficient(i: int, h0, reference: Reference = "base") -> CentralReport:
    """Constant part of the order-hbar diagonal coefficient of ``[L_i, L_-i]``.

    ``hs_flag`` records that ``g1 - kappa`` decays (numerator degree strictly
    below the denominator degree).  Raises ``Divergent`` when g1 grows.
    """
    if i < 2:
        raise PreconditionError("central terms are probed for i >= 2")
    h0 = parse_scalar(h0)
    series = expand_defect(i, -i, h0, 1, reference)
    c1 = series[1]
    g1 = c1[0] if 0 in c1.degrees() else RatFunc(0)
    kappa = limit_at_infinity(g1)
    rest = g1 - kappa
    hs = not rest or rest.num_degree < rest.den_degree
    off = all(s.num_degree < s.den_degree for d, s in c1.components.items() if d != 0)
    return CentralReport(i, h0, reference, g1, kappa, hs, off, expected_kappa(i))


def central_charge(i: int, h0, reference: Reference = "base") -> RatFunc:
    """``c(hbar) = 12 kappa hbar / (i^3 - i)`` as a linear function of hbar."""
    if i ** 3 - i == 0:
        raise PreconditionError("i^3 - i = 0: no central term on these indices")
    rep = central_coefficient(i, h0, reference)
    return rep.central_charge * RatFunc.param(Level.HBAR)


def order_swap_experiment(i: int, h0, reference: Reference = "shifted") -> RatFunc:
    """Limit at xi -> infinity of the exact diagonal defect, before any expansion.

    Returns a rational function of hbar.
    """
    if i < 2:
        raise PreconditionError("need i >= 2")
    x = exact_defect(i, -i, h0, reference)
    diag = x[0] if 0 in x.degrees() else RatFunc(0, Level.HBAR)
    lim = limit_at_infinity(diag)
    return lim if isinstance(lim, RatFunc) else RatFunc.const(lim, Level.HBAR)


# ---------------------------------------------------------------------------
# independent checks through the exact matrix action


def _diagonal_defect_entry(i: int, h0: Fraction, hbar0: Fraction, n: int, reference: Reference) -> Fraction:
    h = h0 + hbar0
    col = apply_expr(Comm(Lgen(i), Lgen(-i)), h, {n: Fraction(1)}).get(n, Fraction(0))
    ref_weight = h0 if reference == "base" else h
    ref = apply_expr(Lgen(0), ref_weight, {n: Fraction(1)})[n]
    return col - 2 * i * ref


def finite_difference_check(i: int, h0, hbar0, n: int, reference: Reference = "base") -> dict:
    """Compare the exact diagonal entry at ``h0 + hbar0`` with ``hbar0 * g1(n)``."""
    h0, hbar0 = parse_scalar(h0), parse_scalar(hbar0)
    exact = _diagonal_defect_entry(i, h0, hbar0, n, reference)
    g1 = central_coefficient(i, h0, reference).g1
    predicted = hbar0 * g1(n)
    rel = abs(exact - predicted) / abs(predicted) if predicted else abs(exact)
    return {"exact": exact, "predicted": predicted, "relative_error": float(rel)}


def numeric_kappa(i: int, h0, hbar0="1/100000000", ns=(100, 200, 400), reference: Reference = "base") -> float:
    """Estimate kappa from exact matrix entries: divide by hbar0, then extrapolate in n.

    ``g1(n) = kappa + a/n + b/n^2 + ...`` so two Richardson steps over
    ``n, 2n, 4n`` remove the first two corrections.
    """
    h0, hbar0 = parse_scalar(h0), parse_scalar(hbar0)
    g = [_diagonal_defect_entry(i, h0, hbar0, n, reference) / hbar0 for n in ns]
    r1 = [2 * g[1] - g[0], 2 * g[2] - g[1]]
    return float((4 * r1[1] - r1[0]) / 3)


# ---------------------------------------------------------------------------
# stage-by-stage reproduction of the hand computation for [L_2, L_-2]


def _x():
    return RatFunc.xi(Level.HBAR)


def _t():
    return RatFunc.param(Level.HBAR)


def _printed_stages(h0: Fraction) -> dict[str, RatFunc]:
    x, t = _x(), _t()
    q = Fraction
    if h0 == q(1, 2):
        exact = ((x + q(3, 2) + 3 * t) ** 2 * (x + 1) * (x + 2) / ((x + 1 + 2 * t) * (x + 2 + 2 * t))
                 - (x - q(1, 2) + 3 * t) ** 2 * x * (x - 1) / ((x - 1 + 2 * t) * (x + 2 * t)))
        mod2 = ((x + q(3, 2) + 3 * t) ** 2 * (1 - 2 * t / (x + 1 + t)) * (1 - 2 * t / (x + 2 + t))
                - (x - q(1, 2) + 3 * t) ** 2 * (1 - 2 * t / (x - 1 + t)) * (1 - 2 * t / (x + t)))
        linear = (2 * t * (x - q(1, 2)) ** 2 * (1 / (x - 1 + t) + 1 / (x + t))
                  - 2 * t * (x + q(3, 2)) ** 2 * (1 / (x + 1 + t) + 1 / (x + 2 + t)) + 12 * t)
    elif h0 == 1:
        exact = ((x + 3 + 3 * t) ** 2 * (x + 1) * (x + 2) / ((x + 2 + 2 * t) * (x + 3 + 2 * t))
                 - (x + 1 + 3 * t) ** 2 * x * (x - 1) / ((x + 2 * t) * (x + 1 + 2 * t)))
        mod2 = ((x + 1) * (x + 3 + 3 * t) * (1 - 2 * t / (x + 2 + t)) * (1 - 2 * t / (x + 3 + t)) * (1 + 3 * t / (x + 3 + t))
                - (x - 1) * (x + 1 + 3 * t) * (1 - 2 * t / (x + t)) * (1 - 2 * t / (x + 1 + t)) * (1 + 3 * t / (x + 1 + t)))
        linear = (t * (x + 1) * (x + 3) * (1 / (x + 3 + t) - 2 / (x + 2 + t))
                  - t * (x + 1) * (x - 1) * (1 / (x + 1 + t) - 2 / (x + t)) + 6 * t)
    else:
        raise PreconditionError("the hand computation covers h0 = 1/2 and h0 = 1")
    return {"exact": exact, "mod_hbar2": mod2, "linear_terms": linear}


def symbolic_bracket_L2(weight=None) -> RatFunc:
    """``(xi+3h)^2 (xi+1)(xi+2)/((xi+2h)(xi+2h+1)) - (xi+3h-2)^2 xi(xi-1)/((xi+2h-1)(xi+2h-2))``."""
    x, h = RatFunc.xi(Level.H), RatFunc.param(Level.H)
    return ((x + 3 * h) ** 2 * (x + 1) * (x + 2) / ((x + 2 * h) * (x + 2 * h + 1))
            - (x + 3 * h - 2) ** 2 * x * (x - 1) / ((x + 2 * h - 1) * (x + 2 * h - 2)))


@dataclass
class PipelineReport:
    h0: Fraction
    stages: dict[str, bool] = field(default_factory=dict)
    kappa: Fraction | None = None
    central_charge: Fraction | None = None

    @property
    def passed(self) -> bool:
        return all(self.stages.values()) and self.kappa == 4 and self.central_charge == 8

    def to_json(self) -> dict:
        return {"h0": scalar_str(self.h0), "stages": self.stages,
                "kappa": scalar_str(self.kappa), "central_charge": charge_str(self.central_charge)}


def stagewise_pipeline(h0) -> PipelineReport:
    """Check each printed stage of the [L_2, L_-2] computation against the exact symbol.

    * the symbolic bracket equals the composed generator symbols;
    * its substitution equals the printed expression over Q(hbar);
    * the printed mod-hbar^2 form agrees with it through order one;
    * the printed linear terms have the same hbar coefficient, whose limit is 4.
    """
    h0 = parse_scalar(h0)
    printed = _printed_stages(h0)
    cat = GeneratorCatalog(None)
    comm = op_commutator(cat.L(2), cat.L(-2))
    rep = PipelineReport(h0)
    rep.stages["bracket_symbol"] = comm.degrees() == {0} and comm[0] == symbolic_bracket_L2()
    exact = comm[0].substitute_weight(h0)
    rep.stages["substituted"] = exact == printed["exact"]
    rep.stages["mod_hbar2"] = all(not c for c in taylor_in_param(exact - printed["mod_hbar2"], 1))
    g1 = taylor_in_param(exact, 1)[1]
    rep.stages["linear_terms"] = taylor_in_param(printed["linear_terms"], 1)[1] == g1
    rep.stages["matches_expansion"] = g1 == central_coefficient(2, h0).g1
    rep.kappa = limit_at_infinity(g1)
    rep.central_charge = 12 * rep.kappa / 6
    return rep


def report_json(i: int, j: int, h0, order: int = 1, reference: Reference = "base") -> str:
    """Deterministic JSON summary for one (i, j, h0)."""
    h0 = parse_scalar(h0)
    series = expand_defect(i, j, h0, order, reference)
    out = {"i": i, "j": j, "h0": scalar_str(h0), "order": order, "reference": reference,
           "coefficients": [operator_to_json(c) for c in series.coefficients]}
    if i + j == 0 and i >= 2:
        rep = central_coefficient(i, h0, reference)
        out["kappa"] = scalar_str(rep.kappa)
        out["central_charge"] = charge_str(rep.central_charge)
        out["order_swap"] = str(order_swap_experiment(i, h0))
    return json.dumps(out, sort_keys=True)
