"""Operator expressions over named generators.

Composite operators have two realizations: the reduced symbol (exact
algebra, but blind to removable singularities) and the matrix obtained by
multiplying generator matrices.  Expressions keep the product structure so
both can be produced from one description.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := [coeff '*'] factor ('*' factor)*
    factor  := GEN | '[' expr ',' expr ']' | '(' expr ')'
    GEN     := 'L'k | 'J'k | 'l'k | 'D' | 'F' | 'I'
    coeff   := integer | integer '/' integer
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .symbol_ore import GradedOperator, op_commutator
from .generators import GeneratorCatalog


@dataclass(frozen=True)
class Gen:
    family: str  # 'L', 'J', 'l' or 'I'
    index: int = 0

    def __str__(self):
        if self.family == "I":
            return "I"
        if self.family == "J" and self.index in (1, -1):
            return "D" if self.index == 1 else "F"
        return f"{self.family}{self.index}"

    @property
    def degree(self) -> int:
        return 0 if self.family == "I" else self.index


@dataclass(frozen=True)
class Prod:
    factors: tuple

    def __str__(self):
        return "*".join(_wrap(f) for f in self.factors)


@dataclass(frozen=True)
class Comm:
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"[{self.left},{self.right}]"


@dataclass(frozen=True)
class Lin:
    terms: tuple  # ((Fraction, Expr), ...)

    def __str__(self):
        parts = []
        for c, e in self.terms:
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = str(e) if mag == 1 else f"{mag}*{_wrap(e)}"
            parts.append(f"{sign} {body}")
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]


Expr = Union[Gen, Prod, Comm, Lin]


def _wrap(e) -> str:
    return f"({e})" if isinstance(e, Lin) else str(e)


def L(k: int) -> Gen:
    return Gen("L", k)


def J(k: int) -> Gen:
    return Gen("J", k)


def sl2(i: int) -> Gen:
    return Gen("l", i)


D = Gen("J", 1)
F = Gen("J", -1)
I = Gen("I")


def defect_expr(i: int, j: int) -> Expr:
    """``[L_i, L_j] - (i-j) L_{i+j}`` (the bracket alone when i == j)."""
    if i == j:
        return Comm(L(i), L(j))
    return Lin(((Fraction(1), Comm(L(i), L(j))), (Fraction(-(i - j)), L(i + j))))


def adjoint_expr(e: Expr) -> Expr:
    """Formal adjoint: L_k <-> L_-k, J_k <-> J_-k, l_i <-> l_-i, products reversed."""
    if isinstance(e, Gen):
        return e if e.family == "I" else Gen(e.family, -e.index)
    if isinstance(e, Prod):
        return Prod(tuple(adjoint_expr(f) for f in reversed(e.factors)))
    if isinstance(e, Comm):
        return Comm(adjoint_expr(e.right), adjoint_expr(e.left))
    return Lin(tuple((c, adjoint_expr(t)) for c, t in e.terms))


def bandwidth(e: Expr) -> int:
    """Upper bound on |degree| reachable inside the expression (sum over products)."""
    if isinstance(e, Gen):
        return abs(e.degree)
    if isinstance(e, Prod):
        return sum(bandwidth(f) for f in e.factors)
    if isinstance(e, Comm):
        return bandwidth(e.left) + bandwidth(e.right)
    return max((bandwidth(t) for _, t in e.terms), default=0)


def leaves(e: Expr) -> set[Gen]:
    if isinstance(e, Gen):
        return {e}
    if isinstance(e, Prod):
        return set().union(*(leaves(f) for f in e.factors))
    if isinstance(e, Comm):
        return leaves(e.left) | leaves(e.right)
    return set().union(*(leaves(t) for _, t in e.terms))


def is_composite(e: Expr) -> bool:
    return not isinstance(e, Gen) and not (
        isinstance(e, Lin) and all(isinstance(t, Gen) for _, t in e.terms)
    )


def to_operator(e: Expr, weight=None) -> GradedOperator:
    """Reduced symbol of the expression."""
    cat = GeneratorCatalog(weight)
    return _eval(e, cat)


def _eval(e, cat: GeneratorCatalog) -> GradedOperator:
    if isinstance(e, Gen):
        return cat.one if e.family == "I" else cat.family(e.family, e.index)
    if isinstance(e, Prod):
        acc = cat.one
        for f in e.factors:
            acc = acc * _eval(f, cat)
        return acc
    if isinstance(e, Comm):
        return op_commutator(_eval(e.left, cat), _eval(e.right, cat))
    acc = GradedOperator.zero(cat.level)
    for c, t in e.terms:
        acc = acc + c * _eval(t, cat)
    return acc


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"\s*(?:(?P<gen>[LJl]-?\d+|[DFI])|(?P<num>\d+(?:/\d+)?)|(?P<op>[\[\],()+\-*]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse expression at {text[pos:]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def parse(text: str) -> Expr:
    """Parse an operator expression such as ``"[L2,L-2] - 4*L0"``."""
    toks = _tokenize(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, None)

    def take(value=None):
        nonlocal pos
        tok = peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ValueError(f"expected {value!r} in {text!r}")
        pos += 1
        return tok

    def factor():
        kind, val = peek()
        if kind == "gen":
            take()
            if val == "D":
                return D
            if val == "F":
                return F
            if val == "I":
                return I
            return Gen(val[0], int(val[1:]))
        if val == "[":
            take("[")
            a = expr()
            take(",")
            b = expr()
            take("]")
            return Comm(a, b)
        if val == "(":
            take("(")
            a = expr()
            take(")")
            return a
        raise ValueError(f"unexpected token {val!r} in {text!r}")

    def term():
        coeff = Fraction(1)
        if peek()[0] == "num":
            coeff = Fraction(take()[1])
            take("*")
        fs = [factor()]
        while peek()[1] == "*":
            take("*")
            fs.append(factor())
        body = fs[0] if len(fs) == 1 else Prod(tuple(fs))
        return coeff, body

    def expr():
        sign = Fraction(1)
        if peek()[1] == "-":
            take("-")
            sign = Fraction(-1)
        c, t = term()
        terms = [(sign * c, t)]
        while peek()[1] in ("+", "-"):
            s = Fraction(1) if take()[1] == "+" else Fraction(-1)
            c, t = term()
            terms.append((s * c, t))
        if len(terms) == 1 and terms[0][0] == 1:
            return terms[0][1]
        return Lin(tuple(terms))

    result = expr()
    if pos != len(toks):
        raise ValueError(f"trailing input in {text!r}")
    return result
