"""Exact banded matrices of operators on the Verma module V_h = C[z].

A ``VermaMatrix`` stores one list per operator degree ``d``: entry ``c`` of
diagonal ``d`` is the coefficient of ``z^(c-d)`` in the image of ``z^c``.
Composite expressions are materialized by multiplying generator matrices on
an extended range ``N + bandwidth`` and then restricting, so every reported
entry equals the corresponding entry of the infinite matrix.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .errors import CancellationWarning, ModuleUndefined, NonPositiveNorms, PreconditionError
from .exact_arith import parse_scalar, scalar_str, to_qq
from .expr import Comm, Expr, Gen, Lin, Prod, adjoint_expr, bandwidth, defect_expr, parse, to_operator
from .generators import monomials_J, monomials_L, monomials_sl2
from .symbol_ore import GradedOperator, MonomialForm, eval_symbol_at, validate_membership

HS_SLOPE_MAX = -1.5
HS_REL_TOL = 1e-6


@dataclass(frozen=True)
class VermaMatrix:
    h: Fraction
    N: int
    diagonals: dict  # degree -> tuple of N column values
    start: int = 0

    @property
    def bandwidth(self) -> int:
        return max((abs(d) for d in self.diagonals), default=0)

    def entry(self, m: int, n: int) -> Fraction:
        diag = self.diagonals.get(n - m)
        if diag is None or not (0 <= m < self.N and 0 <= n < self.N):
            return Fraction(0)
        return diag[n]

    def nonzero(self) -> Iterable[tuple[int, int, Fraction]]:
        """``(row, col, value)`` for nonzero entries, sorted by row then column."""
        out = []
        for d, vals in self.diagonals.items():
            for c, v in enumerate(vals):
                if v and 0 <= c - d < self.N:
                    out.append((c - d, c, v))
        return sorted(out)

    @property
    def is_zero(self) -> bool:
        return not any(True for _ in self.nonzero())

    def restrict(self, N: int) -> "VermaMatrix":
        if N > self.N:
            raise ValueError(f"cannot extend a {self.N}x{self.N} matrix to {N}")
        diags = {}
        for d, vals in self.diagonals.items():
            cut = tuple(v if 0 <= c - d < N else Fraction(0) for c, v in enumerate(vals[:N]))
            if any(cut):
                diags[d] = cut
        return VermaMatrix(self.h, N, diags, self.start)

    def __add__(self, other: "VermaMatrix") -> "VermaMatrix":
        _check_compatible(self, other)
        diags = dict(self.diagonals)
        for d, vals in other.diagonals.items():
            if d in diags:
                diags[d] = tuple(a + b for a, b in zip(diags[d], vals))
            else:
                diags[d] = vals
        return VermaMatrix(self.h, self.N, _prune(diags), self.start)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "VermaMatrix":
        c = Fraction(c)
        return VermaMatrix(self.h, self.N, _prune({d: tuple(c * v for v in vals) for d, vals in self.diagonals.items()}), self.start)

    def __matmul__(self, other: "VermaMatrix") -> "VermaMatrix":
        _check_compatible(self, other)
        N = self.N
        diags: dict[int, list] = {}
        for e, bv in other.diagonals.items():
            for d, av in self.diagonals.items():
                out = diags.setdefault(d + e, [Fraction(0)] * N)
                for c in range(N):
                    k = c - e
                    if 0 <= k < N and bv[c]:
                        a = av[k]
                        if a:
                            out[c] += a * bv[c]
        return VermaMatrix(self.h, N, _prune({d: tuple(v) for d, v in diags.items()}), self.start)

    def transpose(self) -> "VermaMatrix":
        N = self.N
        diags = {}
        for d, vals in self.diagonals.items():
            # (row c-d, col c) -> (row c, col c-d): degree -d at column c-d
            new = [Fraction(0)] * N
            for c, v in enumerate(vals):
                if v and 0 <= c - d < N:
                    new[c - d] = v
            diags[-d] = tuple(new)
        return VermaMatrix(self.h, N, _prune(diags), self.start)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "value"])
        for m, n, v in self.nonzero():
            w.writerow([m + self.start, n + self.start, scalar_str(v)])
        return buf.getvalue()

    def dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.N for _ in range(self.N)]
        for m, n, v in self.nonzero():
            out[m][n] = v
        return out


def _check_compatible(a: VermaMatrix, b: VermaMatrix) -> None:
    if a.N != b.N or a.h != b.h or a.start != b.start:
        raise ValueError("matrices live on different truncations or weights")


def _prune(diags: dict) -> dict:
    return {d: v for d, v in sorted(diags.items()) if any(v)}


# ---------------------------------------------------------------------------
# materialization


def _monomials_for(g: Gen, h: Fraction) -> MonomialForm:
    if g.family == "L":
        return monomials_L(g.index, h)
    if g.family == "J":
        return monomials_J(g.index, h)
    if g.family == "l":
        return monomials_sl2(g.index, h)
    raise ValueError(f"unknown generator {g}")


def generator_matrix(g: Gen, h, N: int, start: int = 0) -> VermaMatrix:
    """Matrix of a single generator, evaluated term by term from its monomial form."""
    h = parse_scalar(h)
    if g.family == "I":
        return VermaMatrix(h, N, {0: tuple([Fraction(1)] * N)}, start)
    mf = _monomials_for(g, h)
    diags: dict[int, list] = {}
    for c in range(N):
        n = start + c
        for k, v in mf.act(n).items():
            if k < start:
                raise ModuleUndefined(n, f"{g} leaves the span of z^{start}, z^{start + 1}, ...")
            diags.setdefault(n - k, [Fraction(0)] * N)[c] = v
    return VermaMatrix(h, N, _prune({d: tuple(v) for d, v in diags.items()}), start)


def _materialize(e: Expr, h: Fraction, N: int, start: int, cache: dict) -> VermaMatrix:
    if isinstance(e, Gen):
        if e not in cache:
            cache[e] = generator_matrix(e, h, N, start)
        return cache[e]
    if isinstance(e, Prod):
        acc = _materialize(e.factors[0], h, N, start, cache)
        for f in e.factors[1:]:
            acc = acc @ _materialize(f, h, N, start, cache)
        return acc
    if isinstance(e, Comm):
        a = _materialize(e.left, h, N, start, cache)
        b = _materialize(e.right, h, N, start, cache)
        return a @ b - b @ a
    acc = VermaMatrix(h, N, {}, start)
    for c, t in e.terms:
        acc = acc + _materialize(t, h, N, start, cache).scale(c)
    return acc


def apply_expr(e, h, vector: dict[int, Fraction]) -> dict[int, Fraction]:
    """Exact action of an expression on a finite combination ``{n: coeff}`` of basis vectors."""
    h = parse_scalar(h)
    if isinstance(e, str):
        e = parse(e)
    return _apply(e, h, dict(vector), {})


def _apply(e, h: Fraction, vec: dict, cache: dict) -> dict:
    if isinstance(e, Gen):
        if e.family == "I":
            return dict(vec)
        if e not in cache:
            cache[e] = _monomials_for(e, h)
        out: dict[int, Fraction] = {}
        for n, c in vec.items():
            for k, v in cache[e].act(n).items():
                out[k] = out.get(k, 0) + c * v
        return {k: v for k, v in out.items() if v}
    if isinstance(e, Prod):
        for f in reversed(e.factors):
            vec = _apply(f, h, vec, cache)
        return vec
    if isinstance(e, Comm):
        return _combine(
            [(1, _apply(e.left, h, _apply(e.right, h, vec, cache), cache)),
             (-1, _apply(e.right, h, _apply(e.left, h, vec, cache), cache))]
        )
    return _combine([(c, _apply(t, h, vec, cache)) for c, t in e.terms])


def _combine(parts) -> dict:
    out: dict[int, Fraction] = {}
    for c, v in parts:
        for k, x in v.items():
            out[k] = out.get(k, 0) + c * x
    return {k: v for k, v in out.items() if v}


def matrix_of(x, h, N: int, start: int = 0) -> VermaMatrix:
    """Exact ``N x N`` matrix of ``x`` on the basis ``z^start, ..., z^(start+N-1)``.

    ``x`` may be an expression (or its string form) or a non-composite
    ``GradedOperator``.  Composite operators must be passed as expressions:
    their reduced symbols can disagree with the true action at removable
    singularities.
    """
    h = parse_scalar(h)
    if isinstance(x, str):
        x = parse(x)
    if isinstance(x, GradedOperator):
        if x.is_composite:
            raise PreconditionError("composite operator: pass a generator expression instead")
        op = x.subs_param(h)
        rep = validate_membership(op)
        bad = [p for p in rep.offending if p[1] >= start]
        if bad:
            raise ModuleUndefined(bad[0][1], f"pole in degree {bad[0][0]}")
        diags: dict[int, list] = {}
        for d in op.degrees():
            vals = [Fraction(0)] * N
            for c in range(N):
                n = start + c
                if 0 <= c - d < N:
                    vals[c] = eval_symbol_at(op, d, n)
            diags[d] = tuple(vals)
        return VermaMatrix(h, N, _prune(diags), start)
    ext = N + bandwidth(x)
    return _materialize(x, h, ext, start, {}).restrict(N)


def defect_matrix(i: int, j: int, h, N: int, start: int = 0) -> VermaMatrix:
    """Matrix of ``[L_i, L_j] - (i - j) L_{i+j}``."""
    return matrix_of(defect_expr(i, j), h, N, start)


# ---------------------------------------------------------------------------
# inner product


@dataclass(frozen=True)
class VermaBasis:
    h: Fraction
    N: int
    squared_norms: tuple

    @property
    def positive(self) -> bool:
        return all(g > 0 for g in self.squared_norms)

    def step(self, n: int) -> Fraction:
        """``g_n / g_(n-1) = n (n + 2h - 1)``."""
        return n * (n + 2 * self.h - 1)

    def ratio(self, m: int, n: int) -> Fraction:
        """``g_m / g_n`` without forming the factorial-size norms."""
        r = Fraction(1)
        lo, hi = sorted((m, n))
        for k in range(lo + 1, hi + 1):
            r *= self.step(k)
        return r if m >= n else 1 / r


def verma_norms(h, N: int) -> VermaBasis:
    """``g_n = ||z^n||^2`` from ``g_0 = 1``, ``g_n = n (n + 2h - 1) g_(n-1)``."""
    h = parse_scalar(h)
    g = [Fraction(1)]
    for n in range(1, N):
        g.append(n * (n + 2 * h - 1) * g[-1])
    return VermaBasis(h, N, tuple(g[:N]))


def closed_form_norm(h, n: int) -> Fraction:
    """``n! (2h)(2h+1)...(2h+n-1)``."""
    h = parse_scalar(h)
    out = Fraction(math.factorial(n))
    for t in range(n):
        out *= 2 * h + t
    return out


def _require_positive(h: Fraction) -> None:
    if h <= 0:
        raise NonPositiveNorms(f"h = {h} does not give a positive definite inner product")


def adjoint_check(x, h, N: int, adjoint=None) -> VermaMatrix:
    """Residual ``G M(x) - M(x*)^T G`` on the interior ``N - bandwidth`` block.

    ``x`` is an expression or generator; the adjoint defaults to the formal
    one (``L_k* = L_-k``, ``l_i* = l_-i``, ``D* = F``).
    """
    h = parse_scalar(h)
    _require_positive(h)
    if isinstance(x, str):
        x = parse(x)
    adj = adjoint_expr(x) if adjoint is None else (parse(adjoint) if isinstance(adjoint, str) else adjoint)
    X = matrix_of(x, h, N)
    Y = matrix_of(adj, h, N).transpose()
    basis = verma_norms(h, N)
    diags = {}
    for d in set(X.diagonals) | set(Y.diagonals):
        xv = X.diagonals.get(d, (Fraction(0),) * N)
        yv = Y.diagonals.get(d, (Fraction(0),) * N)
        vals = []
        for c in range(N):
            m = c - d
            if 0 <= m < N:
                # (G X)(m,c) - (Y^T G)(m,c) = g_m X(m,c) - Y^T(m,c) g_c
                vals.append(basis.ratio(m, c) * xv[c] - yv[c])
            else:
                vals.append(Fraction(0))
        diags[d] = tuple(vals)
    interior = N - max(X.bandwidth, Y.bandwidth)
    return VermaMatrix(h, N, _prune(diags)).restrict(max(interior, 0))


# ---------------------------------------------------------------------------
# Hilbert-Schmidt partial norms


@dataclass
class HSReport:
    Ns: list[int]
    partial_sums: list[Fraction]
    slope: float | None
    relative_change: float
    converged: bool
    tail_bound: float

    def to_json(self) -> dict:
        return {
            "Ns": list(self.Ns),
            "partial_sums_approx": [float(s) for s in self.partial_sums],
            "tail_slope_approx": self.slope,
            "relative_change_approx": self.relative_change,
            "tail_bound_approx": self.tail_bound,
            "converged": self.converged,
        }


def hs_partial_norm(A: VermaMatrix, basis: VermaBasis | None = None, Ns: Sequence[int] | None = None,
                    rel_tol: float = HS_REL_TOL, slope_max: float = HS_SLOPE_MAX) -> HSReport:
    """Exact ``S_N = sum_{m,n<N} A(m,n)^2 g_m/g_n`` at each ``N`` in ``Ns``.

    The sums are squared Hilbert-Schmidt norms in the orthonormal basis
    ``z^n / sqrt(g_n)``.  Convergence requires the relative change between
    the last two ``N`` below ``rel_tol`` and a fitted log-log slope of the
    increments at most ``slope_max`` (no slope is needed when the increments
    vanish).
    """
    Ns = sorted(Ns or [A.N])
    if list(Ns) != sorted(set(Ns)):
        raise PreconditionError("Ns must be strictly increasing")
    if Ns[-1] > A.N:
        raise PreconditionError(f"matrix has only {A.N} rows")
    _require_positive(A.h)
    if A.start:
        raise NonPositiveNorms("HS norms are defined on the full module only")
    basis = basis or verma_norms(A.h, Ns[-1])
    if basis.h != A.h:
        raise PreconditionError("basis and matrix weights differ")
    by_size = [Fraction(0)] * Ns[-1]
    for m, n, v in A.nonzero():
        k = max(m, n)
        if k < Ns[-1]:
            by_size[k] += v * v * basis.ratio(m, n)
    sums, acc, pos = [], Fraction(0), 0
    for N in Ns:
        while pos < N:
            acc += by_size[pos]
            pos += 1
        sums.append(acc)
    return _summarize(Ns, sums, rel_tol, slope_max)


def _summarize(Ns, sums, rel_tol, slope_max) -> HSReport:
    incs = [(Ns[k], sums[k] - sums[k - 1]) for k in range(1, len(Ns))]
    pts = [(math.log(N), math.log(float(d))) for N, d in incs if d > 0]
    slope = statistics.linear_regression(*zip(*pts)).slope if len(pts) >= 2 else None
    last = sums[-1]
    rel = float((sums[-1] - sums[-2]) / last) if len(sums) >= 2 and last else 0.0
    tail = 0.0
    if slope is not None and incs and len(Ns) >= 2:
        r = (Ns[-1] / Ns[-2]) ** slope
        tail = float(incs[-1][1]) * r / (1 - r) if r < 1 else math.inf
    converged = rel < rel_tol and (slope is None or slope <= slope_max) and all(b >= a for a, b in zip(sums, sums[1:]))
    if slope is None and any(d for _, d in incs):
        converged = False
    return HSReport(list(Ns), sums, slope, rel, converged, tail)


# ---------------------------------------------------------------------------
# finite rank


@dataclass
class RankReport:
    Ns: list[int]
    ranks: list[int]
    support_bounds: list[int]
    stable: bool

    def to_json(self) -> dict:
        return {"Ns": self.Ns, "ranks": self.ranks, "support_bounds": self.support_bounds, "stable": self.stable}


def exact_rank(A: VermaMatrix, N: int | None = None) -> int:
    N = A.N if N is None else N
    rows: dict[int, dict[int, object]] = {}
    for m, n, v in A.nonzero():
        if m < N and n < N:
            rows.setdefault(m, {})[n] = to_qq(v)
    if not rows:
        return 0
    return DomainMatrix(rows, (N, N), QQ).rank()


def support_bound(A: VermaMatrix, N: int | None = None) -> int:
    """Largest index of a nonzero row or column in the leading block (-1 if zero)."""
    N = A.N if N is None else N
    return max((max(m, n) for m, n, _ in A.nonzero() if m < N and n < N), default=-1)


def finite_rank_check(A: VermaMatrix, Ns: Sequence[int]) -> RankReport:
    """Exact ranks and support bounds of the leading blocks; stable iff all equal."""
    Ns = sorted(Ns)
    if Ns[-1] > A.N:
        raise PreconditionError(f"matrix has only {A.N} rows")
    ranks = [exact_rank(A, N) for N in Ns]
    bounds = [support_bound(A, N) for N in Ns]
    return RankReport(list(Ns), ranks, bounds, len(set(ranks)) == 1 and len(set(bounds)) == 1)


# ---------------------------------------------------------------------------
# symbol against matrix


def matrix_vs_symbol_consistency(x, h, N: int) -> list[int]:
    """Basis indices where the reduced symbol disagrees with the true action."""
    h = parse_scalar(h)
    if isinstance(x, str):
        x = parse(x)
    M = matrix_of(x, h, N)
    op = to_operator(x, h)
    bad = set()
    degrees = op.degrees() | set(M.diagonals)
    for n in range(N):
        for d in degrees:
            m = n - d
            if m >= N:
                continue
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", CancellationWarning)
                    sv = eval_symbol_at(op, d, n) if d in op.degrees() else Fraction(0)
            except ModuleUndefined:
                bad.add(n)
                continue
            mv = M.entry(m, n) if m >= 0 else Fraction(0)
            if sv != mv:
                bad.add(n)
    return sorted(bad)
