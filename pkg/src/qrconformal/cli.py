"""Command line entry point: ``qrconf <command> [options]``.

Every command prints a JSON report (or CSV / a plain table) and exits with
0 when all checks pass, 1 on a failed check, 2 on a usage error and 3 when
an operator is undefined on the requested Verma module.  Reports contain
no timing data; elapsed time goes to stderr so that identical
configurations give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

from . import __version__
from .asymptotics import central_coefficient, charge_str, expand_defect, order_swap_experiment
from .errors import ModuleUndefined, NonPositiveNorms, PreconditionError, QRConformalError
from .exact_arith import parse_scalar, scalar_str
from .expr import defect_expr, parse
from .generators import (
    GeneratorCatalog,
    IdentityReport,
    defect,
    verify_berezin,
    verify_DF_relations,
    verify_fD_commutation,
    verify_fF_commutation,
    verify_sl2_table,
    verify_tensor_relation,
    verify_witt_halfplane,
)
from .symbol_ore import validate_membership
from .verma import finite_rank_check, hs_partial_norm, matrix_of
from .witt_vir import (
    cocycle_identity_check,
    e,
    gauss_str,
    gelfand_fuchs,
    gelfand_fuchs_on_basis,
    normalize_to_virasoro,
    table_discrepancy_report,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNDEFINED = 0, 1, 2, 3
RANK_LIMIT = 256  # exact ranks are computed only for truncations up to this size
EXACT_DIGITS = 60  # exact partial sums are printed when they stay this short


@dataclass
class RunConfig:
    command: str
    h: str | None = None
    h0: str = "1/2"
    i: int = 2
    j: int = -2
    max_index: int = 4
    order: int = 1
    truncations: list[int] = field(default_factory=lambda: [100, 200, 400])
    format: str = "json"
    out: str | None = None
    seed: int = 0
    triples: int | None = None
    table_compare: bool = False
    reference: str = "base"
    expr: str | None = None
    inject_failure: str | None = None

    def __post_init__(self):
        for name in ("h", "h0"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, scalar_str(parse_scalar(val)))
        if any(b <= a for a, b in zip(self.truncations, self.truncations[1:])):
            raise PreconditionError("truncations must be strictly increasing")
        if any(n <= 0 for n in self.truncations):
            raise PreconditionError("truncations must be positive")


@dataclass
class RunReport:
    command: str
    config: dict
    checks: list[dict] = field(default_factory=list)
    payload: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c["passed"] for c in self.checks)

    def check(self, name: str, passed: bool, **detail) -> None:
        self.checks.append({"name": name, "passed": bool(passed), **detail})

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "version": __version__,
            "passed": self.passed,
            "checks": self.checks,
            "payload": self.payload,
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_table(self) -> str:
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            extra = ", ".join(f"{k}={v}" for k, v in c.items() if k not in ("name", "passed") and isinstance(v, (str, int)))
            lines.append(f"  [{'ok' if c['passed'] else 'FAIL'}] {c['name']}" + (f" ({extra})" if extra else ""))
        if self.error:
            lines.append(f"  error: {self.error}")
        return "\n".join(lines) + "\n"


def _config_echo(cfg: RunConfig) -> dict:
    return {k: v for k, v in asdict(cfg).items() if k not in ("out", "inject_failure") and v is not None}


def _weight(cfg: RunConfig):
    return None if cfg.h is None else parse_scalar(cfg.h)


# ---------------------------------------------------------------------------
# commands


def _identity_reports(cfg: RunConfig) -> list[IdentityReport]:
    w = _weight(cfg)
    m = cfg.max_index
    reps = verify_sl2_table(w) + verify_DF_relations(w) + verify_berezin(w)
    reps += [verify_tensor_relation(i, n, fam, w) for fam in ("L", "J") for i in (-1, 0, 1) for n in range(-2 * m, 2 * m + 1)]
    reps += [verify_witt_halfplane(a, b, w) for a in range(-1, m + 2) for b in range(-1, m + 2)]
    reps += [verify_witt_halfplane(a, b, w) for a in range(-m - 1, 2) for b in range(-m - 1, 2) if not (a >= -1 and b >= -1)]
    polys = ([0, 0, 1], [1, -2, 0, 3], [0, 1, 1, 1, 1])
    for verify in (verify_fD_commutation, verify_fF_commutation):
        for n in range(-1, m + 1):
            for f in polys:
                r = verify(n, f, w)
                r.name += f" with f = {f}"
                reps.append(r)
    return reps


def cmd_verify_exact(cfg: RunConfig) -> RunReport:
    rep = RunReport("verify-exact", _config_echo(cfg))
    reports = _identity_reports(cfg)
    if cfg.inject_failure:
        hit = [r for r in reports if cfg.inject_failure in r.name]
        if not hit:
            raise PreconditionError(f"no identity matches {cfg.inject_failure!r}")
        target = hit[0]
        target.residual = target.residual + GeneratorCatalog(_weight(cfg)).one
        target.skipped = None
    skipped = []
    for r in reports:
        if r.skipped:
            skipped.append({"name": r.name, "reason": r.skipped})
        else:
            rep.check(r.name, r.passed)
    rep.payload = {"skipped": skipped, "identities": len(reports)}
    return rep


def _short_exact(x: Fraction) -> str | None:
    text = scalar_str(x)
    return text if len(text) <= EXACT_DIGITS else None


def cmd_defect(cfg: RunConfig) -> RunReport:
    rep = RunReport("defect", _config_echo(cfg))
    if cfg.h is None:
        raise PreconditionError("--h is required")
    h = parse_scalar(cfg.h)
    i, j = cfg.i, cfg.j
    if not defect(i, j):
        rep.payload = {"zero_defect": True}
        rep.check("defect vanishes identically", True)
        return rep
    ops = [GeneratorCatalog(None).L(k) for k in (i, j, i + j)]
    for op in ops:
        mem = validate_membership(op.subs_param(h))
        if not mem.valid:
            raise ModuleUndefined(mem.offending[0][1], f"pole at h = {h}")
    Ns = cfg.truncations
    A = matrix_of(defect_expr(i, j), h, Ns[-1])
    payload: dict = {"zero_defect": False, "bandwidth": A.bandwidth, "nonzero_entries": sum(1 for _ in A.nonzero())}
    rank_Ns = [n for n in Ns if n <= RANK_LIMIT]
    if rank_Ns:
        rr = finite_rank_check(A, rank_Ns)
        payload["rank"] = rr.to_json()
    if h > 0:
        hs = hs_partial_norm(A, Ns=Ns)
        payload["hs"] = hs.to_json()
        payload["hs"]["partial_sums_exact"] = [_short_exact(x) for x in hs.partial_sums]
        rep.check("HS partial sums nondecreasing", all(b >= a for a, b in zip(hs.partial_sums, hs.partial_sums[1:])))
        rep.check("HS partial sums converged", hs.converged)
    else:
        payload["hs"] = {"skipped": f"h = {cfg.h} gives no positive inner product"}
    rep.payload = payload
    rep._matrix = A  # kept for CSV output
    return rep


def cmd_central_charge(cfg: RunConfig) -> RunReport:
    rep = RunReport("central-charge", _config_echo(cfg))
    i, h0 = cfg.i, parse_scalar(cfg.h0)
    central = central_coefficient(i, h0, cfg.reference)
    series = expand_defect(i, -i, h0, cfg.order, cfg.reference)
    swap = order_swap_experiment(i, h0)
    rep.payload = {
        "expansion": series.to_json(),
        "central": central.to_json(),
        "central_charge": charge_str(central.central_charge),
        "order_swap": str(swap),
    }
    rep.check("order-0 coefficient empty", series.order0_empty)
    rep.check("g1 - kappa decays (HS)", central.hs_flag)
    rep.check("order swap gives zero", not swap)
    rep.check(f"kappa = (2/3)(i^3 - i) = {central.expected}", central.matches_expected, kappa=scalar_str(central.kappa))
    return rep


def cmd_cocycle(cfg: RunConfig) -> RunReport:
    rep = RunReport("cocycle", _config_echo(cfg))
    m = cfg.max_index
    if cfg.triples is None:
        r = range(-m, m + 1)
        triples = [(a, b, c) for a in r for b in r for c in r]
    else:
        rng = random.Random(cfg.seed)
        triples = [tuple(rng.randint(-m, m) for _ in range(3)) for _ in range(cfg.triples)]
    if triples:
        bad = [t for t in triples if cocycle_identity_check(e(t[0]), e(t[1]), e(t[2]))]
        rep.check("2-cocycle identity", not bad, triples=len(triples), failures=[list(t) for t in bad])
        pairs = sorted({(t[0], t[1]) for t in triples})
        anti = [p for p in pairs if gelfand_fuchs(e(p[0]), e(p[1])) != -gelfand_fuchs(e(p[1]), e(p[0]))]
        rep.check("antisymmetry", not anti, pairs=len(pairs))
        norm = normalize_to_virasoro(gelfand_fuchs_on_basis)
        rep.check("normalization reproduces (j^3-j)/12", norm.ok)
        rep.payload["normalization"] = norm.to_json()
        rep.payload["gelfand_fuchs_pi_coefficient"] = {str(j): gauss_str(gelfand_fuchs_on_basis(j, -j)) for j in range(1, m + 1)}
    if cfg.table_compare:
        rep.payload["table"] = table_discrepancy_report(m).to_json()
    return rep


def cmd_export_matrix(cfg: RunConfig) -> RunReport:
    rep = RunReport("export-matrix", _config_echo(cfg))
    if cfg.h is None:
        raise PreconditionError("--h is required")
    x = parse(cfg.expr) if cfg.expr else defect_expr(cfg.i, cfg.j)
    N = cfg.truncations[0]
    A = matrix_of(x, parse_scalar(cfg.h), N)
    rep.payload = {
        "expr": str(x),
        "N": N,
        "entries": [[m, n, scalar_str(v)] for m, n, v in A.nonzero()],
    }
    rep._matrix = A
    return rep


COMMANDS = {
    "verify-exact": cmd_verify_exact,
    "defect": cmd_defect,
    "central-charge": cmd_central_charge,
    "cocycle": cmd_cocycle,
    "export-matrix": cmd_export_matrix,
}


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _rational(text: str) -> str:
    try:
        return scalar_str(parse_scalar(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected an exact rational like 3/4, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qrconf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=["json", "csv", "table"], default="json")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    sp = common(sub.add_parser("verify-exact", help="exact identity suites"))
    sp.add_argument("--h", type=_rational, help="concrete weight (default: symbolic h)")
    sp.add_argument("--max-index", type=int, default=4)
    sp.add_argument("--inject-failure", help=argparse.SUPPRESS)

    sp = common(sub.add_parser("defect", help="defect matrix, HS partial norms and rank"))
    sp.add_argument("--h", type=_rational, required=True)
    sp.add_argument("--i", type=int, default=2)
    sp.add_argument("--j", type=int, default=-2)
    sp.add_argument("--truncations", type=_int_list, default=[100, 200, 400])

    sp = common(sub.add_parser("central-charge", help="hbar-expansion and central term"))
    sp.add_argument("--i", type=int, default=2)
    sp.add_argument("--h0", type=_rational, default="1/2")
    sp.add_argument("--order", type=int, default=1)
    sp.add_argument("--reference", choices=["base", "shifted"], default="base")

    sp = common(sub.add_parser("cocycle", help="Gelfand-Fuchs cocycle checks"))
    sp.add_argument("--max-index", type=int, default=4)
    sp.add_argument("--triples", type=int, help="number of random triples (default: all)")
    sp.add_argument("--table-compare", action="store_true")

    sp = common(sub.add_parser("export-matrix", help="exact matrix of an operator expression"))
    sp.add_argument("--h", type=_rational, required=True)
    sp.add_argument("--i", type=int, default=2)
    sp.add_argument("--j", type=int, default=-2)
    sp.add_argument("--expr", help='expression such as "[L2,L-2] - 4*L0"')
    sp.add_argument("--truncations", type=_int_list, default=[16])
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__ and v is not None}
    return RunConfig(**fields)


def render(rep: RunReport, fmt: str) -> str:
    if fmt == "table":
        return rep.to_table()
    if fmt == "csv":
        A = getattr(rep, "_matrix", None)
        if A is None:
            raise PreconditionError("csv output is available for defect and export-matrix")
        return A.to_csv()
    return rep.to_json()


def run(cfg: RunConfig) -> tuple[RunReport, int]:
    try:
        rep = COMMANDS[cfg.command](cfg)
    except ModuleUndefined as exc:
        rep = RunReport(cfg.command, _config_echo(cfg), error=f"ModuleUndefined: {exc}")
        return rep, EXIT_UNDEFINED
    except (NonPositiveNorms, PreconditionError) as exc:
        rep = RunReport(cfg.command, _config_echo(cfg), error=f"{type(exc).__name__}: {exc}")
        return rep, EXIT_USAGE
    except QRConformalError as exc:
        rep = RunReport(cfg.command, _config_echo(cfg), error=f"{type(exc).__name__}: {exc}")
        return rep, EXIT_FAIL
    return rep, EXIT_OK if rep.passed else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (PreconditionError, ValueError) as exc:
        parser.error(str(exc))
    start = time.perf_counter()
    rep, code = run(cfg)
    try:
        text = render(rep, cfg.format)
    except PreconditionError as exc:
        print(f"qrconf: {rep.error or exc}", file=sys.stderr)
        return code if rep.error else EXIT_USAGE
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"qrconf: {cfg.command} finished in {time.perf_counter() - start:.2f}s (exit {code})", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
