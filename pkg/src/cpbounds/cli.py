"""Command line interface: ``cpbounds <command> [options]``.

Exit codes: 0 success, 2 a verification or self-check mismatch, 3 invalid
input or an I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as cio
from .certificates import UNAVAILABLE, certify, closed_form_bound
from .errors import CpBoundsError, MismatchDetected, ParseError
from .exact import SdpModel
from .relaxations import ALL_KINDS, as_relaxation, build

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _kinds(values) -> list:
    kinds = []
    for value in values or []:
        kinds += [as_relaxation(v.strip()) for v in value.split(",") if v.strip()]
    return kinds


def _one_kind(args):
    kinds = _kinds(args.relaxation)
    if len(kinds) != 1:
        raise ParseError("exactly one --relaxation is required")
    if args.n is None:
        raise ParseError("--n is required")
    return kinds[0], args.n


def _emit(text: str, out):
    if out:
        cio._write(text, out)
    else:
        sys.stdout.write(text)


def cmd_build(args) -> int:
    kind, n = _one_kind(args)
    model = build(kind, n, args.strategy or "exhaustive")
    base = model.base if isinstance(model, SdpModel) else model
    lines = [f"relaxation: {kind.value}", f"n: {n}",
             f"variables: {len(base.variables)}", f"rows: {len(base.constraints)}"]
    if isinstance(model, SdpModel):
        lines.append("psd blocks: " + ", ".join(f"{b.name}({b.size})" for b in model.psd_blocks))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    from .solver import solve_relaxation

    kind, n = _one_kind(args)
    result = solve_relaxation(kind, n, args.strategy)
    lines = [f"status: {result.status}"]
    if result.optimal:
        lines += [f"gamma: {cio._ratio(result.value)}",
                  f"gamma_decimal: {cio.format_decimal(result.value, args.precision)}"]
        expected = closed_form_bound(kind, n)
        if expected is not UNAVAILABLE:
            lines.append(f"closed_form: {cio._ratio(expected)}")
    lines.append(f"pivots: {result.pivots}")
    if result.rounds:
        lines.append(f"separation rounds: {result.rounds}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    kind, n = _one_kind(args)
    report = certify(kind, n)
    closed = report.closed_form
    lines = [f"relaxation: {kind.value}", f"n: {n}",
             f"closed_form: {'unavailable' if closed is UNAVAILABLE else cio._ratio(closed)}",
             f"lower side (proof point): {'ok' if report.point_ok else 'FAILED'}: {report.point_detail}"]
    if report.dual_ok is None:
        lines.append(f"upper side: not applicable: {report.dual_detail}")
        ok = bool(report.point_ok)
    else:
        lines.append(f"upper side (aggregation): {'ok' if report.dual_ok else 'FAILED'}: "
                     f"{report.dual_detail}")
        ok = report.ok
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_MISMATCH


def _table(args):
    if not args.n_range:
        raise ParseError("--n-range A..B is required")
    exact = cio.load_exact_values(args.exact_values) if args.exact_values else cio.bundled_exact_values()
    return cio.bound_table(args.n_range, _kinds(args.relaxation), exact, args.method,
                           args.precision, args.strategy)


def cmd_table(args) -> int:
    _emit(cio.table_csv(_table(args)), args.out)
    return EXIT_OK


def cmd_plot(args) -> int:
    rows = _table(args)
    if not args.out:
        raise ParseError("--out is required for plot")
    cio.emit_plot(rows, args.out)
    return EXIT_OK


def cmd_export(args) -> int:
    kind, n = _one_kind(args)
    model = build(kind, n, args.strategy or "exhaustive")
    fmt = args.format or ("sdpa" if isinstance(model, SdpModel) else "lp")
    if fmt == "lp":
        if isinstance(model, SdpModel):
            raise ParseError("SDP models export only as sdpa")
        text = cio.export_lp(model)
    elif fmt == "sdpa":
        if not isinstance(model, SdpModel):
            raise ParseError("sdpa export needs an SDP relaxation")
        text = cio.export_sdpa(model)
    else:
        raise ParseError(f"export supports lp and sdpa, not {fmt}")
    _emit(text, args.out)
    return EXIT_OK


COMMANDS = {
    "build": (cmd_build, "build a relaxation and print its size"),
    "solve": (cmd_solve, "solve an LP relaxation exactly"),
    "verify": (cmd_verify, "check the proof point and the dual aggregation"),
    "table": (cmd_table, "write the bound table as CSV"),
    "export": (cmd_export, "write a model in LP or SDPA format"),
    "plot": (cmd_plot, "draw the bound table as SVG"),
}


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cpbounds", description="Exact LP/SDP bounds for circle packing in a square.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    names = ", ".join(k.value for k in ALL_KINDS)
    for name, (_func, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--relaxation", "-r", action="append",
                       help=f"relaxation name, repeatable or comma separated ({names})")
        p.add_argument("--n", type=int, help="number of points")
        p.add_argument("--n-range", help="inclusive range A..B")
        p.add_argument("--strategy", choices=["exhaustive", "triangle_only", "row_generation", "greedy"],
                       help="clique handling for MTclique/MTbndClique")
        p.add_argument("--format", choices=["lp", "sdpa", "csv", "svg"])
        p.add_argument("--method", choices=["closed_form", "solve"], default="closed_form",
                       help="how table values are obtained")
        p.add_argument("--exact-values", type=Path, help="CSV with columns n,gamma_exact")
        p.add_argument("--precision", type=int, default=12, help="significant digits")
        p.add_argument("--out", type=Path, help="output file (stdout when omitted)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        return func(args)
    except MismatchDetected as exc:
        print(f"mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (CpBoundsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
