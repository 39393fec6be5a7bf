"""Command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .automata import program_to_buchi, to_dot
from .certifier import check_certificate
from .driver import (BUDGET_EXHAUSTED, TERMINATING, UNKNOWN, AnalysisConfig,
                     SoundnessError, analyze)
from .frontend import ParseError, parse_program
from .report import Report, ReportError, check_report, emit_stats_row, load_report

EXIT_CODES = {TERMINATING: 0, UNKNOWN: 1, BUDGET_EXHAUSTED: 2}
EXIT_INPUT, EXIT_CERT = 3, 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which here means budget exhaustion
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="termdec", description="Termination proofs by decomposition into certified modules.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pr = sub.add_parser("prove", help="analyse a program")
    pr.add_argument("file")
    pr.add_argument("--format", choices=["wprog", "cfg"], default=None,
                    help="input syntax (default: from the file extension)")
    pr.add_argument("--max-iter", type=int, default=50)
    pr.add_argument("--timeout", type=float, default=60.0, help="seconds")
    pr.add_argument("--state-budget", type=int, default=200_000)
    pr.add_argument("--report", metavar="PATH", help="write the JSON report (a directory gets report.json)")
    pr.add_argument("--dot", metavar="DIR", help="write DOT graphs of the program and modules")
    pr.add_argument("--no-check-certificates", dest="check", action="store_false")
    pr.add_argument("--emit-remainder", action="store_true",
                    help="keep the uncovered automaton when no proof is found")
    pr.add_argument("--stats-row", action="store_true", help="print the statistics row")

    cc = sub.add_parser("check-cert", help="re-validate a saved report")
    cc.add_argument("dir", help="report file or directory containing report.json")
    return ap


def _format_of(path: str, fmt: str | None) -> str:
    if fmt:
        return fmt
    return "cfg" if path.endswith(".cfg") else "wprog"


def _write_dot(out: Path, res) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "program.dot").write_text(to_dot(program_to_buchi(res.program), "program"))
    for k, em in enumerate(res.modules):
        (out / f"module_{k}.dot").write_text(em.to_dot(f"module_{k}"))
    if res.remainder is not None:
        (out / "remainder.dot").write_text(to_dot(res.remainder, "remainder"))


def _prove(args) -> int:
    try:
        source = Path(args.file).read_text()
        prog = parse_program(source, _format_of(args.file, args.format))
        cfg = AnalysisConfig(max_iterations=args.max_iter, timeout=args.timeout,
                             state_budget=args.state_budget,
                             check_certificates=args.check,
                             emit_remainder=args.emit_remainder)
    except (OSError, ParseError, ValueError) as e:
        print(f"termdec: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        res = analyze(prog, cfg)
    except SoundnessError as e:
        print(f"termdec: certificate violation: {e}", file=sys.stderr)
        return EXIT_CERT

    problems = []
    if args.check:
        for k, em in enumerate(res.modules):
            problems += [f"module {k}: {p}" for p in check_certificate(em.materialize())]
    report = Report.from_result(res, args.file)
    if args.report:
        report.write(args.report)
    if args.dot:
        _write_dot(Path(args.dot), res)

    print(res.verdict)
    if res.reason:
        print(f"reason: {res.reason}")
    if res.lasso is not None and res.verdict != TERMINATING:
        print(f"lasso: {res.lasso}")
    for k, em in enumerate(res.modules):
        print(f"module {k}: f = {em.rank}, {len(em)} states")
    if args.stats_row:
        print(emit_stats_row(report, header=True))
    if problems:
        for p in problems:
            print(f"termdec: {p}", file=sys.stderr)
        return EXIT_CERT
    return EXIT_CODES[res.verdict]


def _check_cert(args) -> int:
    try:
        report = load_report(args.dir)
        problems = check_report(report)
    except (ReportError, ParseError, ValueError, KeyError) as e:
        print(f"termdec: {e}", file=sys.stderr)
        return EXIT_INPUT
    if problems:
        for p in problems:
            print(f"violation: {p}")
        return EXIT_CERT
    print(f"ok: {len(report.modules)} modules certified, verdict {report.verdict}")
    return 0


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except _UsageError as e:
        print(ap.format_usage().rstrip(), file=sys.stderr)
        print(e, file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "prove":
        return _prove(args)
    return _check_cert(args)


if __name__ == "__main__":
    sys.exit(main())
