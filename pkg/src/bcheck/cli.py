"""``bcheck`` command line.

Exit status: 0 success, 1 type error / not congruent / self-test failure,
2 usage or syntax error.  Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import ast as A
from .checker import TypeCheckError, check_behaviour, format_derivation
from .congruence import congruent, format_trace, normalize
from .context import DuplicateDeclError
from .parser import ParseError, parse_behaviour, parse_context, pretty_behaviour, pretty_context

OK, FAIL, USAGE = 0, 1, 2
MAX_SELFTEST_SIZE = 8


class _Abort(Exception):
    def __init__(self, code: int) -> None:
        self.code = code


def _color() -> bool:
    return os.environ.get("BCHECK_COLOR", "0") == "1"


def _diag(label: str, message: str) -> None:
    if _color():
        label = f"\x1b[1;31m{label}\x1b[0m"
    print(f"{label}: {message}", file=sys.stderr)


def _line_col(data: bytes, offset: int) -> tuple[int, int]:
    line = data.count(b"\n", 0, offset) + 1
    return line, offset - (data.rfind(b"\n", 0, offset) + 1) + 1


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        _diag("error", f"cannot read {path}: {exc.strerror}")
        raise _Abort(USAGE) from None


def _parse(path: str, parse, enumerator: Optional[A.VariableEnumerator]):
    data = _read(path)
    try:
        return data, parse(data, enumerator)
    except (ParseError, DuplicateDeclError) as exc:
        span = exc.span
        where = path
        if span is not None:
            line, col = _line_col(data, span.start)
            where = f"{path}:{line}:{col}"
        message = exc.msg if isinstance(exc, ParseError) else str(exc)
        expected = getattr(exc, "expected", None)
        if expected and "expected" not in message:
            message += f" (expected {', '.join(sorted(expected))})"
        _diag(f"{where}: syntax error", message)
        raise _Abort(USAGE) from None


def _names(enumerator: Optional[A.VariableEnumerator]):
    return None if enumerator is None else enumerator.names()


def cmd_check(args: argparse.Namespace) -> int:
    en = A.VariableEnumerator() if args.paths else None
    _, g = _parse(args.context, parse_context, en)
    data, b = _parse(args.program, parse_behaviour, en)
    names = _names(en)
    try:
        post, d = check_behaviour(g, b, paper_core=args.paper_core)
    except TypeCheckError as exc:
        where = args.program
        extra = ""
        span = getattr(exc.subject, "span", None)
        if span is not None:
            line, col = _line_col(data, span.start)
            where = f"{args.program}:{line}:{col}"
            snippet = data[span.start:span.end].decode("utf-8", "replace")
            extra = f"\n  at bytes {span.start}..{span.end}: {snippet}"
        _diag(f"{where}: type error", f"{exc.kind}: {exc.detail}{extra}")
        return FAIL
    print(pretty_context(post, names))
    if args.derive:
        sys.stdout.write(format_derivation(d, names))
    return OK


def cmd_congruent(args: argparse.Namespace) -> int:
    en = A.VariableEnumerator() if args.paths else None
    _, b1 = _parse(args.program_a, parse_behaviour, en)
    _, b2 = _parse(args.program_b, parse_behaviour, en)
    trace = congruent(b1, b2)
    if trace is None:
        print("not congruent")
        return FAIL
    sys.stdout.write(format_trace(trace))
    return OK


def cmd_normalize(args: argparse.Namespace) -> int:
    en = A.VariableEnumerator() if args.paths else None
    _, b = _parse(args.program, parse_behaviour, en)
    print(pretty_behaviour(normalize(b), _names(en)))
    return OK


def cmd_selftest(args: argparse.Namespace) -> int:
    from .oracle import run_selftest

    if not 0 <= args.max_size <= MAX_SELFTEST_SIZE:
        _diag("error", f"--max-size must be between 0 and {MAX_SELFTEST_SIZE}")
        return USAGE
    results = run_selftest(args.max_size, fault=args.inject_fault)
    width = max(len(r.name) for r in results)
    failed = False
    for r in results:
        status = "ok" if r.failed == 0 else "FAIL"
        print(f"{r.name:<{width}}  {r.checked:>8} checked  {r.failed:>6} failed  {status}")
        if r.failed:
            failed = True
            print(f"  counterexample: {r.example}")
    return FAIL if failed else OK


def build_parser() -> argparse.ArgumentParser:
    from .oracle import FAULT_KINDS

    p = argparse.ArgumentParser(prog="bcheck", description="Type checker for behavioural programs.")
    sub = p.add_subparsers(dest="command", required=True)

    def typing_cmd(name: str, help: str, derive: bool) -> None:
        c = sub.add_parser(name, help=help)
        c.add_argument("context", help="context file")
        c.add_argument("program", help="program file")
        if derive:
            c.add_argument("--derive", action="store_true", help="also print the derivation")
        else:
            c.set_defaults(derive=True)
        c.add_argument("--paper-core", action="store_true", help="only nil, if, while, ';' and '|'")
        c.add_argument("--paths", action="store_true", help="accept dotted variable paths")
        c.set_defaults(func=cmd_check)

    typing_cmd("check", "type a program", derive=True)
    typing_cmd("derive", "type a program and print its derivation", derive=False)

    c = sub.add_parser("congruent", help="decide structural congruence of two programs")
    c.add_argument("program_a")
    c.add_argument("program_b")
    c.add_argument("--paths", action="store_true", help="accept dotted variable paths")
    c.set_defaults(func=cmd_congruent)

    c = sub.add_parser("normalize", help="print the canonical form of a program")
    c.add_argument("program")
    c.add_argument("--paths", action="store_true", help="accept dotted variable paths")
    c.set_defaults(func=cmd_normalize)

    c = sub.add_parser("selftest", help="run the exhaustive self-test suites")
    c.add_argument("--max-size", type=int, required=True, metavar="N")
    c.add_argument("--inject-fault", choices=FAULT_KINDS, default=None, help=argparse.SUPPRESS)
    c.set_defaults(func=cmd_selftest)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Abort as exc:
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
