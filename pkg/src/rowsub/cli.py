"""Command-line driver.

    rowsub infer [--trace] (-e EXPR | FILE)
    rowsub repl

Exit codes: 0 success, 1 type error, 2 parse error, 3 usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence, TextIO

from .coalesce import coalesce, print_type
from .infer import Engine, TypingError
from .syntax import ParseError, parse
from .trace import TraceEvent, format_trace

__all__ = ["main", "run", "infer_source", "EXIT_OK", "EXIT_TYPE", "EXIT_PARSE", "EXIT_USAGE"]

EXIT_OK, EXIT_TYPE, EXIT_PARSE, EXIT_USAGE = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="rowsub", description="Type inference for extensible records.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    p_infer = sub.add_parser("infer", help="infer the type of one term")
    p_infer.add_argument("--trace", action="store_true", help="print the inference trace first")
    src = p_infer.add_mutually_exclusive_group(required=True)
    src.add_argument("-e", dest="expr", metavar="EXPR", help="term given inline")
    src.add_argument("file", nargs="?", metavar="FILE", help="UTF-8 file holding one term")
    sub.add_parser("repl", help="read one term per line; :q quits")
    return parser


def infer_source(source: str, trace: bool = False) -> tuple[str, list[TraceEvent]]:
    """Parse and type ``source``; returns the printed type and trace events.

    Raises ParseError or TypingError.
    """
    events: list[TraceEvent] = []
    term = parse(source)
    engine = Engine(events.append if trace else None)
    return print_type(coalesce(engine.infer(term))), events


def _report(exc: Exception, err: TextIO) -> int:
    if isinstance(exc, ParseError):
        print(f"parse error: {exc.line}:{exc.column}: {exc.message}", file=err)
        return EXIT_PARSE
    print(f"type error: {exc}", file=err)
    return EXIT_TYPE


def _infer(args, out: TextIO, err: TextIO) -> int:
    if args.expr is not None:
        source = args.expr
    else:
        try:
            with open(args.file, encoding="utf-8") as fh:
                source = fh.read()
        except (OSError, UnicodeDecodeError) as e:
            print(f"error: cannot read {args.file}: {e}", file=err)
            return EXIT_USAGE
    try:
        printed, events = infer_source(source, trace=args.trace)
    except (ParseError, TypingError) as e:
        return _report(e, err)
    if args.trace:
        out.write(format_trace(events))
    print(f"inferred: {printed}", file=out)
    return EXIT_OK


def _repl(inp: TextIO, out: TextIO, err: TextIO) -> int:
    for line in inp:
        line = line.strip()
        if line == ":q":
            break
        if not line:
            continue
        try:
            printed, _ = infer_source(line)
        except (ParseError, TypingError) as e:
            _report(e, err)
            continue
        print(printed, file=out, flush=True)
    return EXIT_OK


def run(
    argv: Sequence[str],
    stdin: Optional[TextIO] = None,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
) -> int:
    inp = stdin or sys.stdin
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    try:
        args = _build_parser().parse_args(list(argv))
    except _UsageError as e:
        print(f"usage error: {e}", file=err)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return EXIT_OK if not e.code else EXIT_USAGE
    if args.command == "infer":
        return _infer(args, out, err)
    return _repl(inp, out, err)


def main() -> None:
    sys.exit(run(sys.argv[1:]))
