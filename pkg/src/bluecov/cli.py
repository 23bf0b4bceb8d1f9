"""Command line driver for the instrument / run / report / uncovered /
minimize workflow.

All command output is JSON on stdout; diagnostics go to stderr. Exit codes:
0 success, 1 test failure, 2 input or state error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import covdb, minijvm, report
from .classfile import ClassFileError
from .covdb import DbCorrupt, DbIoError, HitCountDb
from .goals import GoalParseError, SignatureError, assign_uids, parse_goals
from .instrument import InstrumentError, instrument_class
from .minimize import TraceFormatError, dump_traces, greedy_minimize, \
    load_traces, minimize_against_existing

log = logging.getLogger("bluecov")

EXIT_OK = 0
EXIT_TEST_FAILURE = 1
EXIT_ERROR = 2


class CliError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


def _emit(payload, out_path: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def _read_text(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise CliError(f"{what} not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _read_bytes(path: str, what: str) -> bytes:
    if not os.path.isfile(path):
        raise CliError(f"{what} not found: {path}")
    with open(path, "rb") as f:
        return f.read()


def _load_models(paths: list[str]):
    from .classfile import parse_class
    models = []
    for p in paths:
        models.append(parse_class(_read_bytes(p, "class file")))
    return models


def cmd_instrument(args) -> int:
    goals = parse_goals(_read_text(args.goals, "goals file"), args.goals)
    class_paths = args.classes or []
    for p in class_paths:
        if not os.path.isfile(p):
            raise CliError(f"class file not found: {p}")
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)

    db = HitCountDb.open(args.db)
    uids = assign_uids(goals, db)
    db.save()

    outputs = []
    touched = 0
    sites = 0
    unmatched_everywhere: set[str] | None = None
    placed_by_class = {}
    for path in class_paths:
        data = _read_bytes(path, "class file")
        new_bytes, placed, warnings = instrument_class(data, goals, uids)
        warned_names = {name for name, _ in warnings}
        unmatched_everywhere = (warned_names if unmatched_everywhere is None
                                else unmatched_everywhere & warned_names)
        out_path = os.path.join(out_dir, os.path.basename(path))
        with open(out_path, "wb") as f:
            f.write(new_bytes)
        outputs.append(out_path)
        placed_by_class[os.path.basename(path)] = placed
        if placed:
            touched += 1
            sites += len(placed)
        log.info("instrumented %s: %d sites", path, len(placed))

    warning_names = sorted(unmatched_everywhere) if unmatched_everywhere else []
    _emit({
        "classesTouched": touched,
        "sitesInstrumented": sites,
        "goals": len(goals),
        "db": args.db,
        "outputs": outputs,
        "instrumentedUids": placed_by_class,
        "warnings": warning_names,
    }, None)
    return EXIT_OK


def cmd_run(args) -> int:
    models = _load_models(args.classes or [])
    tests = minijvm.load_suite(_read_text(args.suite, "suite file"))
    result = minijvm.run_suite(models, tests, args.db, first_hit=args.first_hit)
    _emit(result, args.out)
    return EXIT_OK if result["failed"] == 0 else EXIT_TEST_FAILURE


def _open_existing_db(path: str) -> HitCountDb:
    if not os.path.isfile(path):
        raise CliError(f"coverage database not found: {path}")
    return HitCountDb.open(path)


def cmd_report(args) -> int:
    db = _open_existing_db(args.db)
    _emit(report.generate_report(db), args.out)
    return EXIT_OK


def cmd_uncovered(args) -> int:
    db = _open_existing_db(args.db)
    _emit(report.uncovered(report.generate_report(db)), args.out)
    return EXIT_OK


def cmd_minimize(args) -> int:
    traces = load_traces(_read_text(args.traces, "traces file"))
    if args.db and os.path.isfile(args.db):
        db = HitCountDb.open(args.db)
        covered = {e["name"] for e in report.generate_report(db) if e["hitCount"] > 0}
        kept = minimize_against_existing(traces, covered)
    else:
        kept = greedy_minimize(traces)
    _emit(dump_traces(kept), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bluecov",
        description="Goal-driven JVM bytecode coverage instrumentation and measurement.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_db(p):
        p.add_argument("--db", default=None,
                       help=f"coverage database path (default: ${covdb.DB_PATH_ENV_VAR} "
                            f"or {covdb.DEFAULT_DB_NAME})")

    p = sub.add_parser("instrument", help="instrument class files with coverage goals")
    p.add_argument("--goals", required=True, help="test generator goal JSON file")
    p.add_argument("--classes", action="append", metavar="CLASSFILE",
                   help="class file to instrument (repeatable)")
    p.add_argument("--out", default=None, help="output directory (default: .)")
    add_db(p)
    p.set_defaults(func=cmd_instrument)

    p = sub.add_parser("run", help="run a test suite on the interpreter")
    p.add_argument("--suite", required=True, help="test suite JSON file")
    p.add_argument("--classes", action="append", metavar="CLASSFILE",
                   help="class file to load (repeatable)")
    p.add_argument("--first-hit", action="store_true",
                   help="record only the first hit of each goal")
    p.add_argument("--out", default=None, help="write results JSON here instead of stdout")
    add_db(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="emit hit counts for every goal")
    p.add_argument("--out", default=None)
    add_db(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("uncovered", help="emit names of goals with zero hits")
    p.add_argument("--out", default=None)
    add_db(p)
    p.set_defaults(func=cmd_uncovered)

    p = sub.add_parser("minimize", help="greedy-minimize a candidate trace set")
    p.add_argument("--traces", required=True, help="traces JSON file")
    p.add_argument("--out", default=None)
    add_db(p)
    p.set_defaults(func=cmd_minimize)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "db"):
        args.db = covdb.default_db_path(args.db)
    try:
        return args.func(args)
    except (CliError, ClassFileError, GoalParseError, SignatureError,
            InstrumentError, DbCorrupt, DbIoError, TraceFormatError,
            minijvm.SuiteFormatError, minijvm.MiniJvmError) as e:
        _emit({"error": type(e).__name__, "message": str(e)}, None)
        log.error("%s", e)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
