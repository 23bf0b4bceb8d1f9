"""bluecov: goal-driven JVM bytecode coverage instrumentation and measurement.

Closes the loop between a test generator's generation coverage and the
execution coverage observed when tests actually run: ingest the generator's
coverage goals, instrument class files so each goal site records a hit,
measure hit counts persistently, report uncovered goals back, and minimize
candidate test sets.
"""

from .classfile import emit_class, parse_class
from .covdb import HitCountDb, SessionRecorder, first_hit_mode, flush, read_counts, record
from .goals import CoverageGoal, assign_uids, goal_key, parse_function_signature, parse_goals
from .instrument import build_plan, ensure_runtime_field, instrument_class, instrument_method
from .minijvm import Interpreter, TestCase, run_suite
from .minimize import Trace, greedy_minimize, minimize_against_existing
from .report import generate_report, uncovered

__version__ = "0.1.0"

__all__ = [
    "CoverageGoal", "HitCountDb", "Interpreter", "SessionRecorder", "TestCase",
    "Trace", "assign_uids", "build_plan", "emit_class", "ensure_runtime_field",
    "first_hit_mode", "flush", "generate_report", "goal_key", "greedy_minimize",
    "instrument_class", "instrument_method", "minimize_against_existing",
    "parse_class", "parse_function_signature", "parse_goals", "read_counts",
    "record", "run_suite", "uncovered",
]
