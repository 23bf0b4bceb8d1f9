"""Greedy subset-cover heuristic for picking a small set of candidate tests.

Traces are sorted by how many goals they cover, largest first (ties keep
input order), then scanned: a trace is kept only if it covers at least one
goal no previously kept trace covers. Optimal set cover is NP-complete; the
greedy answer is within the usual 1 + ln(n) factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class TraceFormatError(Exception):
    pass


@dataclass(frozen=True)
class Trace:
    id: str
    goals: tuple[str, ...]  # deduplicated, input order preserved

    @property
    def goal_set(self) -> frozenset[str]:
        return frozenset(self.goals)


def make_trace(trace_id: str, goals) -> Trace:
    seen = []
    for g in goals:
        if g not in seen:
            seen.append(g)
    return Trace(str(trace_id), tuple(seen))


def greedy_minimize(traces: list[Trace]) -> list[Trace]:
    ordered = sorted(range(len(traces)), key=lambda i: (-len(traces[i].goals), i))
    covered: set[str] = set()
    kept: list[Trace] = []
    for i in ordered:
        t = traces[i]
        if t.goal_set - covered:
            covered |= t.goal_set
            kept.append(t)
    return kept


def minimize_against_existing(traces: list[Trace], already_covered: set[str]) -> list[Trace]:
    """Drop goals an existing suite already covers, then minimize the rest."""
    remaining = []
    for t in traces:
        goals = tuple(g for g in t.goals if g not in already_covered)
        if goals:
            remaining.append(Trace(t.id, goals))
    return greedy_minimize(remaining)


def load_traces(text: str) -> list[Trace]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TraceFormatError(f"invalid JSON: {e}") from None
    if not isinstance(doc, list):
        raise TraceFormatError("traces must be a JSON array of {id, goals}")
    traces = []
    for i, entry in enumerate(doc):
        try:
            traces.append(make_trace(entry["id"], entry["goals"]))
        except (KeyError, TypeError) as e:
            raise TraceFormatError(f"trace entry {i}: {e}") from None
    return traces


def dump_traces(traces: list[Trace]) -> list[dict]:
    return [{"id": t.id, "goals": list(t.goals)} for t in traces]
