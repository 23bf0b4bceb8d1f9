"""Coverage-goal ingestion and stable UID assignment.

Goal files are the test generator's JSON property listing: a list of entries,
where entries with "class": "coverage" describe one coverage goal each. All
numeric fields arrive as strings ("1", "5") and are parsed to integers.
Bytecode indices are instruction ordinals (sequence numbers), not byte
offsets.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING

from .classfile.descriptors import DescriptorError, parse_method_descriptor

if TYPE_CHECKING:
    from .covdb import HitCountDb


class GoalParseError(Exception):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class SignatureError(ValueError):
    pass


@dataclass(frozen=True)
class CoverageGoal:
    name: str
    description: str
    covered_lines: str
    file: str
    function: str         # "pkg.Class.method:(Args)Ret"
    line: int
    bytecode_index: int   # instruction ordinal within the method


def parse_function_signature(s: str) -> tuple[str, str, str]:
    """Split "a.b.C.m:(F)I" into ("a/b/C", "m", "(F)I").

    The class part is returned in internal (slash) form; `$` stays part of
    the class name, so nested classes work unchanged.
    """
    colon = s.find(":")
    if colon < 0:
        raise SignatureError(f"no ':' in function signature {s!r}")
    qualified, descriptor = s[:colon], s[colon + 1:]
    try:
        parse_method_descriptor(descriptor)
    except DescriptorError as e:
        raise SignatureError(f"bad descriptor in {s!r}: {e}") from None
    dot = qualified.rfind(".")
    if dot <= 0 or dot == len(qualified) - 1:
        raise SignatureError(f"no class/method separator in {s!r}")
    cls = qualified[:dot].replace(".", "/")
    method = qualified[dot + 1:]
    return cls, method, descriptor


def goal_key(goal: CoverageGoal) -> str:
    """Database key: function signature plus the instrumentation site ordinal."""
    return f"{goal.function}@{goal.bytecode_index}"


def _require(entry: dict, key: str, path: str):
    if key not in entry:
        raise GoalParseError(path, f"goal entry missing required field {key!r}")
    return entry[key]


def _to_int(raw, what: str, path: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise GoalParseError(path, f"{what} is not an integer: {raw!r}") from None


def parse_goals(text: str, path: str = "<goals>") -> list[CoverageGoal]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GoalParseError(path, f"invalid JSON: {e}") from None
    if isinstance(doc, dict):
        doc = doc.get("properties", [])
    if not isinstance(doc, list):
        raise GoalParseError(path, "expected a JSON array of property entries")

    goals: list[CoverageGoal] = []
    seen: set[str] = set()
    for entry in doc:
        if not isinstance(entry, dict) or entry.get("class") != "coverage":
            continue
        name = _require(entry, "name", path)
        loc = _require(entry, "sourceLocation", path)
        function = _require(loc, "function", path)
        try:
            parse_function_signature(function)
        except SignatureError as e:
            raise GoalParseError(path, str(e)) from None
        bytecode_index = _to_int(_require(loc, "bytecodeIndex", path), "bytecodeIndex", path)
        line = _to_int(loc.get("line", 1), "line", path)
        if bytecode_index < 0:
            raise GoalParseError(path, f"negative bytecodeIndex in goal {name!r}")
        if line < 1:
            raise GoalParseError(path, f"line must be >= 1 in goal {name!r}")
        if name in seen:
            raise GoalParseError(path, f"duplicate goal name {name!r}")
        seen.add(name)
        goals.append(CoverageGoal(
            name=name,
            description=entry.get("description", ""),
            covered_lines=str(entry.get("coveredLines", "")),
            file=loc.get("file", ""),
            function=function,
            line=line,
            bytecode_index=bytecode_index,
        ))
    return goals


def serialize_goals(goals: list[CoverageGoal]) -> str:
    """Inverse of parse_goals over the goal model (string-typed numerics)."""
    entries = []
    for g in goals:
        d = asdict(g)
        entries.append({
            "class": "coverage",
            "coveredLines": d["covered_lines"],
            "description": d["description"],
            "expression": "false",
            "name": d["name"],
            "sourceLocation": {
                "bytecodeIndex": str(d["bytecode_index"]),
                "file": d["file"],
                "function": d["function"],
                "line": str(d["line"]),
            },
        })
    return json.dumps(entries, indent=2)


def assign_uids(goals: list[CoverageGoal], db: "HitCountDb") -> dict[str, int]:
    """Map goal keys to dense UIDs, reusing the database's existing mapping.

    Keys already known keep their UID; new keys get consecutive UIDs above the
    current maximum, in goal-file order. Re-running with identical inputs is a
    no-op.
    """
    mapping: dict[str, int] = {}
    next_uid = db.next_uid()
    for goal in goals:
        key = goal_key(goal)
        uid = db.uid_for_key(key)
        if uid is None:
            uid = next_uid
            next_uid += 1
            db.register(uid, key, goal.name)
        mapping[key] = uid
    return mapping
