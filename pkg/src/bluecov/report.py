"""Execution-coverage report and uncovered-goal diffing."""

from __future__ import annotations

from .covdb import HitCountDb


def generate_report(db: HitCountDb) -> list[dict]:
    """One entry per goal known to the db, ordered by UID, zero hits included."""
    return [
        {"name": db.meta[uid].name, "hitCount": db.counts.get(uid, 0)}
        for uid in sorted(db.meta)
    ]


def uncovered(report: list[dict]) -> list[str]:
    """Goal names with hit count 0, in report order; input for the generator."""
    return [entry["name"] for entry in report if entry["hitCount"] == 0]
