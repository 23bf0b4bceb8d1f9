#!/usr/bin/env python3
"""Walk the five-step workflow end to end on the FloatTools fixture.

Builds the fixture class from the in-repo assembler, instruments it with the
nine-goal file, measures the three-test suite, reports hit counts, prints the
uncovered goal, then adds the NaN test and shows the completed coverage.

Usage: python3 scripts/run_paper_example.py [workdir]
"""

import json
import os
import shutil
import sys
import tempfile

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(REPO, "src"))
sys.path.insert(0, os.path.join(REPO, "tests"))

import fixtures  # noqa: E402  (tests/ provides the fixture assembler)
from bluecov.cli import main as bluecov  # noqa: E402


def step(title: str, *argv) -> int:
    print(f"\n=== {title}\n$ bluecov {' '.join(argv)}", flush=True)
    return bluecov(list(argv))


def main() -> int:
    workdir = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="bluecov-demo-")
    os.makedirs(workdir, exist_ok=True)
    os.chdir(workdir)
    print(f"working directory: {workdir}")

    with open("FloatTools.class", "wb") as f:
        f.write(fixtures.build_floattools())
    data = os.path.join(REPO, "tests", "data")
    shutil.copy(os.path.join(data, "floattools_goals.json"), "goals.json")
    shutil.copy(os.path.join(data, "floattools_suite.json"), "suite.json")
    shutil.copy(os.path.join(data, "floattools_suite_complete.json"),
                "suite_complete.json")

    step("1. property instrumentation (goals -> db + instrumented classes)",
         "instrument", "--goals", "goals.json", "--classes", "FloatTools.class",
         "--out", "instrumented", "--db", "blueCov.db")
    step("2. measure existing coverage (three-test suite)",
         "run", "--suite", "suite.json",
         "--classes", "instrumented/FloatTools.class", "--db", "blueCov.db")
    step("3. coverage report", "report", "--db", "blueCov.db")
    step("4. uncovered goals (input for the test generator)",
         "uncovered", "--db", "blueCov.db")

    with open("traces.json", "w") as f:
        json.dump([{"id": "testSignNaN",
                    "goals": ["FloatTools.sign:(F)I.coverage.9"]}], f)
    step("5. minimize candidate traces against measured coverage",
         "minimize", "--traces", "traces.json", "--db", "blueCov.db")

    step("6. re-run the completed suite (adds the NaN test)",
         "run", "--suite", "suite_complete.json",
         "--classes", "instrumented/FloatTools.class", "--db", "blueCov.db")
    step("7. uncovered goals after completion (expect [])",
         "uncovered", "--db", "blueCov.db")
    return 0


if __name__ == "__main__":
    sys.exit(main())
