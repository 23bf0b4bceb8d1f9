/**
 * Cross-runtime interop with the primary tool, through its external
 * interfaces only: the CLI and the shared database format.
 *
 * The primary instruments the float-sign fixture and measures its three-test
 * suite in its interpreter. The shim then replays the exact hit sequences
 * those tests produce (derived from the fixture's goal sites) and both
 * databases must agree, each side readable by the other.
 */

import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CoverageLog, readDatabase } from "../dist/index.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const REPO = resolve(HERE, "..", "..");
const HAVE_PYTHON = (() => {
  try {
    execFileSync("python3", ["--version"], { stdio: "pipe" });
    return true;
  } catch {
    return false;
  }
})();

function python(args: string[], cwd: string): string {
  return execFileSync("python3", args, {
    cwd,
    env: {
      ...process.env,
      PYTHONPATH: [join(REPO, "src"), join(REPO, "tests")].join(":"),
    },
    stdio: ["ignore", "pipe", "pipe"],
  }).toString("utf-8");
}

// Per-test goal-site hit sequences of the fixture's sign method, in
// execution order (uid = goal index - 1). Wrong sequences would break the
// count-map equality below, so the primary's own run is the oracle.
const HIT_SEQUENCES: Record<string, number[]> = {
  testSignZero: [0, 1, 3],
  testSignNeg: [0, 1, 2, 4, 5],
  testSignPos: [0, 1, 2, 4, 6, 7],
};

describe.skipIf(!HAVE_PYTHON)("interop with the primary tool", () => {
  let dir: string;

  beforeAll(() => {
    dir = mkdtempSync(join(tmpdir(), "shim-interop-"));
    python(
      [
        "-c",
        [
          "import fixtures, json, shutil, sys",
          "open('FloatTools.class','wb').write(fixtures.build_floattools())",
          "json.dump(fixtures.floattools_goal_entries(), open('goals.json','w'))",
          `shutil.copy(r'${join(REPO, "tests", "data", "floattools_suite.json")}', 'suite.json')`,
        ].join("\n"),
      ],
      dir,
    );
    python(
      ["-m", "bluecov", "instrument", "--goals", "goals.json",
       "--classes", "FloatTools.class", "--out", "inst", "--db", "interp.db"],
      dir,
    );
    python(
      ["-m", "bluecov", "run", "--suite", "suite.json",
       "--classes", join("inst", "FloatTools.class"), "--db", "interp.db"],
      dir,
    );
  });

  afterAll(() => {
    rmSync(dir, { recursive: true, force: true });
  });

  it("reads the interpreter-produced database", () => {
    const db = readDatabase(join(dir, "interp.db"));
    expect(db.meta.get(0)?.key).toBe("FloatTools.sign:(F)I@1");
    expect([...Array(9).keys()].map((u) => db.counts.get(u) ?? 0)).toEqual(
      [3, 3, 2, 1, 2, 1, 1, 1, 0],
    );
  });

  it("replaying the suite's hits yields an equal count map", () => {
    // start from the instrumented-but-unrun db so goal meta is present
    const shimDb = join(dir, "shim.db");
    python(
      ["-m", "bluecov", "instrument", "--goals", "goals.json",
       "--classes", "FloatTools.class", "--out", "inst2", "--db", shimDb],
      dir,
    );
    CoverageLog.resetForTesting();
    const log = CoverageLog.getInstance();
    for (const uids of Object.values(HIT_SEQUENCES)) {
      for (const uid of uids) log.record(uid);
    }
    log.flush(shimDb);

    const ours = readDatabase(shimDb);
    const theirs = readDatabase(join(dir, "interp.db"));
    expect(ours.counts).toEqual(theirs.counts);
    expect(ours.meta).toEqual(theirs.meta);
  });

  it("primary report command reads the shim-written database", () => {
    const out = python(["-m", "bluecov", "report", "--db", "shim.db"], dir);
    const report = JSON.parse(out) as { name: string; hitCount: number }[];
    expect(report.map((e) => e.hitCount)).toEqual([3, 3, 2, 1, 2, 1, 1, 1, 0]);
    expect(report[8].name).toBe("FloatTools.sign:(F)I.coverage.9");
    const uncovered = JSON.parse(
      python(["-m", "bluecov", "uncovered", "--db", "shim.db"], dir),
    );
    expect(uncovered).toEqual(["FloatTools.sign:(F)I.coverage.9"]);
  });
});
