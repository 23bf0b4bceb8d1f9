/**
 * Process-wide hit recorder: the runtime-side counterpart of the
 * instrumentation's `CoverageLog.getInstance()` / `record(uid)` contract.
 *
 * Hits accumulate in memory; a termination hook merges them into the on-disk
 * database (disk += memory) so that normal completion, `process.exit()` calls
 * and uncaught exceptions all persist what was recorded. A hard kill
 * (SIGKILL) cannot be intercepted; that loss is inherent to exit hooks.
 */

import { existsSync } from "node:fs";

import {
  DB_PATH_ENV_VAR,
  DEFAULT_DB_NAME,
  emptyDatabase,
  mergeCounts,
  readDatabase,
  writeDatabaseAtomic,
} from "./format.js";

export class CoverageLog {
  private static instance: CoverageLog | undefined;

  private readonly counts = new Map<number, number>();

  /** Same instance for every caller; the exit hook is installed once. */
  static getInstance(): CoverageLog {
    if (!CoverageLog.instance) {
      CoverageLog.instance = new CoverageLog();
    }
    return CoverageLog.instance;
  }

  /** Test seam: drop the singleton so a fresh instance can be observed. */
  static resetForTesting(): void {
    CoverageLog.instance = undefined;
  }

  private constructor() {
    // 'exit' fires on normal return, explicit process.exit(), and after an
    // uncaught exception's default handler; listeners must stay synchronous.
    process.on("exit", () => this.flush());
  }

  record(uid: number): void {
    this.counts.set(uid, (this.counts.get(uid) ?? 0) + 1);
  }

  pendingCount(uid: number): number {
    return this.counts.get(uid) ?? 0;
  }

  dbPath(): string {
    return process.env[DB_PATH_ENV_VAR] || DEFAULT_DB_NAME;
  }

  /** Merge in-memory counts into the database file and clear them. */
  flush(path: string = this.dbPath()): void {
    if (this.counts.size === 0) {
      return;
    }
    const db = existsSync(path) ? readDatabase(path) : emptyDatabase();
    mergeCounts(db, this.counts);
    writeDatabaseAtomic(path, db);
    this.counts.clear();
  }
}
