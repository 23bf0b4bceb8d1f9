/**
 * Coverage database binary format, shared bit-for-bit with the primary tool.
 *
 *   "BCV1"
 *   u32 meta count,  entries: u32 uid, u16 key len, key, u16 name len, name
 *   u32 count count, entries: u32 uid, u64 count
 *
 * Everything little-endian; writes replace the file atomically.
 */

import { mkdtempSync, readFileSync, renameSync, rmSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";

export const MAGIC = "BCV1";
export const DEFAULT_DB_NAME = "blueCov.db";
export const DB_PATH_ENV_VAR = "BLUECOV_DB";

export interface GoalMeta {
  key: string;
  name: string;
}

export interface Database {
  counts: Map<number, number>;
  meta: Map<number, GoalMeta>;
}

export class DbCorruptError extends Error {}

export function emptyDatabase(): Database {
  return { counts: new Map(), meta: new Map() };
}

export function encodeDatabase(db: Database): Buffer {
  const chunks: Buffer[] = [Buffer.from(MAGIC, "ascii")];
  const u32 = (v: number) => {
    const b = Buffer.alloc(4);
    b.writeUInt32LE(v);
    return b;
  };
  const str = (s: string) => {
    const data = Buffer.from(s, "utf-8");
    const len = Buffer.alloc(2);
    len.writeUInt16LE(data.length);
    return Buffer.concat([len, data]);
  };

  const metaUids = [...db.meta.keys()].sort((a, b) => a - b);
  chunks.push(u32(metaUids.length));
  for (const uid of metaUids) {
    const m = db.meta.get(uid)!;
    chunks.push(u32(uid), str(m.key), str(m.name));
  }

  const countUids = [...db.counts.keys()].sort((a, b) => a - b);
  chunks.push(u32(countUids.length));
  for (const uid of countUids) {
    const entry = Buffer.alloc(12);
    entry.writeUInt32LE(uid, 0);
    entry.writeBigUInt64LE(BigInt(db.counts.get(uid)!), 4);
    chunks.push(entry);
  }
  return Buffer.concat(chunks);
}

export function decodeDatabase(data: Buffer): Database {
  if (data.subarray(0, 4).toString("ascii") !== MAGIC) {
    throw new DbCorruptError(`bad magic ${data.subarray(0, 4).toString("hex")}`);
  }
  let pos = 4;
  const need = (n: number) => {
    if (pos + n > data.length) throw new DbCorruptError("truncated file");
  };
  const u32 = () => {
    need(4);
    const v = data.readUInt32LE(pos);
    pos += 4;
    return v;
  };
  const str = () => {
    need(2);
    const len = data.readUInt16LE(pos);
    pos += 2;
    need(len);
    const s = data.subarray(pos, pos + len).toString("utf-8");
    pos += len;
    return s;
  };

  const db = emptyDatabase();
  const nMeta = u32();
  for (let i = 0; i < nMeta; i++) {
    const uid = u32();
    const key = str();
    const name = str();
    db.meta.set(uid, { key, name });
  }
  const nCounts = u32();
  for (let i = 0; i < nCounts; i++) {
    const uid = u32();
    need(8);
    const count = data.readBigUInt64LE(pos);
    pos += 8;
    db.counts.set(uid, Number(count));
  }
  if (pos !== data.length) {
    throw new DbCorruptError(`${data.length - pos} trailing bytes`);
  }
  return db;
}

export function readDatabase(path: string): Database {
  return decodeDatabase(readFileSync(path));
}

export function writeDatabaseAtomic(path: string, db: Database): void {
  const dir = dirname(path) || ".";
  const tmpDir = mkdtempSync(join(dir, ".bluecov-"));
  const tmp = join(tmpDir, "db");
  try {
    writeFileSync(tmp, encodeDatabase(db));
    renameSync(tmp, path);
  } finally {
    rmSync(tmpDir, { recursive: true, force: true });
  }
}

/** disk += memory, synthesizing meta for UIDs the db has never seen. */
export function mergeCounts(db: Database, pending: Map<number, number>): void {
  for (const [uid, n] of pending) {
    db.counts.set(uid, (db.counts.get(uid) ?? 0) + n);
    if (!db.meta.has(uid)) {
      db.meta.set(uid, { key: `unknown@${uid}`, name: `unknown@${uid}` });
    }
  }
}
