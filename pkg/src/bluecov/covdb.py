"""Persistent UID -> hit-count store with in-memory accumulation.

On-disk format (shared contract with the runtime shim, little-endian):

    magic  "BCV1"
    u32    meta entry count
           per entry: u32 uid, u16 key length, key bytes (UTF-8),
                      u16 name length, name bytes (UTF-8)
    u32    count entry count
           per entry: u32 uid, u64 count

Recording accumulates in memory; flush merges into the file (disk += memory)
and replaces it atomically, so a reader never sees a partial write.
"""

from __future__ import annotations

import os
import struct
import tempfile
import threading
from dataclasses import dataclass, field

MAGIC = b"BCV1"
DEFAULT_DB_NAME = "blueCov.db"
DB_PATH_ENV_VAR = "BLUECOV_DB"


class DbCorrupt(Exception):
    def __init__(self, reason: str):
        super().__init__(f"corrupt coverage database: {reason}")
        self.reason = reason


class DbIoError(Exception):
    pass


@dataclass(frozen=True)
class GoalMeta:
    key: str    # "Class.method:(desc)Ret@index", or "unknown@<uid>"
    name: str   # goal name as reported by the test generator


def default_db_path(explicit: str | None = None) -> str:
    return explicit or os.environ.get(DB_PATH_ENV_VAR) or DEFAULT_DB_NAME


@dataclass
class HitCountDb:
    path: str
    counts: dict[int, int] = field(default_factory=dict)
    meta: dict[int, GoalMeta] = field(default_factory=dict)

    @classmethod
    def open(cls, path: str) -> "HitCountDb":
        """Load the db at path, or start an empty one if the file is absent."""
        if os.path.exists(path):
            counts, meta = read_counts(path)
            return cls(path, counts, meta)
        return cls(path)

    def next_uid(self) -> int:
        known = set(self.meta) | set(self.counts)
        return max(known) + 1 if known else 0

    def uid_for_key(self, key: str) -> int | None:
        for uid, m in self.meta.items():
            if m.key == key:
                return uid
        return None

    def register(self, uid: int, key: str, name: str) -> None:
        self.meta[uid] = GoalMeta(key, name)

    def save(self) -> None:
        _atomic_write(self.path, _encode(self.counts, self.meta))


class SessionRecorder:
    """In-process hit accumulator; disjoint from disk state until flushed.

    record() is safe under concurrent calls from multiple test threads and
    must never raise into instrumented code.
    """

    def __init__(self, first_hit: bool = False):
        self.counts: dict[int, int] = {}
        self.first_hit = first_hit
        self._lock = threading.Lock()

    def record(self, uid: int) -> None:
        with self._lock:
            if self.first_hit:
                self.counts[uid] = 1
            else:
                self.counts[uid] = self.counts.get(uid, 0) + 1

    def snapshot(self) -> dict[int, int]:
        with self._lock:
            return dict(self.counts)

    def clear(self) -> None:
        with self._lock:
            self.counts.clear()


def record(recorder: SessionRecorder, uid: int) -> None:
    recorder.record(uid)


def first_hit_mode(recorder: SessionRecorder) -> SessionRecorder:
    """Switch the recorder to saturate every in-memory count at 1."""
    recorder.first_hit = True
    return recorder


def flush(recorder: SessionRecorder, db_path: str) -> None:
    """Merge the recorder into the db file (disk += memory) and clear it.

    UIDs with no registered meta are kept under a synthesized "unknown@uid"
    key so runtime data is never dropped silently.
    """
    pending = recorder.snapshot()
    if not pending:
        recorder.clear()
        return
    db = HitCountDb.open(db_path)
    for uid, n in pending.items():
        db.counts[uid] = db.counts.get(uid, 0) + n
        if uid not in db.meta:
            db.meta[uid] = GoalMeta(f"unknown@{uid}", f"unknown@{uid}")
    db.save()
    recorder.clear()


def _encode(counts: dict[int, int], meta: dict[int, GoalMeta]) -> bytes:
    out = bytearray(MAGIC)
    out += struct.pack("<I", len(meta))
    for uid in sorted(meta):
        m = meta[uid]
        key = m.key.encode("utf-8")
        name = m.name.encode("utf-8")
        out += struct.pack("<IH", uid, len(key))
        out += key
        out += struct.pack("<H", len(name))
        out += name
    out += struct.pack("<I", len(counts))
    for uid in sorted(counts):
        out += struct.pack("<IQ", uid, counts[uid])
    return bytes(out)


def read_counts(path: str) -> tuple[dict[int, int], dict[int, GoalMeta]]:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise DbIoError(f"cannot read {path}: {e}") from e

    if data[:4] != MAGIC:
        raise DbCorrupt(f"bad magic {data[:4]!r}")
    pos = 4

    def take(fmt: str):
        nonlocal pos
        try:
            values = struct.unpack_from(fmt, data, pos)
        except struct.error:
            raise DbCorrupt("truncated file") from None
        pos += struct.calcsize(fmt)
        return values

    def take_str() -> str:
        nonlocal pos
        (length,) = take("<H")
        if pos + length > len(data):
            raise DbCorrupt("truncated string")
        s = data[pos:pos + length].decode("utf-8", errors="replace")
        pos += length
        return s

    meta: dict[int, GoalMeta] = {}
    (n_meta,) = take("<I")
    for _ in range(n_meta):
        (uid,) = take("<I")
        key = take_str()
        name = take_str()
        meta[uid] = GoalMeta(key, name)

    counts: dict[int, int] = {}
    (n_counts,) = take("<I")
    for _ in range(n_counts):
        uid, count = take("<IQ")
        counts[uid] = count
    if pos != len(data):
        raise DbCorrupt(f"{len(data) - pos} trailing bytes")
    return counts, meta


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".bluecov-", dir=directory)
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
    except OSError as e:
        raise DbIoError(f"cannot write {path}: {e}") from e
