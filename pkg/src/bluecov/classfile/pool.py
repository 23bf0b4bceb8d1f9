"""Constant pool model with byte-exact round-trip and append-only edits."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import MalformedClassFile, PoolOverflow

TAG_UTF8 = 1
TAG_INTEGER = 3
TAG_FLOAT = 4
TAG_LONG = 5
TAG_DOUBLE = 6
TAG_CLASS = 7
TAG_STRING = 8
TAG_FIELDREF = 9
TAG_METHODREF = 10
TAG_INTERFACE_METHODREF = 11
TAG_NAME_AND_TYPE = 12
TAG_METHOD_HANDLE = 15
TAG_METHOD_TYPE = 16
TAG_DYNAMIC = 17
TAG_INVOKE_DYNAMIC = 18
TAG_MODULE = 19
TAG_PACKAGE = 20

TAG_NAMES = {
    TAG_UTF8: "Utf8", TAG_INTEGER: "Integer", TAG_FLOAT: "Float",
    TAG_LONG: "Long", TAG_DOUBLE: "Double", TAG_CLASS: "Class",
    TAG_STRING: "String", TAG_FIELDREF: "Fieldref", TAG_METHODREF: "Methodref",
    TAG_INTERFACE_METHODREF: "InterfaceMethodref",
    TAG_NAME_AND_TYPE: "NameAndType", TAG_METHOD_HANDLE: "MethodHandle",
    TAG_METHOD_TYPE: "MethodType", TAG_DYNAMIC: "Dynamic",
    TAG_INVOKE_DYNAMIC: "InvokeDynamic", TAG_MODULE: "Module",
    TAG_PACKAGE: "Package",
}

# Long and Double occupy two pool slots.
TWO_SLOT_TAGS = frozenset([TAG_LONG, TAG_DOUBLE])


@dataclass
class CpEntry:
    """One constant pool entry.

    Payload use by tag:
      Utf8                data = raw modified-UTF-8 bytes
      Integer/Long        value = signed value
      Float/Double        value = raw unsigned bit pattern (byte-exact NaNs)
      Class/String/
      MethodType/Module/
      Package             ref1 = Utf8 index
      Fieldref/Methodref/
      InterfaceMethodref  ref1 = Class index, ref2 = NameAndType index
      NameAndType         ref1 = name Utf8, ref2 = descriptor Utf8
      MethodHandle        ref1 = reference_kind, ref2 = reference_index
      Dynamic/
      InvokeDynamic       ref1 = bootstrap method attr index, ref2 = NameAndType
    """

    tag: int
    data: bytes | None = None
    value: int | None = None
    ref1: int | None = None
    ref2: int | None = None

    def key(self) -> tuple:
        return (self.tag, self.data, self.value, self.ref1, self.ref2)


def decode_modified_utf8(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        # Modified UTF-8: embedded NUL as C0 80, supplementary chars as
        # CESU-8 surrogate pairs. Good enough for name comparison.
        return data.replace(b"\xc0\x80", b"\x00").decode("utf-8", errors="surrogatepass")


class ConstantPool:
    """1-based slot list; slot 0 and the trailing slot of Long/Double are None."""

    MAX_SLOTS = 0xFFFF  # constant_pool_count itself is a u16

    def __init__(self):
        self.slots: list[CpEntry | None] = [None]
        self._index: dict[tuple, int] = {}

    # -- access -------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.slots)

    def entry(self, index: int, expect_tag: int | None = None, offset: int = 0) -> CpEntry:
        if not 1 <= index < len(self.slots) or self.slots[index] is None:
            raise MalformedClassFile(offset, f"dangling constant pool reference #{index}")
        e = self.slots[index]
        if expect_tag is not None and e.tag != expect_tag:
            raise MalformedClassFile(
                offset,
                f"constant #{index} has tag {TAG_NAMES.get(e.tag, e.tag)}, "
                f"expected {TAG_NAMES[expect_tag]}",
            )
        return e

    def tag_of(self, index: int) -> int | None:
        if 1 <= index < len(self.slots) and self.slots[index] is not None:
            return self.slots[index].tag
        return None

    def utf8(self, index: int, offset: int = 0) -> str:
        return decode_modified_utf8(self.entry(index, TAG_UTF8, offset).data)

    def class_name(self, index: int, offset: int = 0) -> str:
        e = self.entry(index, TAG_CLASS, offset)
        return self.utf8(e.ref1, offset)

    def name_and_type(self, index: int, offset: int = 0) -> tuple[str, str]:
        e = self.entry(index, TAG_NAME_AND_TYPE, offset)
        return self.utf8(e.ref1, offset), self.utf8(e.ref2, offset)

    def member_ref(self, index: int, offset: int = 0) -> tuple[str, str, str]:
        """(class name, member name, descriptor) for any *ref entry."""
        e = self.entry(index, offset=offset)
        if e.tag not in (TAG_FIELDREF, TAG_METHODREF, TAG_INTERFACE_METHODREF):
            raise MalformedClassFile(offset, f"constant #{index} is not a member reference")
        name, desc = self.name_and_type(e.ref2, offset)
        return self.class_name(e.ref1, offset), name, desc

    # -- append-only construction --------------------------------------------

    def _add(self, entry: CpEntry) -> int:
        key = entry.key()
        found = self._index.get(key)
        if found is not None:
            return found
        index = len(self.slots)
        width = 2 if entry.tag in TWO_SLOT_TAGS else 1
        if index + width > self.MAX_SLOTS:
            raise PoolOverflow(f"constant pool cannot hold {index + width} slots")
        self.slots.append(entry)
        if width == 2:
            self.slots.append(None)
        self._index[key] = index
        return index

    def add_utf8(self, text: str) -> int:
        return self._add(CpEntry(TAG_UTF8, data=text.encode("utf-8")))

    def add_integer(self, value: int) -> int:
        return self._add(CpEntry(TAG_INTEGER, value=value))

    def add_class(self, name: str) -> int:
        return self._add(CpEntry(TAG_CLASS, ref1=self.add_utf8(name)))

    def add_name_and_type(self, name: str, desc: str) -> int:
        return self._add(
            CpEntry(TAG_NAME_AND_TYPE, ref1=self.add_utf8(name), ref2=self.add_utf8(desc))
        )

    def add_fieldref(self, cls: str, name: str, desc: str) -> int:
        return self._add(
            CpEntry(TAG_FIELDREF, ref1=self.add_class(cls),
                    ref2=self.add_name_and_type(name, desc))
        )

    def add_methodref(self, cls: str, name: str, desc: str) -> int:
        return self._add(
            CpEntry(TAG_METHODREF, ref1=self.add_class(cls),
                    ref2=self.add_name_and_type(name, desc))
        )

    # -- wire format ----------------------------------------------------------

    @classmethod
    def parse(cls, data: bytes, pos: int) -> tuple["ConstantPool", int]:
        pool = cls()
        if pos + 2 > len(data):
            raise MalformedClassFile(pos, "truncated constant pool count")
        (count,) = struct.unpack_from(">H", data, pos)
        pos += 2
        if count < 1:
            raise MalformedClassFile(pos - 2, "constant pool count must be >= 1")
        while len(pool.slots) < count:
            start = pos
            if pos >= len(data):
                raise MalformedClassFile(start, "truncated constant pool entry")
            tag = data[pos]
            pos += 1
            try:
                if tag == TAG_UTF8:
                    (length,) = struct.unpack_from(">H", data, pos)
                    pos += 2
                    if pos + length > len(data):
                        raise MalformedClassFile(start, "truncated Utf8 constant")
                    entry = CpEntry(tag, data=data[pos:pos + length])
                    pos += length
                elif tag == TAG_INTEGER:
                    (v,) = struct.unpack_from(">i", data, pos)
                    pos += 4
                    entry = CpEntry(tag, value=v)
                elif tag == TAG_FLOAT:
                    (v,) = struct.unpack_from(">I", data, pos)
                    pos += 4
                    entry = CpEntry(tag, value=v)
                elif tag == TAG_LONG:
                    (v,) = struct.unpack_from(">q", data, pos)
                    pos += 8
                    entry = CpEntry(tag, value=v)
                elif tag == TAG_DOUBLE:
                    (v,) = struct.unpack_from(">Q", data, pos)
                    pos += 8
                    entry = CpEntry(tag, value=v)
                elif tag in (TAG_CLASS, TAG_STRING, TAG_METHOD_TYPE, TAG_MODULE, TAG_PACKAGE):
                    (r1,) = struct.unpack_from(">H", data, pos)
                    pos += 2
                    entry = CpEntry(tag, ref1=r1)
                elif tag in (TAG_FIELDREF, TAG_METHODREF, TAG_INTERFACE_METHODREF,
                             TAG_NAME_AND_TYPE, TAG_DYNAMIC, TAG_INVOKE_DYNAMIC):
                    r1, r2 = struct.unpack_from(">HH", data, pos)
                    pos += 4
                    entry = CpEntry(tag, ref1=r1, ref2=r2)
                elif tag == TAG_METHOD_HANDLE:
                    r1, r2 = struct.unpack_from(">BH", data, pos)
                    pos += 3
                    entry = CpEntry(tag, ref1=r1, ref2=r2)
                else:
                    raise MalformedClassFile(start, f"unknown constant pool tag {tag}")
            except struct.error:
                raise MalformedClassFile(start, "truncated constant pool entry") from None
            pool.slots.append(entry)
            pool._index.setdefault(entry.key(), len(pool.slots) - 1)
            if tag in TWO_SLOT_TAGS:
                pool.slots.append(None)
        if len(pool.slots) != count:
            # a Long/Double in the final slot overran the declared count
            raise MalformedClassFile(pos, "constant pool slot count mismatch")
        return pool, pos

    def emit(self) -> bytes:
        if len(self.slots) > self.MAX_SLOTS:
            raise PoolOverflow(f"constant pool has {len(self.slots)} slots, max {self.MAX_SLOTS}")
        out = bytearray(struct.pack(">H", len(self.slots)))
        for e in self.slots[1:]:
            if e is None:
                continue
            out.append(e.tag)
            if e.tag == TAG_UTF8:
                out += struct.pack(">H", len(e.data))
                out += e.data
            elif e.tag == TAG_INTEGER:
                out += struct.pack(">i", e.value)
            elif e.tag == TAG_FLOAT:
                out += struct.pack(">I", e.value)
            elif e.tag == TAG_LONG:
                out += struct.pack(">q", e.value)
            elif e.tag == TAG_DOUBLE:
                out += struct.pack(">Q", e.value)
            elif e.tag in (TAG_CLASS, TAG_STRING, TAG_METHOD_TYPE, TAG_MODULE, TAG_PACKAGE):
                out += struct.pack(">H", e.ref1)
            elif e.tag == TAG_METHOD_HANDLE:
                out += struct.pack(">BH", e.ref1, e.ref2)
            else:
                out += struct.pack(">HH", e.ref1, e.ref2)
        return bytes(out)

    # -- structural validation -------------------------------------------------

    _REF_RULES = {
        TAG_CLASS: ((TAG_UTF8,), None),
        TAG_STRING: ((TAG_UTF8,), None),
        TAG_METHOD_TYPE: ((TAG_UTF8,), None),
        TAG_MODULE: ((TAG_UTF8,), None),
        TAG_PACKAGE: ((TAG_UTF8,), None),
        TAG_FIELDREF: ((TAG_CLASS,), (TAG_NAME_AND_TYPE,)),
        TAG_METHODREF: ((TAG_CLASS,), (TAG_NAME_AND_TYPE,)),
        TAG_INTERFACE_METHODREF: ((TAG_CLASS,), (TAG_NAME_AND_TYPE,)),
        TAG_NAME_AND_TYPE: ((TAG_UTF8,), (TAG_UTF8,)),
        TAG_DYNAMIC: (None, (TAG_NAME_AND_TYPE,)),
        TAG_INVOKE_DYNAMIC: (None, (TAG_NAME_AND_TYPE,)),
    }

    def validate(self) -> None:
        """Every intra-pool reference resolves to an entry of the expected tag."""
        for i, e in enumerate(self.slots):
            if e is None or e.tag not in self._REF_RULES:
                continue
            want1, want2 = self._REF_RULES[e.tag]
            for want, ref in ((want1, e.ref1), (want2, e.ref2)):
                if want is None:
                    continue
                got = self.tag_of(ref)
                if got not in want:
                    raise MalformedClassFile(
                        0,
                        f"constant #{i} ({TAG_NAMES[e.tag]}) references #{ref} "
                        f"which is {TAG_NAMES.get(got, 'absent')}",
                    )
