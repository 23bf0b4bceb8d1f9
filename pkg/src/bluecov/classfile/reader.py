"""Class file decoding: bytes -> ClassModel, code attribute -> CodeModel."""

from __future__ import annotations

import struct

from .descriptors import DescriptorError, parse_method_descriptor
from .errors import MalformedClassFile, MalformedCode
from .model import (
    Attribute,
    ClassModel,
    CodeModel,
    ExceptionHandler,
    FieldModel,
    Instruction,
    LineNumberTable,
    MethodModel,
    StackMapFrame,
    StackMapTable,
    SwitchData,
    VerificationType,
)
from .opcodes import OPCODES, WIDE, WIDE_TARGETS
from . import pool as cp
from .pool import ConstantPool

MAGIC = 0xCAFEBABE

# Pool tags each pool-referencing opcode may legally point at.
_LOADABLE = (cp.TAG_INTEGER, cp.TAG_FLOAT, cp.TAG_STRING, cp.TAG_CLASS,
             cp.TAG_METHOD_TYPE, cp.TAG_METHOD_HANDLE, cp.TAG_DYNAMIC)
_POOL_TAGS_BY_MNEMONIC = {
    "ldc": _LOADABLE,
    "ldc_w": _LOADABLE,
    "ldc2_w": (cp.TAG_LONG, cp.TAG_DOUBLE, cp.TAG_DYNAMIC),
    "getstatic": (cp.TAG_FIELDREF,),
    "putstatic": (cp.TAG_FIELDREF,),
    "getfield": (cp.TAG_FIELDREF,),
    "putfield": (cp.TAG_FIELDREF,),
    "invokevirtual": (cp.TAG_METHODREF,),
    "invokespecial": (cp.TAG_METHODREF, cp.TAG_INTERFACE_METHODREF),
    "invokestatic": (cp.TAG_METHODREF, cp.TAG_INTERFACE_METHODREF),
    "invokeinterface": (cp.TAG_INTERFACE_METHODREF,),
    "invokedynamic": (cp.TAG_INVOKE_DYNAMIC,),
    "new": (cp.TAG_CLASS,),
    "anewarray": (cp.TAG_CLASS,),
    "checkcast": (cp.TAG_CLASS,),
    "instanceof": (cp.TAG_CLASS,),
    "multianewarray": (cp.TAG_CLASS,),
}


class _Reader:
    def __init__(self, data: bytes, pos: int = 0, error=MalformedClassFile):
        self.data = data
        self.pos = pos
        self.error = error

    def unpack(self, fmt: str):
        try:
            values = struct.unpack_from(fmt, self.data, self.pos)
        except struct.error:
            raise self.error(self.pos, "unexpected end of data") from None
        self.pos += struct.calcsize(fmt)
        return values

    def u1(self) -> int:
        return self.unpack(">B")[0]

    def u2(self) -> int:
        return self.unpack(">H")[0]

    def u4(self) -> int:
        return self.unpack(">I")[0]

    def raw(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise self.error(self.pos, "unexpected end of data")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out


def _read_attributes(r: _Reader, pool: ConstantPool) -> list[Attribute]:
    count = r.u2()
    attrs = []
    for _ in range(count):
        at = r.pos
        name_index = r.u2()
        pool.entry(name_index, cp.TAG_UTF8, at)
        length = r.u4()
        attrs.append(Attribute(name_index, r.raw(length)))
    return attrs


def parse_class(data: bytes) -> ClassModel:
    r = _Reader(data)
    magic = r.u4()
    if magic != MAGIC:
        raise MalformedClassFile(0, f"bad magic 0x{magic:08X}")
    minor = r.u2()
    major = r.u2()

    pool, r.pos = ConstantPool.parse(data, r.pos)
    pool.validate()

    access_flags = r.u2()
    this_at = r.pos
    this_class = r.u2()
    pool.entry(this_class, cp.TAG_CLASS, this_at)
    super_class = r.u2()
    if super_class != 0:
        pool.entry(super_class, cp.TAG_CLASS, this_at)

    interfaces = []
    for _ in range(r.u2()):
        at = r.pos
        idx = r.u2()
        pool.entry(idx, cp.TAG_CLASS, at)
        interfaces.append(idx)

    fields = []
    for _ in range(r.u2()):
        at = r.pos
        flags, name_index, desc_index = r.unpack(">HHH")
        pool.entry(name_index, cp.TAG_UTF8, at)
        pool.entry(desc_index, cp.TAG_UTF8, at)
        fields.append(FieldModel(flags, name_index, desc_index, _read_attributes(r, pool)))

    methods = []
    for _ in range(r.u2()):
        at = r.pos
        flags, name_index, desc_index = r.unpack(">HHH")
        pool.entry(name_index, cp.TAG_UTF8, at)
        pool.entry(desc_index, cp.TAG_UTF8, at)
        try:
            parse_method_descriptor(pool.utf8(desc_index))
        except DescriptorError as e:
            raise MalformedClassFile(at, f"invalid method descriptor: {e}") from None
        raw_attrs = _read_attributes(r, pool)
        attrs = []
        for a in raw_attrs:
            if pool.utf8(a.name_index) == "Code":
                attrs.append(decode_code(a.data, pool, a.name_index))
            else:
                attrs.append(a)
        methods.append(MethodModel(flags, name_index, desc_index, attrs))

    class_attrs = _read_attributes(r, pool)
    if r.pos != len(data):
        raise MalformedClassFile(r.pos, "trailing bytes after class structure")

    return ClassModel(minor, major, pool, access_flags, this_class, super_class,
                      interfaces, fields, methods, class_attrs)


def _decode_instructions(code: bytes, pool: ConstantPool) -> tuple[list[Instruction], dict[int, int]]:
    """Linear decode; branch targets left as absolute byte offsets for now."""
    instructions: list[Instruction] = []
    offset_to_ordinal: dict[int, int] = {}
    pos = 0
    n = len(code)

    def need(k: int, at: int):
        if pos + k > n:
            raise MalformedCode(at, "instruction operands run past end of code")

    while pos < n:
        start = pos
        offset_to_ordinal[start] = len(instructions)
        op = code[pos]
        pos += 1
        wide = False
        if op == WIDE:
            need(1, start)
            op = code[pos]
            pos += 1
            wide = True
        info = OPCODES.get(op)
        if info is None:
            raise MalformedCode(start, f"unknown opcode 0x{op:02X}")
        mnemonic, kind = info
        if wide and mnemonic not in WIDE_TARGETS:
            raise MalformedCode(start, f"wide prefix before {mnemonic}")
        if mnemonic in ("jsr", "jsr_w", "ret"):
            raise MalformedCode(start, "jsr/ret subroutines are not supported")

        ins = Instruction(mnemonic, wide=wide)
        if kind == "":
            pass
        elif kind == "s1":
            need(1, start)
            ins.value = struct.unpack_from(">b", code, pos)[0]
            pos += 1
        elif kind == "u1":
            need(1, start)
            ins.value = code[pos]
            pos += 1
        elif kind == "s2":
            need(2, start)
            ins.value = struct.unpack_from(">h", code, pos)[0]
            pos += 2
        elif kind == "local":
            if wide:
                need(2, start)
                ins.local = struct.unpack_from(">H", code, pos)[0]
                pos += 2
            else:
                need(1, start)
                ins.local = code[pos]
                pos += 1
        elif kind == "pool1":
            need(1, start)
            ins.pool = code[pos]
            pos += 1
        elif kind == "pool2":
            need(2, start)
            ins.pool = struct.unpack_from(">H", code, pos)[0]
            pos += 2
        elif kind == "branch2":
            need(2, start)
            rel = struct.unpack_from(">h", code, pos)[0]
            pos += 2
            ins.target = start + rel  # byte offset, converted later
        elif kind == "branch4":
            need(4, start)
            rel = struct.unpack_from(">i", code, pos)[0]
            pos += 4
            ins.target = start + rel
        elif kind == "iinc":
            if wide:
                need(4, start)
                ins.local, ins.value = struct.unpack_from(">Hh", code, pos)
                pos += 4
            else:
                need(2, start)
                ins.local, ins.value = struct.unpack_from(">Bb", code, pos)
                pos += 2
        elif kind == "iface":
            need(4, start)
            ins.pool, ins.count, zero = struct.unpack_from(">HBB", code, pos)
            pos += 4
            if zero != 0:
                raise MalformedCode(start, "invokeinterface pad byte must be zero")
        elif kind == "indy":
            need(4, start)
            ins.pool, zeros = struct.unpack_from(">HH", code, pos)
            pos += 4
            if zeros != 0:
                raise MalformedCode(start, "invokedynamic pad bytes must be zero")
        elif kind == "multi":
            need(3, start)
            ins.pool, ins.dims = struct.unpack_from(">HB", code, pos)
            pos += 3
        elif kind in ("table", "lookup"):
            pad = (-(start + 1)) % 4
            need(pad, start)
            if any(code[pos + i] != 0 for i in range(pad)):
                raise MalformedCode(start, "nonzero switch padding")
            pos += pad
            if kind == "table":
                need(12, start)
                default, low, high = struct.unpack_from(">iii", code, pos)
                pos += 12
                if low > high:
                    raise MalformedCode(start, "tableswitch low > high")
                count = high - low + 1
                need(4 * count, start)
                targets = list(struct.unpack_from(f">{count}i", code, pos))
                pos += 4 * count
                ins.switch = SwitchData(default=start + default, low=low, high=high,
                                        targets=[start + t for t in targets])
            else:
                need(8, start)
                default, npairs = struct.unpack_from(">ii", code, pos)
                pos += 8
                if npairs < 0:
                    raise MalformedCode(start, "negative lookupswitch pair count")
                need(8 * npairs, start)
                matches, targets = [], []
                prev = None
                for _ in range(npairs):
                    m, t = struct.unpack_from(">ii", code, pos)
                    pos += 8
                    if prev is not None and m <= prev:
                        raise MalformedCode(start, "lookupswitch keys not sorted")
                    prev = m
                    matches.append(m)
                    targets.append(start + t)
                ins.switch = SwitchData(default=start + default, matches=matches,
                                        targets=targets)
        else:  # pragma: no cover - table is closed
            raise MalformedCode(start, f"unhandled operand kind {kind}")

        if ins.pool is not None:
            allowed = _POOL_TAGS_BY_MNEMONIC.get(mnemonic)
            entry = pool.entry(ins.pool, offset=start)
            if allowed is not None and entry.tag not in allowed:
                raise MalformedClassFile(
                    start, f"{mnemonic} operand #{ins.pool} has unexpected tag {entry.tag}")
        instructions.append(ins)

    return instructions, offset_to_ordinal


def _to_ordinal(offset_map: dict[int, int], byte_offset: int) -> int:
    ordinal = offset_map.get(byte_offset)
    if ordinal is None:
        raise MalformedCode(byte_offset, "offset does not land on an instruction start")
    return ordinal


def _decode_stack_map(data: bytes, name_index: int, offset_map: dict[int, int]) -> StackMapTable:
    r = _Reader(data, error=MalformedCode)

    def read_vti() -> VerificationType:
        tag = r.u1()
        if tag == VerificationType.VTI_OBJECT:
            return VerificationType(tag, r.u2())
        if tag == VerificationType.VTI_UNINITIALIZED:
            return VerificationType(tag, _to_ordinal(offset_map, r.u2()))
        if tag > 8:
            raise MalformedCode(r.pos, f"bad verification type tag {tag}")
        return VerificationType(tag)

    count = r.u2()
    frames = []
    prev_offset = -1
    for _ in range(count):
        frame_type = r.u1()
        if frame_type <= 63:
            fr = StackMapFrame("same", frame_type)
            delta = frame_type
        elif frame_type <= 127:
            delta = frame_type - 64
            fr = StackMapFrame("same_locals_1", 0, stack=[read_vti()])
        elif frame_type == 247:
            delta = r.u2()
            fr = StackMapFrame("same_locals_1", 0, extended=True, stack=[read_vti()])
        elif 248 <= frame_type <= 250:
            delta = r.u2()
            fr = StackMapFrame("chop", 0, extended=True, chopped=251 - frame_type)
        elif frame_type == 251:
            delta = r.u2()
            fr = StackMapFrame("same", 0, extended=True)
        elif 252 <= frame_type <= 254:
            delta = r.u2()
            fr = StackMapFrame("append", 0, extended=True,
                               locals=[read_vti() for _ in range(frame_type - 251)])
        elif frame_type == 255:
            delta = r.u2()
            nlocals = r.u2()
            locals_ = [read_vti() for _ in range(nlocals)]
            nstack = r.u2()
            stack = [read_vti() for _ in range(nstack)]
            fr = StackMapFrame("full", 0, extended=True, locals=locals_, stack=stack)
        else:
            raise MalformedCode(r.pos, f"reserved stack map frame type {frame_type}")
        abs_offset = delta if prev_offset < 0 else prev_offset + delta + 1
        prev_offset = abs_offset
        fr.ordinal = _to_ordinal(offset_map, abs_offset)
        frames.append(fr)
    if r.pos != len(data):
        raise MalformedCode(r.pos, "trailing bytes in StackMapTable")
    return StackMapTable(name_index, frames)


def decode_code(data: bytes, pool: ConstantPool, name_index: int) -> CodeModel:
    r = _Reader(data, error=MalformedCode)
    try:
        max_stack, max_locals, code_length = struct.unpack_from(">HHI", data, 0)
    except struct.error:
        raise MalformedCode(0, "truncated Code attribute header") from None
    r.pos = 8
    code_bytes = r.raw(code_length)

    instructions, offset_map = _decode_instructions(code_bytes, pool)

    # Convert branch operands from byte offsets to ordinals.
    for ins in instructions:
        if ins.target is not None:
            ins.target = _to_ordinal(offset_map, ins.target)
        if ins.switch is not None:
            ins.switch.default = _to_ordinal(offset_map, ins.switch.default)
            ins.switch.targets = [_to_ordinal(offset_map, t) for t in ins.switch.targets]

    handlers = []
    for _ in range(r.u2()):
        at = r.pos
        start, end, handler, catch_type = r.unpack(">HHHH")
        if catch_type != 0:
            pool.entry(catch_type, cp.TAG_CLASS, at)
        # end_pc is exclusive and may point one past the last instruction
        end_ordinal = (len(instructions) if end == code_length
                       else _to_ordinal(offset_map, end))
        handlers.append(ExceptionHandler(
            start=_to_ordinal(offset_map, start),
            end=end_ordinal,
            handler=_to_ordinal(offset_map, handler),
            catch_type=catch_type,
        ))

    attrs: list = []
    for _ in range(r.u2()):
        at = r.pos
        attr_name_index = r.u2()
        pool.entry(attr_name_index, cp.TAG_UTF8, at)
        length = r.u4()
        payload = r.raw(length)
        attr_name = pool.utf8(attr_name_index)
        if attr_name == "LineNumberTable":
            lr = _Reader(payload, error=MalformedCode)
            entries = []
            for _ in range(lr.u2()):
                start_pc, line = lr.unpack(">HH")
                entries.append((_to_ordinal(offset_map, start_pc), line))
            if lr.pos != len(payload):
                raise MalformedCode(at, "trailing bytes in LineNumberTable")
            attrs.append(LineNumberTable(attr_name_index, entries))
        elif attr_name == "StackMapTable":
            attrs.append(_decode_stack_map(payload, attr_name_index, offset_map))
        else:
            attrs.append(Attribute(attr_name_index, payload))
    if r.pos != len(data):
        raise MalformedCode(r.pos, "trailing bytes in Code attribute")

    return CodeModel(name_index, max_stack, max_locals, instructions, handlers, attrs)
