"""Class file encoding: ClassModel -> bytes, with branch-width fixup.

Layout runs to a fixed point: each pass assigns byte offsets, then any 16-bit
branch whose displacement no longer fits is promoted (goto -> goto_w,
conditional -> inverted condition jumping over a goto_w) and the pass repeats.
Promotion only grows instructions, so the loop terminates.
"""

from __future__ import annotations

import struct

from .errors import EncodeOverflow, MalformedCode, PoolOverflow
from .model import (
    Attribute,
    ClassModel,
    CodeModel,
    Instruction,
    LineNumberTable,
    MethodModel,
    StackMapTable,
    VerificationType,
)
from .opcodes import INVERTED_BRANCH, MNEMONIC_TO_OPCODE, OPERAND_KIND, WIDE
from .pool import ConstantPool

_S2_MIN, _S2_MAX = -0x8000, 0x7FFF
MAX_CODE_BYTES = 0xFFFF


class _Unit:
    """Layout state for one instruction ordinal."""

    __slots__ = ("ins", "offset", "size", "as_wide_goto", "split")

    def __init__(self, ins: Instruction):
        self.ins = ins
        self.offset = 0
        self.size = 0
        # promotion state
        self.as_wide_goto = False   # goto emitted as goto_w
        self.split = False          # conditional emitted as inverse + goto_w


def _fixed_size(ins: Instruction) -> int:
    kind = OPERAND_KIND[ins.mnemonic]
    if ins.wide:
        return 6 if kind == "iinc" else 4
    return 1 + {"": 0, "s1": 1, "u1": 1, "s2": 2, "local": 1, "pool1": 1,
                "pool2": 2, "branch2": 2, "branch4": 4, "iinc": 2,
                "iface": 4, "indy": 4, "multi": 3}[kind]


def _unit_size(u: _Unit, offset: int) -> int:
    ins = u.ins
    kind = OPERAND_KIND[ins.mnemonic]
    if kind == "table":
        pad = (-(offset + 1)) % 4
        return 1 + pad + 12 + 4 * len(ins.switch.targets)
    if kind == "lookup":
        pad = (-(offset + 1)) % 4
        return 1 + pad + 8 + 8 * len(ins.switch.targets)
    if kind == "pool1" and ins.pool > 0xFF:
        return 3  # ldc promoted to ldc_w
    if u.split:
        return 8  # inverted 16-bit branch + goto_w
    if u.as_wide_goto:
        return 5
    return _fixed_size(ins)


def _layout(instructions: list[Instruction]) -> list[_Unit]:
    units = [_Unit(ins) for ins in instructions]
    for ins in instructions:
        if ins.target is not None and not 0 <= ins.target < len(units):
            raise MalformedCode(0, f"branch target ordinal {ins.target} out of range")
        if ins.switch is not None:
            for t in [ins.switch.default, *ins.switch.targets]:
                if not 0 <= t < len(units):
                    raise MalformedCode(0, f"switch target ordinal {t} out of range")

    for _ in range(len(units) + 2):
        offset = 0
        for u in units:
            u.offset = offset
            u.size = _unit_size(u, offset)
            offset += u.size
        changed = False
        for u in units:
            ins = u.ins
            if OPERAND_KIND[ins.mnemonic] != "branch2" or u.split or u.as_wide_goto:
                continue
            disp = units[ins.target].offset - u.offset
            if _S2_MIN <= disp <= _S2_MAX:
                continue
            if ins.mnemonic == "goto":
                u.as_wide_goto = True
            elif ins.mnemonic in INVERTED_BRANCH:
                u.split = True
            else:
                raise EncodeOverflow(f"{ins.mnemonic} displacement {disp} does not fit")
            changed = True
        if not changed:
            break
    else:  # pragma: no cover - promotion is monotone
        raise EncodeOverflow("branch layout did not converge")
    return units


def _emit_instructions(units: list[_Unit]) -> bytes:
    out = bytearray()
    for u in units:
        ins = u.ins
        kind = OPERAND_KIND[ins.mnemonic]
        start = u.offset
        assert len(out) == start
        if u.split:
            # inverted condition skips the wide jump
            inv = INVERTED_BRANCH[ins.mnemonic]
            out.append(MNEMONIC_TO_OPCODE[inv])
            out += struct.pack(">h", 8)
            gw_at = start + 3
            out.append(MNEMONIC_TO_OPCODE["goto_w"])
            out += struct.pack(">i", units[ins.target].offset - gw_at)
            continue
        if u.as_wide_goto:
            out.append(MNEMONIC_TO_OPCODE["goto_w"])
            out += struct.pack(">i", units[ins.target].offset - start)
            continue
        if kind == "pool1" and ins.pool > 0xFF:
            out.append(MNEMONIC_TO_OPCODE["ldc_w"])
            out += struct.pack(">H", ins.pool)
            continue
        if ins.wide:
            out.append(WIDE)
            out.append(MNEMONIC_TO_OPCODE[ins.mnemonic])
            if kind == "iinc":
                out += struct.pack(">Hh", ins.local, ins.value)
            else:
                out += struct.pack(">H", ins.local)
            continue
        out.append(MNEMONIC_TO_OPCODE[ins.mnemonic])
        if kind == "":
            pass
        elif kind == "s1":
            out += struct.pack(">b", ins.value)
        elif kind == "u1":
            out += struct.pack(">B", ins.value)
        elif kind == "s2":
            out += struct.pack(">h", ins.value)
        elif kind == "local":
            out += struct.pack(">B", ins.local)
        elif kind == "pool1":
            out += struct.pack(">B", ins.pool)
        elif kind == "pool2":
            out += struct.pack(">H", ins.pool)
        elif kind == "branch2":
            disp = units[ins.target].offset - start
            out += struct.pack(">h", disp)
        elif kind == "branch4":
            out += struct.pack(">i", units[ins.target].offset - start)
        elif kind == "iinc":
            out += struct.pack(">Bb", ins.local, ins.value)
        elif kind == "iface":
            out += struct.pack(">HBB", ins.pool, ins.count, 0)
        elif kind == "indy":
            out += struct.pack(">HH", ins.pool, 0)
        elif kind == "multi":
            out += struct.pack(">HB", ins.pool, ins.dims)
        elif kind in ("table", "lookup"):
            pad = (-(start + 1)) % 4
            out += b"\x00" * pad
            sw = ins.switch
            if kind == "table":
                out += struct.pack(">iii", units[sw.default].offset - start, sw.low, sw.high)
                for t in sw.targets:
                    out += struct.pack(">i", units[t].offset - start)
            else:
                out += struct.pack(">ii", units[sw.default].offset - start, len(sw.targets))
                for m, t in zip(sw.matches, sw.targets):
                    out += struct.pack(">ii", m, units[t].offset - start)
        else:  # pragma: no cover
            raise AssertionError(kind)
    return bytes(out)


def _u2_offset(value: int, what: str) -> int:
    if not 0 <= value <= 0xFFFF:
        raise EncodeOverflow(f"{what} {value} does not fit in 16 bits")
    return value


def _encode_stack_map(table: StackMapTable, ordinal_offset: list[int]) -> bytes:
    out = bytearray(struct.pack(">H", len(table.frames)))

    def emit_vti(vt: VerificationType) -> bytes:
        if vt.tag == VerificationType.VTI_OBJECT:
            return struct.pack(">BH", vt.tag, vt.index)
        if vt.tag == VerificationType.VTI_UNINITIALIZED:
            return struct.pack(">BH", vt.tag, _u2_offset(ordinal_offset[vt.index],
                                                         "uninitialized offset"))
        return struct.pack(">B", vt.tag)

    prev = -1
    for fr in table.frames:
        offset = ordinal_offset[fr.ordinal]
        delta = offset if prev < 0 else offset - prev - 1
        if delta < 0:
            raise EncodeOverflow("stack map frames are not in increasing offset order")
        _u2_offset(delta, "stack map delta")
        prev = offset
        if fr.kind == "same":
            if delta <= 63 and not fr.extended:
                out.append(delta)
            else:
                out += struct.pack(">BH", 251, delta)
        elif fr.kind == "same_locals_1":
            if delta <= 63 and not fr.extended:
                out.append(64 + delta)
            else:
                out += struct.pack(">BH", 247, delta)
            out += emit_vti(fr.stack[0])
        elif fr.kind == "chop":
            out += struct.pack(">BH", 251 - fr.chopped, delta)
        elif fr.kind == "append":
            out += struct.pack(">BH", 251 + len(fr.locals), delta)
            for vt in fr.locals:
                out += emit_vti(vt)
        elif fr.kind == "full":
            out += struct.pack(">BHH", 255, delta, len(fr.locals))
            for vt in fr.locals:
                out += emit_vti(vt)
            out += struct.pack(">H", len(fr.stack))
            for vt in fr.stack:
                out += emit_vti(vt)
        else:  # pragma: no cover
            raise AssertionError(fr.kind)
    return bytes(out)


def encode_code(code: CodeModel) -> bytes:
    units = _layout(code.instructions)
    body = _emit_instructions(units)
    if len(body) > MAX_CODE_BYTES:
        raise EncodeOverflow(f"method body is {len(body)} bytes, max {MAX_CODE_BYTES}")
    # ordinal -> byte offset, with the end-of-code sentinel for exception ranges
    ordinal_offset = [u.offset for u in units] + [len(body)]

    out = bytearray(struct.pack(">HHI", code.max_stack, code.max_locals, len(body)))
    out += body
    out += struct.pack(">H", len(code.exception_table))
    for h in code.exception_table:
        out += struct.pack(
            ">HHHH",
            _u2_offset(ordinal_offset[h.start], "exception start"),
            _u2_offset(ordinal_offset[h.end], "exception end"),
            _u2_offset(ordinal_offset[h.handler], "exception handler"),
            h.catch_type,
        )
    out += struct.pack(">H", len(code.attributes))
    for attr in code.attributes:
        if isinstance(attr, LineNumberTable):
            payload = bytearray(struct.pack(">H", len(attr.entries)))
            for ordinal, line in attr.entries:
                payload += struct.pack(">HH", _u2_offset(ordinal_offset[ordinal],
                                                         "line number offset"), line)
            out += struct.pack(">HI", attr.name_index, len(payload))
            out += payload
        elif isinstance(attr, StackMapTable):
            payload = _encode_stack_map(attr, ordinal_offset)
            out += struct.pack(">HI", attr.name_index, len(payload))
            out += payload
        else:
            out += struct.pack(">HI", attr.name_index, len(attr.data))
            out += attr.data
    return bytes(out)


def _emit_attributes(out: bytearray, attrs: list) -> None:
    out += struct.pack(">H", len(attrs))
    for a in attrs:
        if isinstance(a, CodeModel):
            payload = encode_code(a)
            out += struct.pack(">HI", a.name_index, len(payload))
            out += payload
        else:
            out += struct.pack(">HI", a.name_index, len(a.data))
            out += a.data


def emit_class(model: ClassModel) -> bytes:
    out = bytearray(struct.pack(">IHH", 0xCAFEBABE, model.minor, model.major))
    out += model.pool.emit()
    out += struct.pack(">HHH", model.access_flags, model.this_class, model.super_class)
    out += struct.pack(">H", len(model.interfaces))
    for idx in model.interfaces:
        out += struct.pack(">H", idx)
    out += struct.pack(">H", len(model.fields))
    for f in model.fields:
        out += struct.pack(">HHH", f.access_flags, f.name_index, f.descriptor_index)
        _emit_attributes(out, f.attributes)
    out += struct.pack(">H", len(model.methods))
    for m in model.methods:
        out += struct.pack(">HHH", m.access_flags, m.name_index, m.descriptor_index)
        _emit_attributes(out, m.attributes)
    _emit_attributes(out, model.attributes)
    return bytes(out)
