"""Stack-height simulation over a CodeModel.

Not a full type verifier: it checks that every path agrees on stack height at
every reachable instruction, that no instruction under- or overflows the
declared max_stack, and that all branch targets exist. Sufficient to catch
broken offset fixups after code rewriting.
"""

from __future__ import annotations

from .descriptors import arg_slots, return_slots, slot_width
from .errors import ClassFileError
from .model import CodeModel
from .pool import ConstantPool, TAG_DOUBLE, TAG_LONG


class SimulationError(ClassFileError):
    pass


# mnemonic -> (pops, pushes) for fixed-effect opcodes
_FIXED: dict[str, tuple[int, int]] = {}


def _init_table():
    t = _FIXED
    for m in ["nop", "iinc", "return", "goto", "goto_w"]:
        t[m] = (0, 0)
    for m in ["aconst_null", "bipush", "sipush", "new"]:
        t[m] = (0, 1)
    for i in ["m1", "0", "1", "2", "3", "4", "5"]:
        t[f"iconst_{i}"] = (0, 1)
    for m in ["fconst_0", "fconst_1", "fconst_2"]:
        t[m] = (0, 1)
    for m in ["lconst_0", "lconst_1", "dconst_0", "dconst_1"]:
        t[m] = (0, 2)
    for base in ["iload", "fload", "aload"]:
        t[base] = (0, 1)
        for i in range(4):
            t[f"{base}_{i}"] = (0, 1)
    for base in ["lload", "dload"]:
        t[base] = (0, 2)
        for i in range(4):
            t[f"{base}_{i}"] = (0, 2)
    for base in ["istore", "fstore", "astore"]:
        t[base] = (1, 0)
        for i in range(4):
            t[f"{base}_{i}"] = (1, 0)
    for base in ["lstore", "dstore"]:
        t[base] = (2, 0)
        for i in range(4):
            t[f"{base}_{i}"] = (2, 0)
    for m in ["iaload", "faload", "aaload", "baload", "caload", "saload"]:
        t[m] = (2, 1)
    for m in ["laload", "daload"]:
        t[m] = (2, 2)
    for m in ["iastore", "fastore", "aastore", "bastore", "castore", "sastore"]:
        t[m] = (3, 0)
    for m in ["lastore", "dastore"]:
        t[m] = (4, 0)
    t.update({
        "pop": (1, 0), "pop2": (2, 0), "dup": (1, 2), "dup_x1": (2, 3),
        "dup_x2": (3, 4), "dup2": (2, 4), "dup2_x1": (3, 5), "dup2_x2": (4, 6),
        "swap": (2, 2),
    })
    for op in ["add", "sub", "mul", "div", "rem"]:
        t[f"i{op}"] = (2, 1)
        t[f"f{op}"] = (2, 1)
        t[f"l{op}"] = (4, 2)
        t[f"d{op}"] = (4, 2)
    for op in ["and", "or", "xor"]:
        t[f"i{op}"] = (2, 1)
        t[f"l{op}"] = (4, 2)
    for op in ["shl", "shr", "ushr"]:
        t[f"i{op}"] = (2, 1)
        t[f"l{op}"] = (3, 2)
    t.update({"ineg": (1, 1), "fneg": (1, 1), "lneg": (2, 2), "dneg": (2, 2)})
    t.update({
        "i2l": (1, 2), "i2f": (1, 1), "i2d": (1, 2),
        "l2i": (2, 1), "l2f": (2, 1), "l2d": (2, 2),
        "f2i": (1, 1), "f2l": (1, 2), "f2d": (1, 2),
        "d2i": (2, 1), "d2l": (2, 2), "d2f": (2, 1),
        "i2b": (1, 1), "i2c": (1, 1), "i2s": (1, 1),
    })
    t.update({"lcmp": (4, 1), "fcmpl": (2, 1), "fcmpg": (2, 1),
              "dcmpl": (4, 1), "dcmpg": (4, 1)})
    for m in ["ifeq", "ifne", "iflt", "ifge", "ifgt", "ifle", "ifnull", "ifnonnull"]:
        t[m] = (1, 0)
    for m in ["if_icmpeq", "if_icmpne", "if_icmplt", "if_icmpge", "if_icmpgt",
              "if_icmple", "if_acmpeq", "if_acmpne"]:
        t[m] = (2, 0)
    t.update({"tableswitch": (1, 0), "lookupswitch": (1, 0)})
    t.update({"ireturn": (1, 0), "freturn": (1, 0), "areturn": (1, 0),
              "lreturn": (2, 0), "dreturn": (2, 0)})
    t.update({"athrow": (1, 0), "arraylength": (1, 1), "newarray": (1, 1),
              "anewarray": (1, 1), "checkcast": (1, 1), "instanceof": (1, 1),
              "monitorenter": (1, 0), "monitorexit": (1, 0)})


_init_table()

_TERMINAL = frozenset(["ireturn", "lreturn", "freturn", "dreturn", "areturn",
                       "return", "athrow"])


def _effect(ins, pool: ConstantPool) -> tuple[int, int]:
    m = ins.mnemonic
    if m in _FIXED:
        return _FIXED[m]
    if m in ("ldc", "ldc_w"):
        tag = pool.entry(ins.pool).tag
        return (0, 2 if tag in (TAG_LONG, TAG_DOUBLE) else 1)
    if m == "ldc2_w":
        return (0, 2)
    if m in ("getstatic", "putstatic", "getfield", "putfield"):
        _, _, desc = pool.member_ref(ins.pool)
        w = slot_width(desc)
        return {"getstatic": (0, w), "putstatic": (w, 0),
                "getfield": (1, w), "putfield": (1 + w, 0)}[m]
    if m in ("invokevirtual", "invokespecial", "invokestatic", "invokeinterface"):
        _, _, desc = pool.member_ref(ins.pool)
        receiver = 0 if m == "invokestatic" else 1
        return (receiver + arg_slots(desc), return_slots(desc))
    if m == "invokedynamic":
        entry = pool.entry(ins.pool)
        _, desc = pool.name_and_type(entry.ref2)
        return (arg_slots(desc), return_slots(desc))
    if m == "multianewarray":
        return (ins.dims, 1)
    raise SimulationError(f"no stack effect known for {m}")


def simulate_stack(code: CodeModel, pool: ConstantPool) -> int:
    """Walk all paths checking stack-height consistency; returns the max height."""
    n = len(code.instructions)
    heights: dict[int, int] = {}
    work: list[tuple[int, int]] = [(0, 0)]
    for h in code.exception_table:
        if not (0 <= h.start <= h.end <= n) or not 0 <= h.handler < n:
            raise SimulationError(f"exception handler range {h.start}..{h.end}->{h.handler} invalid")
        work.append((h.handler, 1))
    max_seen = 0

    while work:
        ordinal, height = work.pop()
        if ordinal >= n:
            raise SimulationError(f"control flow runs off the end at ordinal {ordinal}")
        known = heights.get(ordinal)
        if known is not None:
            if known != height:
                raise SimulationError(
                    f"stack height mismatch at ordinal {ordinal}: {known} vs {height}")
            continue
        heights[ordinal] = height
        ins = code.instructions[ordinal]
        pops, pushes = _effect(ins, pool)
        if height < pops:
            raise SimulationError(
                f"stack underflow at ordinal {ordinal} ({ins.mnemonic}): "
                f"height {height}, needs {pops}")
        after = height - pops + pushes
        if after > code.max_stack:
            raise SimulationError(
                f"stack overflow at ordinal {ordinal} ({ins.mnemonic}): "
                f"{after} > max_stack {code.max_stack}")
        max_seen = max(max_seen, after)

        if ins.switch is not None:
            for t in [ins.switch.default, *ins.switch.targets]:
                work.append((t, after))
            continue
        if ins.mnemonic in _TERMINAL:
            continue
        if ins.target is not None:
            work.append((ins.target, after))
            if ins.mnemonic in ("goto", "goto_w"):
                continue
        work.append((ordinal + 1, after))
    return max_seen
