"""Fixture class corpus, built byte-by-byte with the independent assembler.

FloatTools mirrors the float sign example: a method whose fourth branch is
only reachable with a NaN input, giving the canonical hit-count pattern for
the three-test suite and the NaN completion test.
"""

from __future__ import annotations

import struct

from assembler import (
    ACC_PUBLIC,
    ACC_STATIC,
    ACC_FINAL,
    Code,
    ClassFile,
    VTI_INT,
)

def _default_init(cf: ClassFile) -> Code:
    ref = cf.pool.methodref("java/lang/Object", "<init>", "()V")
    return Code(1, 1, [("aload_0",), ("invokespecial", ref), ("return",)])


def build_floattools() -> bytes:
    cf = ClassFile("FloatTools")
    cf.source_file = "FloatTools.java"
    abs_ref = cf.pool.methodref("java/lang/Math", "abs", "(F)F")
    eps = cf.pool.float(1e-6)
    # ordinals:      0        1           2      3      4       5  6
    #                fload_0  invokestatic ldc   fcmpg  ifge    0  ireturn
    #                7        8        9      10      11 12    (x < 0)
    #                13       14       15     16      17 18    (x > 0)
    #                19       20             (NaN falls through to -2)
    sign = Code(2, 1, [
        ("label", "L_top"),
        ("fload_0",),
        ("invokestatic", abs_ref),
        ("ldc", eps),
        ("fcmpg",),
        ("ifge", "L_neg"),
        ("label", "L_ret0"),
        ("iconst_0",),
        ("ireturn",),
        ("label", "L_neg"),
        ("fload_0",),
        ("fconst_0",),
        ("fcmpg",),
        ("ifge", "L_pos"),
        ("label", "L_retm1"),
        ("iconst_m1",),
        ("ireturn",),
        ("label", "L_pos"),
        ("fload_0",),
        ("fconst_0",),
        ("fcmpl",),
        ("ifle", "L_nan"),
        ("label", "L_ret1"),
        ("iconst_1",),
        ("ireturn",),
        ("label", "L_nan"),
        ("bipush", -2),
        ("ireturn",),
    ], line_numbers=[
        ("L_top", 5), ("L_ret0", 6), ("L_neg", 7), ("L_retm1", 8),
        ("L_pos", 9), ("L_ret1", 10), ("L_nan", 11),
    ])
    cf.add_method(ACC_PUBLIC, "<init>", "()V", _default_init(cf))
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "sign", "(F)I", sign)
    return cf.build()


# goal name suffix -> (ordinal in sign, source line); order matches goal 1..9
FLOATTOOLS_GOAL_SITES = [
    (1, 5), (2, 5), (7, 7), (5, 6), (9, 7), (11, 8), (13, 9), (17, 10), (19, 11),
]


def floattools_goal_entries() -> list[dict]:
    entries = []
    for i, (ordinal, line) in enumerate(FLOATTOOLS_GOAL_SITES, start=1):
        entries.append({
            "class": "coverage",
            "coveredLines": str(line),
            "description": f"block {i} (lines FloatTools.java:{line})",
            "expression": "false",
            "name": f"FloatTools.sign:(F)I.coverage.{i}",
            "sourceLocation": {
                "bytecodeIndex": str(ordinal),
                "file": "FloatTools.java",
                "function": "FloatTools.sign:(F)I",
                "line": str(line),
            },
        })
    return entries


def build_intops() -> bytes:
    cf = ClassFile("IntOps")
    cf.source_file = "IntOps.java"
    clamp = Code(2, 3, [
        ("iload_0",), ("iload_1",), ("if_icmpge", "L1"),
        ("iload_1",), ("ireturn",),
        ("label", "L1"),
        ("iload_0",), ("iload_2",), ("if_icmple", "L2"),
        ("iload_2",), ("ireturn",),
        ("label", "L2"),
        ("iload_0",), ("ireturn",),
    ])
    absdiff = Code(2, 2, [
        ("iload_0",), ("iload_1",), ("isub",), ("dup",), ("ifge", "Lpos"),
        ("ineg",),
        ("label", "Lpos"),
        ("ireturn",),
    ])
    cf.add_method(ACC_PUBLIC, "<init>", "()V", _default_init(cf))
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "clamp", "(III)I", clamp)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "absdiff", "(II)I", absdiff)
    return cf.build()


def build_floatmath() -> bytes:
    cf = ClassFile("FloatMath")
    cf.source_file = "FloatMath.java"
    safe_div = Code(2, 2, [
        ("fload_1",), ("fconst_0",), ("fcmpl",), ("ifne", "L1"),
        ("fconst_0",), ("freturn",),
        ("label", "L1"),
        ("fload_0",), ("fload_1",), ("fdiv",), ("freturn",),
    ])
    lerp = Code(3, 3, [
        ("fload_0",), ("fload_1",), ("fload_0",), ("fsub",),
        ("fload_2",), ("fmul",), ("fadd",), ("freturn",),
    ])
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "safeDiv", "(FF)F", safe_div)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "lerp", "(FFF)F", lerp)
    return cf.build()


def build_staticstate() -> bytes:
    cf = ClassFile("StaticState")
    cf.source_file = "StaticState.java"
    cf.add_field(ACC_STATIC, "counter", "I")
    counter = cf.pool.fieldref("StaticState", "counter", "I")
    clinit = Code(1, 0, [
        ("bipush", 42), ("putstatic", counter), ("return",),
    ])
    bump = Code(2, 1, [
        ("iload_0",), ("getstatic", counter), ("iadd",), ("ireturn",),
    ])
    read = Code(1, 0, [
        ("getstatic", counter), ("ireturn",),
    ])
    cf.add_method(ACC_STATIC, "<clinit>", "()V", clinit)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "bump", "(I)I", bump)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "read", "()I", read)
    return cf.build()


def build_thrower() -> bytes:
    cf = ClassFile("Thrower")
    cf.source_file = "Thrower.java"
    ise = cf.pool.klass("java/lang/IllegalStateException")
    may_throw = Code(1, 1, [
        ("iload_0",), ("ifge", "Lok"),
        ("new", ise), ("athrow",),
        ("label", "Lok"),
        ("iload_0",), ("ireturn",),
    ])
    guard_ref = cf.pool.methodref("Thrower", "mayThrow", "(I)I")
    guarded = Code(1, 2, [
        ("label", "Ltry"),
        ("iload_0",), ("invokestatic", guard_ref),
        ("label", "Lend"),
        ("ireturn",),
        ("label", "Lcatch"),
        ("astore_1",), ("bipush", -99), ("ireturn",),
    ], exceptions=[("Ltry", "Lend", "Lcatch", "java/lang/IllegalStateException")])
    swallow = Code(1, 2, [
        ("label", "Ltry"),
        ("iload_0",), ("invokestatic", guard_ref),
        ("label", "Lend"),
        ("ireturn",),
        ("label", "Lany"),
        ("pop",), ("iconst_0",), ("ireturn",),
    ], exceptions=[("Ltry", "Lend", "Lany", None)])
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "mayThrow", "(I)I", may_throw)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "guarded", "(I)I", guarded)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "swallow", "(I)I", swallow)
    return cf.build()


def build_bigpool() -> bytes:
    cf = ClassFile("BigPool")
    # stuff the pool well past one-byte ldc range
    indices = [cf.pool.integer(1_000_000 + i) for i in range(300)]
    salt = Code(1, 0, [
        ("ldc_w", indices[-1]), ("ireturn",),
    ])
    pick = Code(2, 1, [
        ("iload_0",), ("ifle", "Lz"),
        ("ldc_w", indices[0]), ("ireturn",),
        ("label", "Lz"),
        ("ldc_w", indices[1]), ("ireturn",),
    ])
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "salt", "()I", salt)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "pick", "(I)I", pick)
    return cf.build()


def build_wideforms() -> bytes:
    cf = ClassFile("WideForms")
    big_long = cf.pool.long(1 << 40)
    big_double = cf.pool.double(2.5e300)
    stretch = Code(2, 400, [
        ("wide_iload", 300), ("wide_istore", 301),
        ("wide_iinc", 300, 17),
        ("ldc2_w", big_long), ("pop2",),
        ("ldc2_w", big_double), ("pop2",),
        ("return",),
    ])
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "stretch", "()V", stretch)
    return cf.build()


def build_longjump() -> bytes:
    """A method whose goto_w really needs 32 bits."""
    cf = ClassFile("LongJump")
    body = [("goto_w", "Lfar")]
    body += [("nop",)] * 40000
    body += [("label", "Lfar"), ("iconst_0",), ("ireturn",)]
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "leap", "()I", Code(1, 0, body))
    return cf.build()


def build_switcher() -> bytes:
    cf = ClassFile("Switcher")
    tsw = Code(1, 1, [
        ("iload_0",),
        ("tableswitch", "Ld", 0, ["L0", "L1", "L2"]),
        ("label", "L0"), ("iconst_0",), ("ireturn",),
        ("label", "L1"), ("iconst_1",), ("ireturn",),
        ("label", "L2"), ("iconst_2",), ("ireturn",),
        ("label", "Ld"), ("iconst_m1",), ("ireturn",),
    ])
    lsw = Code(1, 1, [
        ("iload_0",),
        ("lookupswitch", "Ld", [(10, "LA"), (1000, "LB")]),
        ("label", "LA"), ("bipush", 10), ("ireturn",),
        ("label", "LB"), ("sipush", 1000), ("ireturn",),
        ("label", "Ld"), ("iconst_0",), ("ireturn",),
    ])
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "tsw", "(I)I", tsw)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "lsw", "(I)I", lsw)
    return cf.build()


def build_nested() -> bytes:
    cf = ClassFile("pkg/Outer$Inner")
    cf.source_file = "Outer.java"
    twice = Code(2, 1, [
        ("iload_0",), ("iload_0",), ("iadd",), ("ireturn",),
    ])
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "twice", "(I)I", twice)
    return cf.build()


def build_stackmapped() -> bytes:
    cf = ClassFile("StackMapped")
    cf.source_file = "StackMapped.java"
    pick = Code(1, 2, [
        ("iload_0",), ("ifge", "L1"),
        ("iconst_m1",), ("goto", "L2"),
        ("label", "L1"), ("iconst_1",),
        ("label", "L2"), ("istore_1",), ("iload_1",), ("ireturn",),
    ], stack_map=[("same", "L1"), ("same_locals_1_int", "L2")])
    count = Code(2, 3, [
        ("iconst_0",), ("istore_1",),
        ("iload_0",), ("istore_2",),
        ("label", "Lloop"),
        ("iload_2",), ("ifle", "Lend"),
        ("iload_1",), ("iload_2",), ("iadd",), ("istore_1",),
        ("iload_2",), ("iconst_m1",), ("iadd",), ("istore_2",),
        ("goto", "Lloop"),
        ("label", "Lend"),
        ("iload_1",), ("ireturn",),
    ], stack_map=[("append", "Lloop", [VTI_INT, VTI_INT]), ("same", "Lend")])
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "pick", "(I)I", pick)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "count", "(I)I", count)
    return cf.build()


def build_misc() -> bytes:
    """Odd but legal corners: constant field values, unknown attributes."""
    cf = ClassFile("Misc")
    ceiling_value = cf.pool.integer(4096)
    cf.add_field(ACC_PUBLIC | ACC_STATIC | ACC_FINAL, "CEILING", "I",
                 attrs=[("ConstantValue", struct.pack(">H", ceiling_value))])
    cf.raw_attrs.append(("xyzzyCustom", b"\x01\x02\x03\x04opaque"))
    echo = Code(1, 1, [("iload_0",), ("ireturn",)])
    noop = Code(0, 0, [("return",)])
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "echo", "(I)I", echo)
    cf.add_method(ACC_PUBLIC | ACC_STATIC, "noop", "()V", noop)
    cf.add_method(ACC_PUBLIC | ACC_STATIC | 0x0100, "nativeBit", "()I", None)
    return cf.build()


def corpus() -> dict[str, bytes]:
    return {
        "FloatTools": build_floattools(),
        "IntOps": build_intops(),
        "FloatMath": build_floatmath(),
        "StaticState": build_staticstate(),
        "Thrower": build_thrower(),
        "BigPool": build_bigpool(),
        "WideForms": build_wideforms(),
        "LongJump": build_longjump(),
        "Switcher": build_switcher(),
        "pkg/Outer$Inner": build_nested(),
        "StackMapped": build_stackmapped(),
        "Misc": build_misc(),
    }


def make_goal_entry(function: str, ordinal: int, index: int, line: int = 1,
                    file: str = "Gen.java") -> dict:
    cls = function.split(":", 1)[0].rsplit(".", 1)[0]
    return {
        "class": "coverage",
        "coveredLines": str(line),
        "description": f"block {index} (lines {file}:{line})",
        "expression": "false",
        "name": f"{function}.coverage.{index}",
        "sourceLocation": {
            "bytecodeIndex": str(ordinal),
            "file": file,
            "function": function,
            "line": str(line),
        },
    }
