"""Desk-scale JVM bytecode interpreter.

Executes the opcode subset needed to run the instrumented fixture corpus with
exact IEEE-754 single-precision float semantics: binary32 arithmetic with no
double rounding, fcmpg/fcmpl NaN ordering, 32-bit wrapping integer ops.
Recorder calls (CoverageLog.getInstance / record) and Math.abs(F)F are
intrinsics; everything else must resolve within the supplied classes.

Host-level failures (unsupported opcode, stack misuse, unresolved members)
are distinct from errors thrown by the guest program, which unwind through
guest exception tables and surface as an outcome, not a Python exception.
"""

from __future__ import annotations

import ctypes
import json
import math
import struct
from dataclasses import dataclass, field

from .classfile import ClassModel
from .classfile import pool as cp
from .classfile.descriptors import parse_method_descriptor
from .covdb import SessionRecorder, flush

MAX_CALL_DEPTH = 256
RECORDER_CLASS_NAME = "org/cprover/coverage/CoverageLog"
_CONTINUE = object()


class MiniJvmError(Exception):
    """Host-level interpreter failure (not a guest exception)."""


class UnsupportedOpcode(MiniJvmError):
    def __init__(self, mnemonic: str):
        super().__init__(f"unsupported opcode {mnemonic}")
        self.mnemonic = mnemonic


class StackViolation(MiniJvmError):
    pass


class UnresolvedMethod(MiniJvmError):
    pass


# -- guest values -------------------------------------------------------------

INT, FLOAT, REF, LONG, DOUBLE = "int", "float", "ref", "long", "double"
_WIDTH = {INT: 1, FLOAT: 1, REF: 1, LONG: 2, DOUBLE: 2}


@dataclass(frozen=True, slots=True)
class Value:
    kind: str
    v: object


def jint(x: int) -> Value:
    return Value(INT, i32(x))


def jfloat(x: float) -> Value:
    return Value(FLOAT, f32(x))


def jref(x) -> Value:
    return Value(REF, x)


@dataclass(frozen=True)
class GuestObject:
    class_name: str


class GuestThrow(Exception):
    """Internal unwinding for guest athrow; never escapes execute()."""

    def __init__(self, obj: GuestObject):
        super().__init__(obj.class_name)
        self.obj = obj


@dataclass
class Outcome:
    returned: Value | None = None
    thrown: GuestObject | None = None


# -- numeric helpers ----------------------------------------------------------

def i32(x: int) -> int:
    x &= 0xFFFFFFFF
    return x - 0x100000000 if x >= 0x80000000 else x


def f32(x: float) -> float:
    return ctypes.c_float(x).value


def f32_from_bits(bits: int) -> float:
    return struct.unpack(">f", struct.pack(">I", bits & 0xFFFFFFFF))[0]


def fdiv32(a: float, b: float) -> float:
    if b == 0.0 and not math.isnan(b):
        if a == 0.0 or math.isnan(a):
            return float("nan")
        sign = math.copysign(1.0, a) * math.copysign(1.0, b)
        return math.copysign(float("inf"), sign)
    return f32(a / b)


def fcmp(a: float, b: float, nan_result: int) -> int:
    if math.isnan(a) or math.isnan(b):
        return nan_result
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


# -- frames -------------------------------------------------------------------

class Frame:
    """Operand stack and locals for one invocation; stack is height-checked."""

    __slots__ = ("stack", "locals", "pc", "max_stack", "height")

    def __init__(self, max_stack: int, max_locals: int):
        self.stack: list[Value] = []
        self.locals: list[Value | None] = [None] * max_locals
        self.pc = 0
        self.max_stack = max_stack
        self.height = 0

    def push(self, value: Value) -> None:
        self.height += _WIDTH[value.kind]
        if self.height > self.max_stack:
            raise StackViolation(
                f"operand stack grew to {self.height}, max_stack is {self.max_stack}")
        self.stack.append(value)

    def pop(self) -> Value:
        if not self.stack:
            raise StackViolation("pop from empty operand stack")
        value = self.stack.pop()
        self.height -= _WIDTH[value.kind]
        return value

    def pop_kind(self, kind: str) -> Value:
        value = self.pop()
        if value.kind != kind:
            raise StackViolation(f"expected {kind} on stack, found {value.kind}")
        return value

    def load(self, index: int, kind: str) -> Value:
        if index >= len(self.locals) or self.locals[index] is None:
            raise StackViolation(f"load from unset local {index}")
        value = self.locals[index]
        if value.kind != kind:
            raise StackViolation(f"local {index} holds {value.kind}, expected {kind}")
        return value

    def store(self, index: int, value: Value) -> None:
        if index >= len(self.locals):
            raise StackViolation(f"store to local {index} beyond max_locals")
        self.locals[index] = value


# -- interpreter --------------------------------------------------------------

_CONST_OPS = {
    "aconst_null": Value(REF, None),
    "iconst_m1": Value(INT, -1), "iconst_0": Value(INT, 0),
    "iconst_1": Value(INT, 1), "iconst_2": Value(INT, 2),
    "iconst_3": Value(INT, 3), "iconst_4": Value(INT, 4),
    "iconst_5": Value(INT, 5),
    "fconst_0": Value(FLOAT, 0.0), "fconst_1": Value(FLOAT, 1.0),
    "fconst_2": Value(FLOAT, 2.0),
}

_IF_ZERO = {
    "ifeq": lambda v: v == 0, "ifne": lambda v: v != 0,
    "iflt": lambda v: v < 0, "ifge": lambda v: v >= 0,
    "ifgt": lambda v: v > 0, "ifle": lambda v: v <= 0,
}

_IF_ICMP = {
    "if_icmpeq": lambda a, b: a == b, "if_icmpne": lambda a, b: a != b,
    "if_icmplt": lambda a, b: a < b, "if_icmpge": lambda a, b: a >= b,
    "if_icmpgt": lambda a, b: a > b, "if_icmple": lambda a, b: a <= b,
}


class Interpreter:
    def __init__(self, classes: list[ClassModel], recorder: SessionRecorder | None = None,
                 trace: list | None = None):
        self.classes = {m.class_name: m for m in classes}
        self.recorder = recorder if recorder is not None else SessionRecorder()
        self.statics: dict[tuple[str, str], Value] = {}
        self.initialized: set[str] = set()
        # when not None, every dispatched instruction appends
        # ("pkg.Cls.method:(desc)Ret", ordinal)
        self.trace = trace
        self._recorder_handle = GuestObject(RECORDER_CLASS_NAME)

    def execute(self, class_name: str, method_name: str, descriptor: str,
                args: list[Value]) -> Outcome:
        try:
            self._ensure_initialized(class_name)
            returned = self._invoke(class_name, method_name, descriptor, args, depth=0)
            return Outcome(returned=returned)
        except GuestThrow as t:
            return Outcome(thrown=t.obj)

    # -- class/member resolution ----------------------------------------------

    def _ensure_initialized(self, class_name: str) -> None:
        if class_name in self.initialized or class_name not in self.classes:
            return
        self.initialized.add(class_name)
        model = self.classes[class_name]
        if model.find_method("<clinit>", "()V") is not None:
            self._invoke(class_name, "<clinit>", "()V", [], depth=0)

    def _invoke(self, class_name: str, method_name: str, descriptor: str,
                args: list[Value], depth: int) -> Value | None:
        if depth > MAX_CALL_DEPTH:
            raise MiniJvmError(f"call depth exceeded {MAX_CALL_DEPTH}")
        intrinsic = self._intrinsic(class_name, method_name, descriptor)
        if intrinsic is not None:
            return intrinsic(args)
        model = self.classes.get(class_name)
        if model is None:
            raise UnresolvedMethod(f"{class_name}.{method_name}:{descriptor}")
        method = model.find_method(method_name, descriptor)
        if method is None or method.code is None:
            raise UnresolvedMethod(f"{class_name}.{method_name}:{descriptor}")
        return self._run(model, method, args, depth)

    def _intrinsic(self, class_name: str, method_name: str, descriptor: str):
        if class_name == "java/lang/Math" and method_name == "abs" and descriptor == "(F)F":
            def _abs(args):
                a = args[0].v
                return jfloat(f32(0.0 - a)) if a <= 0.0 else jfloat(a)
            return _abs
        if class_name == RECORDER_CLASS_NAME:
            if method_name == "getInstance":
                return lambda args: jref(self._recorder_handle)
            if method_name == "record" and descriptor == "(I)V":
                def _record(args):
                    # virtual call: args[0] is the receiver handle
                    self.recorder.record(args[-1].v)
                    return None
                return _record
        return None

    # -- execution -------------------------------------------------------------

    def _run(self, model: ClassModel, method, args: list[Value], depth: int) -> Value | None:
        code = method.code
        frame = Frame(code.max_stack, code.max_locals)
        slot = 0
        for a in args:
            frame.store(slot, a)
            slot += _WIDTH[a.kind]
        function_sig = (f"{model.class_name.replace('/', '.')}."
                        f"{model.method_name(method)}:{model.method_descriptor(method)}")
        instructions = code.instructions
        pool = model.pool

        while True:
            if not 0 <= frame.pc < len(instructions):
                raise MiniJvmError(f"pc {frame.pc} outside {function_sig}")
            ordinal = frame.pc
            if self.trace is not None:
                self.trace.append((function_sig, ordinal))
            ins = instructions[ordinal]
            try:
                result = self._step(ins, frame, pool, model, depth)
            except GuestThrow as t:
                handler = self._find_handler(code, ordinal, t.obj, pool)
                if handler is None:
                    raise
                frame.stack.clear()
                frame.height = 0
                frame.push(jref(t.obj))
                frame.pc = handler
                continue
            if result is not _CONTINUE:
                return result

    def _find_handler(self, code, ordinal: int, obj: GuestObject, pool) -> int | None:
        for h in code.exception_table:
            if not h.start <= ordinal < h.end:
                continue
            if h.catch_type == 0 or pool.class_name(h.catch_type) == obj.class_name:
                return h.handler
        return None

    def _step(self, ins, frame: Frame, pool, model: ClassModel, depth: int):
        m = ins.mnemonic
        if m in _CONST_OPS:
            frame.push(_CONST_OPS[m])
        elif m in ("bipush", "sipush"):
            frame.push(Value(INT, ins.value))
        elif m in ("ldc", "ldc_w", "ldc2_w"):
            frame.push(self._constant(pool, ins.pool))
        elif m == "iload" or m.startswith("iload_"):
            frame.push(frame.load(ins.local if m == "iload" else int(m[-1]), INT))
        elif m == "fload" or m.startswith("fload_"):
            frame.push(frame.load(ins.local if m == "fload" else int(m[-1]), FLOAT))
        elif m == "aload" or m.startswith("aload_"):
            frame.push(frame.load(ins.local if m == "aload" else int(m[-1]), REF))
        elif m == "istore" or m.startswith("istore_"):
            frame.store(ins.local if m == "istore" else int(m[-1]), frame.pop_kind(INT))
        elif m == "fstore" or m.startswith("fstore_"):
            frame.store(ins.local if m == "fstore" else int(m[-1]), frame.pop_kind(FLOAT))
        elif m == "astore" or m.startswith("astore_"):
            frame.store(ins.local if m == "astore" else int(m[-1]), frame.pop_kind(REF))
        elif m in ("iadd", "isub"):
            b = frame.pop_kind(INT).v
            a = frame.pop_kind(INT).v
            frame.push(jint(a + b if m == "iadd" else a - b))
        elif m in ("fadd", "fsub", "fmul", "fdiv"):
            b = frame.pop_kind(FLOAT).v
            a = frame.pop_kind(FLOAT).v
            if m == "fadd":
                r = f32(a + b)
            elif m == "fsub":
                r = f32(a - b)
            elif m == "fmul":
                r = f32(a * b)
            else:
                r = fdiv32(a, b)
            frame.push(Value(FLOAT, r))
        elif m == "fneg":
            a = frame.pop_kind(FLOAT).v
            frame.push(Value(FLOAT, f32(-a)))
        elif m in ("fcmpg", "fcmpl"):
            b = frame.pop_kind(FLOAT).v
            a = frame.pop_kind(FLOAT).v
            frame.push(Value(INT, fcmp(a, b, 1 if m == "fcmpg" else -1)))
        elif m in _IF_ZERO:
            if _IF_ZERO[m](frame.pop_kind(INT).v):
                frame.pc = ins.target
                return _CONTINUE
        elif m in _IF_ICMP:
            b = frame.pop_kind(INT).v
            a = frame.pop_kind(INT).v
            if _IF_ICMP[m](a, b):
                frame.pc = ins.target
                return _CONTINUE
        elif m in ("ifnull", "ifnonnull"):
            ref = frame.pop_kind(REF).v
            if (ref is None) == (m == "ifnull"):
                frame.pc = ins.target
                return _CONTINUE
        elif m in ("goto", "goto_w"):
            frame.pc = ins.target
            return _CONTINUE
        elif m == "ireturn":
            return frame.pop_kind(INT)
        elif m == "freturn":
            return frame.pop_kind(FLOAT)
        elif m == "areturn":
            return frame.pop_kind(REF)
        elif m == "return":
            return None
        elif m == "getstatic":
            cls, name, desc = pool.member_ref(ins.pool)
            self._ensure_initialized(cls)
            if cls not in self.classes:
                raise UnresolvedMethod(f"field {cls}.{name}:{desc}")
            frame.push(self.statics.get((cls, name), _default_value(desc)))
        elif m == "putstatic":
            cls, name, desc = pool.member_ref(ins.pool)
            self._ensure_initialized(cls)
            if cls not in self.classes:
                raise UnresolvedMethod(f"field {cls}.{name}:{desc}")
            self.statics[(cls, name)] = frame.pop()
        elif m == "invokestatic":
            cls, name, desc = pool.member_ref(ins.pool)
            self._ensure_initialized(cls)
            args = self._pop_args(frame, desc)
            result = self._invoke(cls, name, desc, args, depth + 1)
            if result is not None:
                frame.push(result)
        elif m == "invokevirtual":
            cls, name, desc = pool.member_ref(ins.pool)
            args = self._pop_args(frame, desc)
            receiver = frame.pop_kind(REF)
            if receiver.v is None:
                raise GuestThrow(GuestObject("java/lang/NullPointerException"))
            target_class = (receiver.v.class_name
                            if isinstance(receiver.v, GuestObject) else cls)
            result = self._invoke(target_class, name, desc,
                                  [receiver, *args], depth + 1)
            if result is not None:
                frame.push(result)
        elif m == "new":
            cls = pool.class_name(ins.pool)
            self._ensure_initialized(cls)
            frame.push(jref(GuestObject(cls)))
        elif m == "dup":
            top = frame.pop()
            frame.push(top)
            frame.push(top)
        elif m == "pop":
            frame.pop()
        elif m == "nop":
            pass
        elif m == "athrow":
            thrown = frame.pop_kind(REF)
            if thrown.v is None or not isinstance(thrown.v, GuestObject):
                raise GuestThrow(GuestObject("java/lang/NullPointerException"))
            raise GuestThrow(thrown.v)
        else:
            raise UnsupportedOpcode(m)
        frame.pc += 1
        return _CONTINUE

    def _constant(self, pool, index: int) -> Value:
        entry = pool.entry(index)
        if entry.tag == cp.TAG_INTEGER:
            return Value(INT, entry.value)
        if entry.tag == cp.TAG_FLOAT:
            return Value(FLOAT, f32_from_bits(entry.value))
        if entry.tag == cp.TAG_STRING:
            return jref(pool.utf8(entry.ref1))
        if entry.tag == cp.TAG_LONG:
            return Value(LONG, entry.value)
        if entry.tag == cp.TAG_DOUBLE:
            return Value(DOUBLE, struct.unpack(">d", struct.pack(">Q", entry.value))[0])
        raise UnsupportedOpcode(f"ldc of pool tag {entry.tag}")

    def _pop_args(self, frame: Frame, descriptor: str) -> list[Value]:
        params, _ = parse_method_descriptor(descriptor)
        kinds = []
        for p in params:
            if p == "F":
                kinds.append(FLOAT)
            elif p == "J":
                kinds.append(LONG)
            elif p == "D":
                kinds.append(DOUBLE)
            elif p.startswith(("L", "[")):
                kinds.append(REF)
            else:
                kinds.append(INT)  # B C I S Z are ints on the stack
        values = [frame.pop_kind(k) for k in reversed(kinds)]
        values.reverse()
        return values


def _default_value(descriptor: str) -> Value:
    if descriptor == "F":
        return Value(FLOAT, 0.0)
    if descriptor == "J":
        return Value(LONG, 0)
    if descriptor == "D":
        return Value(DOUBLE, 0.0)
    if descriptor.startswith(("L", "[")):
        return Value(REF, None)
    return Value(INT, 0)


# -- test suites ----------------------------------------------------------------

@dataclass
class TestCase:
    id: str
    class_name: str
    method: str
    descriptor: str
    args: list[Value]
    expect: Value | None = None


class SuiteFormatError(Exception):
    pass


def _parse_typed(obj: dict, what: str) -> Value:
    try:
        kind, raw = obj["kind"], obj["value"]
    except (TypeError, KeyError):
        raise SuiteFormatError(f"{what} must be {{kind, value}}: {obj!r}") from None
    if kind == "int":
        return jint(int(raw, 0) if isinstance(raw, str) else int(raw))
    if kind == "float":
        if isinstance(raw, str):
            bits_or_value = raw.strip()
            if bits_or_value.lower().startswith("0x"):
                return Value(FLOAT, f32_from_bits(int(bits_or_value, 16)))
            return jfloat(float(bits_or_value))  # "NaN", "Infinity", decimals
        return jfloat(float(raw))
    if kind == "ref" and raw is None:
        return jref(None)
    raise SuiteFormatError(f"unsupported {what} kind {kind!r}")


def load_suite(text: str) -> list[TestCase]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SuiteFormatError(f"invalid JSON: {e}") from None
    if not isinstance(doc, list):
        raise SuiteFormatError("suite must be a JSON array of test cases")
    tests = []
    for i, entry in enumerate(doc):
        try:
            tests.append(TestCase(
                id=str(entry.get("id", f"test{i}")),
                class_name=entry["class"].replace(".", "/"),
                method=entry["method"],
                descriptor=entry["descriptor"],
                args=[_parse_typed(a, "arg") for a in entry.get("args", [])],
                expect=(_parse_typed(entry["expect"], "expect")
                        if "expect" in entry and entry["expect"] is not None else None),
            ))
        except (KeyError, TypeError, ValueError) as e:
            raise SuiteFormatError(f"test entry {i}: {e}") from None
    return tests


def values_equal(a: Value, b: Value) -> bool:
    if a.kind != b.kind:
        return False
    if a.kind == FLOAT:
        return struct.pack(">f", a.v) == struct.pack(">f", b.v)
    if a.kind == DOUBLE:
        return struct.pack(">d", a.v) == struct.pack(">d", b.v)
    return a.v == b.v


def run_suite(classes: list[ClassModel], tests: list[TestCase], db_path: str | None,
              first_hit: bool = False,
              recorder: SessionRecorder | None = None) -> dict:
    """Execute tests in order, recording coverage; flush once at suite end.

    The flush happens exactly once even when tests end in uncaught guest
    errors, mirroring a shutdown-hook guarantee.
    """
    recorder = recorder if recorder is not None else SessionRecorder(first_hit=first_hit)
    interp = Interpreter(classes, recorder=recorder)
    results = []
    try:
        for t in tests:
            outcome = interp.execute(t.class_name, t.method, t.descriptor, t.args)
            if outcome.thrown is not None:
                results.append({"id": t.id, "status": "error",
                                "thrown": outcome.thrown.class_name})
            elif t.expect is not None and (
                    outcome.returned is None
                    or not values_equal(outcome.returned, t.expect)):
                results.append({"id": t.id, "status": "fail",
                                "expected": _json_value(t.expect),
                                "returned": _json_value(outcome.returned)})
            else:
                results.append({"id": t.id, "status": "pass",
                                "returned": _json_value(outcome.returned)})
    finally:
        if db_path is not None:
            flush(recorder, db_path)
    passed = sum(1 for r in results if r["status"] == "pass")
    return {"tests": results, "passed": passed, "failed": len(results) - passed}


def _json_value(value: Value | None):
    if value is None:
        return None
    if value.kind == FLOAT:
        if math.isnan(value.v):
            return "NaN"
        if math.isinf(value.v):
            return "Infinity" if value.v > 0 else "-Infinity"
        return value.v
    if value.kind == REF:
        return repr(value.v) if value.v is not None else None
    return value.v
