"""In-memory class file model.

Code is modeled as an ordinal-indexed instruction list: every offset-bearing
structure inside a Code attribute (branch operands, exception table,
LineNumberTable, StackMapTable) is re-expressed in instruction ordinals while
decoded, and converted back to byte offsets on encode. Everything the model
does not understand is carried as opaque bytes and re-emitted verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .pool import ConstantPool

ACC_STATIC = 0x0008
ACC_NATIVE = 0x0100
ACC_ABSTRACT = 0x0400


@dataclass
class Attribute:
    """Attribute preserved as an opaque byte blob."""

    name_index: int
    data: bytes


@dataclass
class SwitchData:
    """tableswitch/lookupswitch operands with targets as ordinals."""

    default: int
    low: int | None = None
    high: int | None = None
    matches: list[int] | None = None
    targets: list[int] = field(default_factory=list)


@dataclass
class Instruction:
    mnemonic: str
    pool: int | None = None      # constant pool operand
    target: int | None = None    # branch target, instruction ordinal
    value: int | None = None     # immediate (bipush/sipush/iinc delta/newarray type)
    local: int | None = None     # local variable index
    dims: int | None = None      # multianewarray dimensions
    count: int | None = None     # invokeinterface count
    wide: bool = False
    switch: SwitchData | None = None


@dataclass
class ExceptionHandler:
    """start/end/handler as ordinals; end may equal len(instructions)."""

    start: int
    end: int
    handler: int
    catch_type: int


@dataclass
class LineNumberTable:
    name_index: int
    entries: list[tuple[int, int]]  # (ordinal, line number)


@dataclass
class VerificationType:
    tag: int
    # Object: pool index of the class; Uninitialized: ordinal of the `new`.
    index: int | None = None

    VTI_OBJECT = 7
    VTI_UNINITIALIZED = 8


@dataclass
class StackMapFrame:
    kind: str                 # "same" | "same_locals_1" | "chop" | "append" | "full"
    ordinal: int              # instruction the frame applies to
    extended: bool = False    # originally encoded with an explicit u2 delta
    chopped: int = 0          # "chop" only: locals removed (1..3)
    locals: list[VerificationType] = field(default_factory=list)
    stack: list[VerificationType] = field(default_factory=list)


@dataclass
class StackMapTable:
    name_index: int
    frames: list[StackMapFrame]


CodeAttr = Attribute | LineNumberTable | StackMapTable


@dataclass
class CodeModel:
    name_index: int           # Utf8 index of "Code"
    max_stack: int
    max_locals: int
    instructions: list[Instruction]
    exception_table: list[ExceptionHandler] = field(default_factory=list)
    attributes: list[CodeAttr] = field(default_factory=list)

    def insert(self, at: int, new_instructions: list[Instruction], retarget: bool = True) -> None:
        """Insert instructions before ordinal `at`, fixing every ordinal reference.

        retarget=True moves references that pointed exactly at `at` onto the
        first inserted instruction (so control entering the site executes the
        insertion); retarget=False shifts them past it (pure prepend).
        Uninitialized stack-map entries always track the original instruction.
        """
        width = len(new_instructions)
        if width == 0:
            return
        if not 0 <= at <= len(self.instructions):
            raise IndexError(f"insertion ordinal {at} out of range")

        def shift(t: int) -> int:
            if t > at or (t == at and not retarget):
                return t + width
            return t

        for ins in self.instructions:
            if ins.target is not None:
                ins.target = shift(ins.target)
            if ins.switch is not None:
                ins.switch.default = shift(ins.switch.default)
                ins.switch.targets = [shift(t) for t in ins.switch.targets]
        for h in self.exception_table:
            h.start = shift(h.start)
            h.end = shift(h.end)
            h.handler = shift(h.handler)
        for attr in self.attributes:
            if isinstance(attr, LineNumberTable):
                attr.entries = [(shift(o), line) for o, line in attr.entries]
            elif isinstance(attr, StackMapTable):
                for fr in attr.frames:
                    fr.ordinal = shift(fr.ordinal)
                    for vt in fr.locals + fr.stack:
                        if vt.tag == VerificationType.VTI_UNINITIALIZED and vt.index >= at:
                            vt.index += width
        self.instructions[at:at] = new_instructions


MethodAttr = Attribute | CodeModel


@dataclass
class MethodModel:
    access_flags: int
    name_index: int
    descriptor_index: int
    attributes: list[MethodAttr]

    @property
    def code(self) -> CodeModel | None:
        for a in self.attributes:
            if isinstance(a, CodeModel):
                return a
        return None

    def replace_code(self, code: CodeModel) -> None:
        for i, a in enumerate(self.attributes):
            if isinstance(a, CodeModel):
                self.attributes[i] = code
                return
        self.attributes.append(code)


@dataclass
class FieldModel:
    access_flags: int
    name_index: int
    descriptor_index: int
    attributes: list[Attribute]


@dataclass
class ClassModel:
    minor: int
    major: int
    pool: ConstantPool
    access_flags: int
    this_class: int
    super_class: int
    interfaces: list[int]
    fields: list[FieldModel]
    methods: list[MethodModel]
    attributes: list[Attribute]

    @property
    def class_name(self) -> str:
        return self.pool.class_name(self.this_class)

    def method_name(self, m: MethodModel) -> str:
        return self.pool.utf8(m.name_index)

    def method_descriptor(self, m: MethodModel) -> str:
        return self.pool.utf8(m.descriptor_index)

    def find_method(self, name: str, descriptor: str) -> MethodModel | None:
        for m in self.methods:
            if self.method_name(m) == name and self.method_descriptor(m) == descriptor:
                return m
        return None

    def field_name(self, f: FieldModel) -> str:
        return self.pool.utf8(f.name_index)

    def field_descriptor(self, f: FieldModel) -> str:
        return self.pool.utf8(f.descriptor_index)

    def find_field(self, name: str) -> FieldModel | None:
        for f in self.fields:
            if self.field_name(f) == name:
                return f
        return None
