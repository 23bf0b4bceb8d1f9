"""Class file instrumentation: make goal-site instructions record their hits.

Immediately before each goal instruction the rewriter inserts

    getstatic     <this class>.company_coverage_reporter : CoverageLog
    ldc           <uid>            (ldc_w when the pool index exceeds 255)
    invokevirtual CoverageLog.record:(I)V

Branches (and exception handler entries) that pointed at the goal instruction
are retargeted to the inserted getstatic, so the hit is recorded however
control reaches the site. A static recorder field plus a class initializer
obtaining the recorder singleton are added on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classfile import (
    ACC_ABSTRACT,
    ACC_NATIVE,
    ACC_STATIC,
    ClassModel,
    CodeModel,
    FieldModel,
    Instruction,
    MethodModel,
    emit_class,
    parse_class,
)
from .goals import CoverageGoal, goal_key, parse_function_signature

RECORDER_CLASS = "org/cprover/coverage/CoverageLog"
RECORDER_DESC = f"L{RECORDER_CLASS};"
RECORDER_FIELD = "company_coverage_reporter"
RECORD_METHOD = "record"
RECORD_DESC = "(I)V"
GET_INSTANCE_METHOD = "getInstance"
GET_INSTANCE_DESC = f"(){RECORDER_DESC}"


class InstrumentError(Exception):
    pass


class OrdinalOutOfRange(InstrumentError):
    def __init__(self, goal_name: str, ordinal: int, limit: int):
        super().__init__(
            f"goal {goal_name!r} targets ordinal {ordinal}, "
            f"but the method has only {limit} instructions")
        self.goal_name = goal_name


class FieldClash(InstrumentError):
    pass


class AlreadyInstrumented(InstrumentError):
    pass


@dataclass
class InstrumentationPlan:
    class_name: str
    # (method name, descriptor) -> {instruction ordinal -> uid}
    sites: dict[tuple[str, str], dict[int, int]] = field(default_factory=dict)
    # (goal name, message) per goal this class cannot satisfy
    warnings: list[tuple[str, str]] = field(default_factory=list)
    matched_goals: list[str] = field(default_factory=list)

    @property
    def site_count(self) -> int:
        return sum(len(s) for s in self.sites.values())


def build_plan(goals: list[CoverageGoal], uids: dict[str, int],
               model: ClassModel) -> InstrumentationPlan:
    """Select the goals whose function lives in this class.

    Goals for other classes, missing methods, or abstract/native methods
    become warnings; an in-range check on the ordinal is an error because it
    means the goal file and the class file disagree.
    """
    plan = InstrumentationPlan(model.class_name)
    for goal in goals:
        cls, method_name, descriptor = parse_function_signature(goal.function)
        if cls != model.class_name:
            plan.warnings.append(
                (goal.name, f"targets class {cls}, not {model.class_name}"))
            continue
        method = model.find_method(method_name, descriptor)
        if method is None:
            plan.warnings.append(
                (goal.name, f"no method {method_name}:{descriptor} in {model.class_name}"))
            continue
        if method.access_flags & (ACC_ABSTRACT | ACC_NATIVE) or method.code is None:
            plan.warnings.append(
                (goal.name, f"method {method_name}:{descriptor} has no code"))
            continue
        limit = len(method.code.instructions)
        if goal.bytecode_index >= limit:
            raise OrdinalOutOfRange(goal.name, goal.bytecode_index, limit)
        sites = plan.sites.setdefault((method_name, descriptor), {})
        sites[goal.bytecode_index] = uids[goal_key(goal)]
        plan.matched_goals.append(goal.name)
    return plan


def instrument_method(model: ClassModel, code: CodeModel, sites: dict[int, int]) -> None:
    """Insert the recording sequence before each site, highest ordinal first."""
    if not sites:
        return
    pool = model.pool
    field_ref = pool.add_fieldref(model.class_name, RECORDER_FIELD, RECORDER_DESC)
    record_ref = pool.add_methodref(RECORDER_CLASS, RECORD_METHOD, RECORD_DESC)
    for ordinal in sorted(sites, reverse=True):
        uid_index = pool.add_integer(sites[ordinal])
        # the writer promotes ldc to ldc_w when the pool index needs two bytes
        code.insert(ordinal, [
            Instruction("getstatic", pool=field_ref),
            Instruction("ldc", pool=uid_index),
            Instruction("invokevirtual", pool=record_ref),
        ])
    code.max_stack += 2


def ensure_runtime_field(model: ClassModel) -> ClassModel:
    """Guarantee the recorder field exists and is set by the class initializer.

    Idempotent: if the field is already present with the right descriptor
    nothing changes. A field of the same name with a different descriptor is
    a clash.
    """
    existing = model.find_field(RECORDER_FIELD)
    if existing is not None:
        if model.field_descriptor(existing) != RECORDER_DESC:
            raise FieldClash(
                f"field {RECORDER_FIELD} exists with descriptor "
                f"{model.field_descriptor(existing)!r}")
        return model

    pool = model.pool
    model.fields.append(FieldModel(
        access_flags=ACC_STATIC,
        name_index=pool.add_utf8(RECORDER_FIELD),
        descriptor_index=pool.add_utf8(RECORDER_DESC),
        attributes=[],
    ))
    init_seq = [
        Instruction("invokestatic",
                    pool=pool.add_methodref(RECORDER_CLASS, GET_INSTANCE_METHOD,
                                            GET_INSTANCE_DESC)),
        Instruction("putstatic",
                    pool=pool.add_fieldref(model.class_name, RECORDER_FIELD,
                                           RECORDER_DESC)),
    ]
    clinit = model.find_method("<clinit>", "()V")
    if clinit is None:
        code = CodeModel(
            name_index=pool.add_utf8("Code"),
            max_stack=1,
            max_locals=0,
            instructions=init_seq + [Instruction("return")],
        )
        model.methods.append(MethodModel(
            access_flags=ACC_STATIC,
            name_index=pool.add_utf8("<clinit>"),
            descriptor_index=pool.add_utf8("()V"),
            attributes=[code],
        ))
    else:
        code = clinit.code
        if code is None:
            raise FieldClash("<clinit> exists but has no code")
        # pure prepend: the original body, including branches to its first
        # instruction, must behave as before
        code.insert(0, init_seq, retarget=False)
        code.max_stack = max(code.max_stack, 1)
    return model


def instrument_class(data: bytes, goals: list[CoverageGoal],
                     uids: dict[str, int]) -> tuple[bytes, list[int], list[tuple[str, str]]]:
    """Parse, plan, rewrite and re-emit one class.

    Returns (class bytes, instrumented UIDs ascending, warnings). A class with
    no matching goals comes back byte-identical.
    """
    model = parse_class(data)
    plan = build_plan(goals, uids, model)
    if plan.site_count == 0:
        return data, [], plan.warnings

    existing = model.find_field(RECORDER_FIELD)
    if existing is not None:
        if model.field_descriptor(existing) == RECORDER_DESC:
            raise AlreadyInstrumented(
                f"{model.class_name} already carries field {RECORDER_FIELD}")
        raise FieldClash(
            f"{model.class_name} has a field named {RECORDER_FIELD} with "
            f"descriptor {model.field_descriptor(existing)!r}")

    placed: list[int] = []
    for (method_name, descriptor), sites in plan.sites.items():
        method = model.find_method(method_name, descriptor)
        instrument_method(model, method.code, sites)
        placed.extend(sites.values())
    ensure_runtime_field(model)
    return emit_class(model), sorted(placed), plan.warnings
