"""JVM class file parsing, rewriting and re-serialization."""

from .errors import (
    ClassFileError,
    EncodeOverflow,
    MalformedClassFile,
    MalformedCode,
    PoolOverflow,
)
from .model import (
    ACC_ABSTRACT,
    ACC_NATIVE,
    ACC_STATIC,
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
from .pool import ConstantPool, CpEntry
from .reader import decode_code, parse_class
from .verify import SimulationError, simulate_stack
from .writer import emit_class, encode_code

__all__ = [
    "ACC_ABSTRACT", "ACC_NATIVE", "ACC_STATIC",
    "Attribute", "ClassFileError", "ClassModel", "CodeModel", "ConstantPool",
    "CpEntry", "EncodeOverflow", "ExceptionHandler", "FieldModel",
    "Instruction", "LineNumberTable", "MalformedClassFile", "MalformedCode",
    "MethodModel", "PoolOverflow", "SimulationError", "StackMapFrame",
    "StackMapTable", "SwitchData", "VerificationType",
    "decode_code", "emit_class", "encode_code", "parse_class", "simulate_stack",
]
