"""Errors raised while decoding or encoding class files."""


class ClassFileError(Exception):
    """Base class for all class-file processing failures."""


class MalformedClassFile(ClassFileError):
    """Structurally invalid class file (bad magic, truncation, bad pool ref)."""

    def __init__(self, offset: int, reason: str):
        super().__init__(f"malformed class file at byte {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class MalformedCode(ClassFileError):
    """Invalid instruction stream inside a Code attribute."""

    def __init__(self, offset: int, reason: str):
        super().__init__(f"malformed code at byte {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class EncodeOverflow(ClassFileError):
    """A recomputed offset or length cannot be represented in the format."""


class PoolOverflow(ClassFileError):
    """Constant pool grew past the 16-bit entry count limit."""
