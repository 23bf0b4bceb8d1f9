"""JVM type and method descriptor parsing."""

from __future__ import annotations


class DescriptorError(ValueError):
    pass


def _read_type(desc: str, pos: int) -> int:
    """Return the end position of one field type starting at pos."""
    if pos >= len(desc):
        raise DescriptorError(f"truncated descriptor {desc!r}")
    c = desc[pos]
    if c in "BCDFIJSZ":
        return pos + 1
    if c == "L":
        end = desc.find(";", pos)
        if end < 0 or end == pos + 1:
            raise DescriptorError(f"unterminated class type in {desc!r}")
        return end + 1
    if c == "[":
        return _read_type(desc, pos + 1)
    raise DescriptorError(f"bad type character {c!r} in {desc!r}")


def parse_field_descriptor(desc: str) -> str:
    end = _read_type(desc, 0)
    if end != len(desc):
        raise DescriptorError(f"trailing characters in field descriptor {desc!r}")
    return desc


def parse_method_descriptor(desc: str) -> tuple[list[str], str]:
    """Split "(IF)V" into (["I", "F"], "V")."""
    if not desc.startswith("("):
        raise DescriptorError(f"method descriptor must start with '(': {desc!r}")
    params: list[str] = []
    pos = 1
    while pos < len(desc) and desc[pos] != ")":
        end = _read_type(desc, pos)
        params.append(desc[pos:end])
        pos = end
    if pos >= len(desc):
        raise DescriptorError(f"unterminated parameter list in {desc!r}")
    pos += 1  # ')'
    if pos >= len(desc):
        raise DescriptorError(f"missing return type in {desc!r}")
    if desc[pos] == "V":
        if pos + 1 != len(desc):
            raise DescriptorError(f"trailing characters in {desc!r}")
        return params, "V"
    end = _read_type(desc, pos)
    if end != len(desc):
        raise DescriptorError(f"trailing characters in {desc!r}")
    return params, desc[pos:]


def slot_width(type_desc: str) -> int:
    """Operand-stack/local slots a value of this type occupies."""
    return 2 if type_desc in ("J", "D") else 1


def arg_slots(method_desc: str) -> int:
    params, _ = parse_method_descriptor(method_desc)
    return sum(slot_width(p) for p in params)


def return_slots(method_desc: str) -> int:
    _, ret = parse_method_descriptor(method_desc)
    return 0 if ret == "V" else slot_width(ret)
