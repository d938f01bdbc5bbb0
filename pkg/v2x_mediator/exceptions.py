from typing import Optional


class MediatorError(Exception):
    """Base class for every error raised by `v2x_mediator`."""


class InvalidValueError(MediatorError, ValueError):
    """A value type was constructed with fields that break its invariants."""


class GeoBoundsError(InvalidValueError):
    """Latitude or longitude outside the WGS84 range."""


class CodecError(MediatorError):
    """Base class for wire-format errors. `offset` is the byte position at fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnknownTagError(CodecError):
    pass


class VersionMismatchError(CodecError):
    pass


class TruncatedError(CodecError):
    pass


class InvariantViolationError(CodecError):
    pass


class ScenarioError(MediatorError):
    pass


class ScenarioParseError(ScenarioError):
    """The scenario file is not well-formed TOML, or a field has the wrong shape."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")
        self.line = line
        self.field = field


class ScenarioValidationError(ScenarioError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class TraceFormatError(MediatorError):
    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (trace line {line})")
        self.line = line
