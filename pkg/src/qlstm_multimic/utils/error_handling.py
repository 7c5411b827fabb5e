"""Error handling and custom exceptions for qlstm-multimic."""

from pydantic import ValidationError as PydanticValidationError


class QuatLabError(Exception):
    """Base exception for all library and harness errors."""

    pass


class DomainError(QuatLabError):
    """An argument lies outside the mathematical domain of an operation."""

    pass


class ShapeError(QuatLabError):
    """Array or quaternion extents do not match."""

    pass


class ConfigValidationError(QuatLabError):
    """Configuration validation failed."""

    pass


class DataError(QuatLabError):
    """Waveform, feature or dataset content is unusable."""

    pass


class NumericalError(QuatLabError):
    """A loss, gradient or recurrent state became non-finite."""

    pass


class CheckpointError(QuatLabError):
    """Checkpoint is missing, malformed or incompatible."""

    pass


def shape_mismatch(what: str, expected: object, got: object) -> ShapeError:
    """Build a ShapeError that names both extents.

    Args:
        what: Short description of the checked quantity
        expected: Extent required by the operation
        got: Extent actually supplied

    Returns:
        ShapeError with a uniform message
    """
    return ShapeError(f"{what}: expected {expected}, got {got}")


def translate_validation_error(error: PydanticValidationError, source: str = "config") -> ConfigValidationError:
    """Translate a pydantic ValidationError into a ConfigValidationError.

    Args:
        error: Original pydantic error
        source: Name of the document being validated (file path or model name)

    Returns:
        ConfigValidationError listing every failing field path
    """
    problems = []
    for item in error.errors():
        location = ".".join(str(part) for part in item.get("loc", ())) or "<root>"
        problems.append(f"{location}: {item.get('msg', 'invalid value')}")
    return ConfigValidationError(f"Invalid {source}: " + "; ".join(problems))
