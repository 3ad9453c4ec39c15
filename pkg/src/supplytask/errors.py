"""Exception hierarchy.

Every error a caller can trigger with bad input derives from :class:`InputError`
and carries a human-readable ``location`` (line/column, byte offset, feature
path, ...). The CLI maps those to exit code 2; anything else is an internal
error (exit code 1).
"""
from __future__ import annotations


class SupplyTaskError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SupplyTaskError):
    """Bad input data or parameters."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.message = message
        self.location = location

    def __str__(self) -> str:
        if self.location:
            return f"{self.message} (at {self.location})"
        return self.message

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": self.message, "location": self.location}


class InvalidParams(InputError):
    pass


# -- geometry ---------------------------------------------------------------

class GeometryError(InputError):
    pass


class InvalidPolygon(GeometryError):
    pass


class DegenerateGeometry(GeometryError):
    pass


# -- text formats -----------------------------------------------------------

class ParseError(InputError):
    """Syntax error in a line-oriented text format."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(message, f"line {line}, column {column}")
        self.line = line
        self.column = column


class HeaderError(ParseError):
    pass


class DimensionMismatch(ParseError):
    pass


class JsonSyntaxError(InputError):
    def __init__(self, message: str, offset: int, line: int, column: int):
        super().__init__(message, f"offset {offset} (line {line}, column {column})")
        self.offset = offset
        self.line = line
        self.column = column


class GeoJsonError(InputError):
    def __init__(self, message: str, path: str, feature_index: int | None = None):
        super().__init__(message, path)
        self.path = path
        self.feature_index = feature_index


class ConfigError(InputError):
    def __init__(self, message: str, line: int | None = None, location: str | None = None):
        if location is None and line is not None:
            location = f"line {line}"
        super().__init__(message, location)
        self.line = line


class CsvError(InputError):
    def __init__(self, message: str, line: int, source: str | None = None):
        location = f"line {line}" if source is None else f"{source}, line {line}"
        super().__init__(message, location)
        self.line = line


class ModelFormatError(ParseError):
    pass


# -- pipeline stages --------------------------------------------------------

class UnknownComponent(InputError):
    pass


class InsufficientData(InputError):
    pass


class UnknownFootprintId(InputError):
    pass


class MissingTypologyRow(InputError):
    pass


class ZeroReference(InputError):
    pass
