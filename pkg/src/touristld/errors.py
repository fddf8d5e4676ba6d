"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class TouristLDError(Exception):
    """Base class for every error raised by this package."""


class FormatError(TouristLDError):
    """A file does not follow its expected format.

    ``line``/``column`` are set for syntax errors, ``path`` for structural
    ones (a JSON-pointer-like location inside the document).
    """

    def __init__(
        self,
        message: str,
        *,
        line: int | None = None,
        column: int | None = None,
        path: str | None = None,
    ) -> None:
        self.line = line
        self.column = column
        self.path = path
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if path:
            where.append(f"at {path}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.message = message


# vocabulary / domain specification


class UnknownTypeError(TouristLDError):
    def __init__(self, name: str) -> None:
        super().__init__(f"unknown type: {name}")
        self.name = name


class UnknownPropertyError(TouristLDError):
    def __init__(self, name: str, context: str | None = None) -> None:
        msg = f"unknown property: {name}"
        if context:
            msg += f" (in {context})"
        super().__init__(msg)
        self.name = name


class CycleError(TouristLDError):
    def __init__(self, cycle: list[str]) -> None:
        super().__init__("subtype cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class DanglingReferenceError(TouristLDError):
    def __init__(self, missing: str, referenced_by: str) -> None:
        super().__init__(f"{referenced_by} references undefined type {missing}")
        self.missing = missing
        self.referenced_by = referenced_by


class RangeNotNarrowingError(TouristLDError):
    pass


class MissingClosureError(TouristLDError):
    pass


# XML and paths


class XmlSyntaxError(FormatError):
    pass


class ExternalEntityError(TouristLDError):
    pass


class PathSyntaxError(TouristLDError):
    def __init__(self, message: str, text: str, offset: int) -> None:
        super().__init__(f"{message} at offset {offset} in {text!r}")
        self.text = text
        self.offset = offset


# mapping


class MappingError(TouristLDError):
    """A mapping document is inconsistent with the domain specification."""


class UnknownTargetTypeError(MappingError):
    pass


class PropertyNotInSpecError(MappingError):
    pass


class RangeMismatchError(MappingError):
    pass


class EntityError(TouristLDError):
    """One entity failed during mapping execution."""

    def __init__(self, entity: str, source_path: str, message: str) -> None:
        super().__init__(f"{entity}: {message} [{source_path}]")
        self.entity = entity
        self.source_path = source_path
        self.message = message


class MappingExecutionError(TouristLDError):
    def __init__(self, errors: list[EntityError]) -> None:
        lines = "\n".join(f"  {e}" for e in errors)
        super().__init__(f"{len(errors)} entity error(s):\n{lines}")
        self.errors = errors


# annotations


class AnnotationParseError(FormatError):
    pass


# sources


class FetchError(TouristLDError):
    def __init__(self, source_tag: str, message: str) -> None:
        super().__init__(f"{source_tag}: {message}")
        self.source_tag = source_tag


class HttpStatusError(FetchError):
    def __init__(self, source_tag: str, status: int, attempts: int) -> None:
        super().__init__(source_tag, f"HTTP {status} after {attempts} attempt(s)")
        self.status = status
        self.attempts = attempts


class SourceNotFoundError(FetchError):
    pass


class ConfigError(TouristLDError):
    pass


# repository


class RepositoryError(TouristLDError):
    pass


class RepositoryLockedError(RepositoryError):
    pass


class IdCollisionError(TouristLDError):
    pass


# embedder


class DuplicateKeyError(FormatError):
    pass


class NotInjectableError(TouristLDError):
    pass
