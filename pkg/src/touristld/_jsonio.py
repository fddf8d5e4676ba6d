"""JSON file loading with positioned errors and schema checks."""

from __future__ import annotations

import json
from typing import IO, Any, Union

import jsonschema

from .errors import FormatError

Source = Union[bytes, str, IO[bytes]]


def read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, str):
        return source.encode("utf-8")
    return source.read()


def load_json(source: Source, schema: dict | None = None, *, what: str = "document", **kwargs: Any) -> Any:
    """Decode UTF-8 JSON; syntax errors carry line/column, schema errors a path."""
    raw = read_bytes(source)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{what} is not valid UTF-8: {exc.reason}") from exc
    try:
        data = json.loads(text, **kwargs)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON in {what}: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    if schema is not None:
        check_schema(data, schema, what=what)
    return data


def check_schema(data: Any, schema: dict, *, what: str) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise FormatError(f"malformed {what}: {err.message}", path=pointer)


def dump_json(data: Any) -> bytes:
    """Stable pretty-printed JSON for files that humans also read."""
    return (json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True) + "\n").encode("utf-8")


PACKAGE_PREFIX = "package:"


def read_ref(ref: str) -> bytes:
    """Read a file path, or ``package:<relative path>`` from the bundled data directory."""
    if ref.startswith(PACKAGE_PREFIX):
        from importlib import resources

        return resources.files("touristld").joinpath("data", ref[len(PACKAGE_PREFIX):]).read_bytes()
    with open(ref, "rb") as fh:
        return fh.read()
